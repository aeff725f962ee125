// Replication engine for the misspecified-nugget study: data generation,
// ML and CV fits, quality criteria and Table-1 style aggregation.

#ifndef KRIGCV_MONTECARLO_HPP_
#define KRIGCV_MONTECARLO_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "krigcv/covkernel.hpp"
#include "krigcv/criteria.hpp"
#include "krigcv/estimators.hpp"
#include "krigcv/sampling.hpp"

namespace krigcv {

inline constexpr double kWellSpecifiedDelta = 0.25 * 0.25;
inline constexpr double kMisspecifiedDelta = 0.1 * 0.1;

struct Scenario {
  std::string label{"misspecified"};
  TruthSpec truth{};
  double model_nu{10.0};
  double model_delta{kMisspecifiedDelta};
  ParamBox box{};
  int n{100};
  int d{1};
  int n_reps{1000};
  int quad_m{2000};
  QuadratureOrigin quad_origin{QuadratureOrigin::kIidUniform};
  std::uint64_t master_seed{20160701};
  OptimizerConfig optimizer{};

  ModelFamily family() const { return {model_nu, model_delta}; }
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

/// Observations and quadrature nodes of one replication. Depends only on
/// (truth, n, d, quadrature settings, master_seed, rep_index), so scenarios
/// that differ only in the model see identical data.
struct ReplicationData {
  Dataset data;
  QuadratureSet quad;
};

/// y = L_0 z with R_0 = L_0 L_0^T the true covariance of the observations.
Dataset simulate_dataset(const TruthSpec& truth, int n, int d, std::uint64_t master_seed,
                         std::uint64_t rep_index);

ReplicationData simulate_replication_data(const Scenario& scenario, std::uint64_t rep_index);

struct ReplicationRecord {
  std::uint64_t rep_index{0};
  Theta theta_ml;
  Theta theta_cv;
  double d_ml{0}, d_cv{0};
  double e_ml{0}, e_cv{0};
  double ml_value{0}, cv_value{0};
  int evals_ml{0}, evals_cv{0};
  double seconds{0};

  bool operator==(const ReplicationRecord&) const = default;
};

class ReplicationFailure : public std::runtime_error {
 public:
  ReplicationFailure(std::uint64_t rep_index, const std::string& what)
      : std::runtime_error("replication " + std::to_string(rep_index) + ": " + what),
        rep_index_(rep_index) {}
  std::uint64_t rep_index() const { return rep_index_; }

 private:
  std::uint64_t rep_index_;
};

/// Deterministic given (scenario, rep_index). Throws ReplicationFailure.
ReplicationRecord run_replication(const Scenario& scenario, std::uint64_t rep_index);

struct EstimatorSummary {
  double mean_ell{0};
  double sd_ell{0};
  double mean_e{0};
  double mean_d{0};
  std::size_t count{0};
  /// False when a single record makes the sample deviation undefined; the
  /// deviation is then reported as 0.
  bool sd_defined{false};
};

/// Equal-width histogram over the observed range.
struct Histogram {
  std::string quantity;   // ell, D or E
  std::string estimator;  // ml or cv
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

struct Aggregates {
  EstimatorSummary ml;
  EstimatorSummary cv;
  std::vector<Histogram> histograms;
};

/// Mean and n-1 sample deviation.
struct MeanSd {
  double mean{0};
  double sd{0};
  bool sd_defined{false};
};
MeanSd mean_sd(const std::vector<double>& values);

Histogram make_histogram(std::string quantity, std::string estimator,
                         const std::vector<double>& values, int bins);

/// Records are sorted by rep_index before reduction. Throws
/// std::invalid_argument on an empty record set.
Aggregates aggregate(std::vector<ReplicationRecord> records, int histogram_bins = 30);

struct ExperimentReport {
  Scenario scenario;
  std::vector<ReplicationRecord> records;  // sorted by rep_index
  std::vector<std::string> failures;
  Aggregates aggregates;
};

struct ExperimentOptions {
  int workers{1};
  int histogram_bins{30};
  /// Execution order of replication indices; empty means ascending. Used to
  /// check order independence.
  std::vector<std::uint64_t> order;
};

/// Runs all replications on a worker pool. Failed replications are logged
/// and excluded; throws std::runtime_error only if every replication fails.
ExperimentReport run_experiment(const Scenario& scenario, const ExperimentOptions& options = {});

}  // namespace krigcv

#endif  // KRIGCV_MONTECARLO_HPP_
