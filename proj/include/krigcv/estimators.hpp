// Maximum Likelihood and virtual-LOO Cross Validation criteria, and the
// box-constrained multistart Nelder-Mead minimizer used to fit (sigma2, ell).

#ifndef KRIGCV_ESTIMATORS_HPP_
#define KRIGCV_ESTIMATORS_HPP_

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "krigcv/covkernel.hpp"
#include "krigcv/gplinalg.hpp"
#include "krigcv/sampling.hpp"

namespace krigcv {

/// A design together with its observation vector.
struct Dataset {
  Design design;
  Eigen::VectorXd y;

  Eigen::Index n() const { return design.n(); }
  void validate() const;
};

/// The estimated pair theta = (sigma2, ell).
struct Theta {
  double sigma2{1};
  double ell{1};
  bool operator==(const Theta&) const = default;
};

/// Fixed part of a model: smoothness and nugget.
struct ModelFamily {
  double nu{10};
  double delta{0.1 * 0.1};

  CovParams at(const Theta& theta) const { return {theta.sigma2, theta.ell, nu, delta}; }
  bool operator==(const ModelFamily&) const = default;
};

enum class Method { kML, kCV };

std::string_view to_string(Method m);
/// Parses "ml" or "cv" (case-insensitive). Throws std::invalid_argument.
Method parse_method(std::string_view s);

/// (1/n) log det R + (1/n) y^T R^{-1} y. Propagates NotPositiveDefinite.
double ml_criterion(const CovParams& theta, const Dataset& data);

/// Leave-one-out predictions via the virtual-LOO identity
/// yhat_i = y_i - (R^{-1} y)_i / (R^{-1})_ii. Requires n >= 2.
Eigen::VectorXd loo_predictions(const CovParams& theta, const Dataset& data);

/// (1/n) y^T R^{-1} diag(R^{-1})^{-2} R^{-1} y. Requires n >= 2.
double cv_criterion(const CovParams& theta, const Dataset& data);

/// Criterion values computed from an already factored covariance matrix.
double ml_criterion(const CholFactor<double>& factor, const Eigen::VectorXd& y);
double cv_criterion(const Matrix<double>& r_inverse, const Eigen::VectorXd& y);

/// Evaluates ML or CV over (sigma2, ell) for one dataset. The correlation
/// matrix of the most recent ell is cached, so sweeping sigma2 at fixed ell
/// costs one factorization per point. Not thread-safe.
class CriterionEvaluator {
 public:
  CriterionEvaluator(Method method, ModelFamily family, const Dataset& data);

  double operator()(const Theta& theta) const;
  Method method() const { return method_; }

 private:
  Method method_;
  ModelFamily family_;
  const Dataset& data_;
  mutable std::optional<double> cached_ell_;
  mutable Matrix<double> cached_corr_;
};

struct OptimizerConfig {
  int grid_sigma2{12};
  int grid_ell{12};
  /// Number of Nelder-Mead starting points (grid-local minima first).
  int starts{5};
  /// Stop when the simplex diameter in box-normalized coordinates drops
  /// below this value.
  double rel_tol{1e-4};
  int max_evals_per_start{400};

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

struct FitResult {
  Theta theta_hat;
  double criterion_value{0};
  int evaluations{0};
  bool converged{false};
};

/// Raised when the objective fails at every coarse-grid point.
class ObjectiveFailure : public std::runtime_error {
 public:
  explicit ObjectiveFailure(const std::string& what) : std::runtime_error(what) {}
};

using Objective = std::function<double(const Theta&)>;

/// Coarse grid (geometric in sigma2, uniform in ell, ell-major order) then
/// Nelder-Mead from the best grid points in (log sigma2, ell) with
/// projection onto the box. Objective exceptions count as +inf. Among equal
/// values the first one encountered wins.
FitResult minimize(const Objective& objective, const ParamBox& box, const OptimizerConfig& cfg);

/// Grid values of one axis of the coarse grid.
Eigen::VectorXd sigma2_grid(const ParamBox& box, int count);
Eigen::VectorXd ell_grid(const ParamBox& box, int count);

/// Fits theta by ML or CV on a dataset.
FitResult fit(Method method, const ModelFamily& family, const Dataset& data,
              const ParamBox& box, const OptimizerConfig& cfg);

}  // namespace krigcv

#endif  // KRIGCV_ESTIMATORS_HPP_
