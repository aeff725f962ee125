#include "krigcv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <thread>

namespace krigcv {

void Scenario::validate() const {
  truth.validate();
  family().at(Theta{}).validate_family_member(kDefaultNuggetFloor);
  box.validate();
  optimizer.validate();
  if (n < 2) throw std::invalid_argument("Scenario: n must be >= 2");
  if (d < 1) throw std::invalid_argument("Scenario: d must be >= 1");
  if (n_reps < 1) throw std::invalid_argument("Scenario: n_reps must be >= 1");
  if (quad_m < 1) throw std::invalid_argument("Scenario: quad_m must be >= 1");
}

Dataset simulate_dataset(const TruthSpec& truth, int n, int d, std::uint64_t master_seed,
                         std::uint64_t rep_index) {
  truth.validate();
  Design design = draw_design(n, d, derive_seed({master_seed, rep_index, StreamTag::kDesign}));
  const auto factor = cholesky(build_cov(truth.cov, design.points));
  Rng field(derive_seed({master_seed, rep_index, StreamTag::kField}));
  Eigen::VectorXd y = sample_joint(factor, field.normals(n));
  return {std::move(design), std::move(y)};
}

ReplicationData simulate_replication_data(const Scenario& scenario, std::uint64_t rep_index) {
  Dataset data =
      simulate_dataset(scenario.truth, scenario.n, scenario.d, scenario.master_seed, rep_index);
  QuadratureSet quad = draw_quadrature(
      scenario.quad_m, scenario.d, data.design.side(), scenario.quad_origin,
      derive_seed({scenario.master_seed, rep_index, StreamTag::kQuadrature}));
  return {std::move(data), std::move(quad)};
}

namespace {

struct Quality {
  double kl;
  double ispe;
};

Quality evaluate_quality(const CovParams& spec, const ReplicationData& rd,
                         const Matrix<double>& r0, double logdet_r0,
                         const ConditionalMoments& moments) {
  const auto factor = cholesky(build_cov(spec, rd.data.design.points));
  const Matrix<double> rinv = inverse(factor);
  const Eigen::VectorXd pred =
      cross_cov(spec, rd.quad.nodes, rd.data.design.points) * (rinv * rd.data.y);
  return {kl_divergence(factor, rinv, r0, logdet_r0), ispe_from_predictions(pred, moments)};
}

}  // namespace

ReplicationRecord run_replication(const Scenario& scenario, std::uint64_t rep_index) {
  const auto start = std::chrono::steady_clock::now();
  ReplicationRecord rec;
  rec.rep_index = rep_index;
  try {
    scenario.validate();
    const ReplicationData rd = simulate_replication_data(scenario, rep_index);
    const ModelFamily family = scenario.family();

    const FitResult ml = fit(Method::kML, family, rd.data, scenario.box, scenario.optimizer);
    const FitResult cv = fit(Method::kCV, family, rd.data, scenario.box, scenario.optimizer);

    const Matrix<double> r0 = build_cov(scenario.truth.cov, rd.data.design.points);
    const double logdet_r0 = logdet(cholesky(r0));
    const ConditionalMoments moments =
        conditional_moments(scenario.truth, rd.data, rd.quad.nodes);

    const Quality q_ml = evaluate_quality(family.at(ml.theta_hat), rd, r0, logdet_r0, moments);
    const Quality q_cv = evaluate_quality(family.at(cv.theta_hat), rd, r0, logdet_r0, moments);

    rec.theta_ml = ml.theta_hat;
    rec.theta_cv = cv.theta_hat;
    rec.ml_value = ml.criterion_value;
    rec.cv_value = cv.criterion_value;
    rec.evals_ml = ml.evaluations;
    rec.evals_cv = cv.evaluations;
    rec.d_ml = q_ml.kl;
    rec.d_cv = q_cv.kl;
    rec.e_ml = q_ml.ispe;
    rec.e_cv = q_cv.ispe;

    for (double v : {rec.d_ml, rec.d_cv, rec.e_ml, rec.e_cv, rec.ml_value, rec.cv_value})
      if (!std::isfinite(v)) throw std::runtime_error("non-finite criterion value");
    if (rec.d_ml < -1e-10 || rec.d_cv < -1e-10)
      throw std::runtime_error("negative Kullback-Leibler divergence");
    if (rec.e_ml < 0 || rec.e_cv < 0) throw std::runtime_error("negative prediction error");
  } catch (const std::exception& e) {
    throw ReplicationFailure(rep_index, e.what());
  }
  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

MeanSd mean_sd(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_sd: no values");
  MeanSd out;
  double sum = 0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  out.sd_defined = true;
  return out;
}

Histogram make_histogram(std::string quantity, std::string estimator,
                         const std::vector<double>& values, int bins) {
  if (bins < 1) throw std::invalid_argument("make_histogram: bins must be >= 1");
  if (values.empty()) throw std::invalid_argument("make_histogram: no values");
  Histogram h{std::move(quantity), std::move(estimator), {}, {}};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double hi = (*mx > *mn) ? *mx : *mn + 1.0;
  const double width = (hi - lo) / bins;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k < bins; ++k) h.edges[static_cast<std::size_t>(k)] = lo + k * width;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto idx = static_cast<long>(std::floor((v - lo) / width));
    idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

Aggregates aggregate(std::vector<ReplicationRecord> records, int histogram_bins) {
  if (records.empty()) throw std::invalid_argument("aggregate: no successful records");
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.rep_index < b.rep_index; });

  auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(getter(r));
    return v;
  };
  auto summarize = [&](const std::vector<double>& ell, const std::vector<double>& e,
                       const std::vector<double>& d) {
    EstimatorSummary s;
    const MeanSd ms = mean_sd(ell);
    s.mean_ell = ms.mean;
    s.sd_ell = ms.sd;
    s.sd_defined = ms.sd_defined;
    s.mean_e = mean_sd(e).mean;
    s.mean_d = mean_sd(d).mean;
    s.count = records.size();
    return s;
  };

  const auto ell_ml = column([](const auto& r) { return r.theta_ml.ell; });
  const auto ell_cv = column([](const auto& r) { return r.theta_cv.ell; });
  const auto e_ml = column([](const auto& r) { return r.e_ml; });
  const auto e_cv = column([](const auto& r) { return r.e_cv; });
  const auto d_ml = column([](const auto& r) { return r.d_ml; });
  const auto d_cv = column([](const auto& r) { return r.d_cv; });

  Aggregates agg;
  agg.ml = summarize(ell_ml, e_ml, d_ml);
  agg.cv = summarize(ell_cv, e_cv, d_cv);
  agg.histograms = {
      make_histogram("ell", "ml", ell_ml, histogram_bins),
      make_histogram("ell", "cv", ell_cv, histogram_bins),
      make_histogram("D", "ml", d_ml, histogram_bins),
      make_histogram("D", "cv", d_cv, histogram_bins),
      make_histogram("E", "ml", e_ml, histogram_bins),
      make_histogram("E", "cv", e_cv, histogram_bins),
  };
  return agg;
}

ExperimentReport run_experiment(const Scenario& scenario, const ExperimentOptions& options) {
  scenario.validate();
  std::vector<std::uint64_t> order = options.order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(scenario.n_reps));
    std::iota(order.begin(), order.end(), std::uint64_t{0});
  }

  std::vector<std::optional<ReplicationRecord>> slots(order.size());
  std::vector<std::string> errors(order.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < order.size(); k = next++) {
      try {
        slots[k] = run_replication(scenario, order[k]);
      } catch (const ReplicationFailure& e) {
        errors[k] = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(order.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  ExperimentReport report;
  report.scenario = scenario;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (slots[k]) {
      report.records.push_back(*slots[k]);
    } else {
      report.failures.push_back(errors[k]);
    }
  }
  std::sort(report.records.begin(), report.records.end(),
            [](const auto& a, const auto& b) { return a.rep_index < b.rep_index; });
  std::sort(report.failures.begin(), report.failures.end());
  for (const auto& f : report.failures) std::cerr << "[" << scenario.label << "] " << f << '\n';
  if (report.records.empty())
    throw std::runtime_error("run_experiment: every replication failed (" +
                             std::to_string(report.failures.size()) + ")");
  if (!report.failures.empty())
    std::cerr << "[" << scenario.label << "] " << report.failures.size() << " of "
              << order.size() << " replications failed and were excluded\n";
  report.aggregates = aggregate(report.records, options.histogram_bins);
  return report;
}

}  // namespace krigcv
