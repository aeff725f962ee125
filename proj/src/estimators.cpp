#include "krigcv/estimators.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace krigcv {

void Dataset::validate() const {
  design.validate();
  if (y.size() != design.n())
    throw std::invalid_argument("Dataset: observation count " + std::to_string(y.size()) +
                                " does not match design size " + std::to_string(design.n()));
  if (!y.allFinite()) throw std::invalid_argument("Dataset: non-finite observation");
}

std::string_view to_string(Method m) { return m == Method::kML ? "ml" : "cv"; }

Method parse_method(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ml") return Method::kML;
  if (lower == "cv") return Method::kCV;
  throw std::invalid_argument("unknown method '" + std::string(s) + "', expected ml or cv");
}

double ml_criterion(const CholFactor<double>& factor, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const double quad = solve_lower(factor, y).squaredNorm();
  return (logdet(factor) + quad) / n;
}

double cv_criterion(const Matrix<double>& r_inverse, const Eigen::VectorXd& y) {
  const Eigen::VectorXd a = r_inverse * y;
  const Eigen::ArrayXd resid = a.array() / r_inverse.diagonal().array();
  return resid.square().mean();
}

double ml_criterion(const CovParams& theta, const Dataset& data) {
  theta.validate();
  return ml_criterion(cholesky(build_cov(theta, data.design.points)), data.y);
}

Eigen::VectorXd loo_predictions(const CovParams& theta, const Dataset& data) {
  theta.validate();
  if (data.n() < 2) throw std::invalid_argument("loo_predictions: need n >= 2");
  const Matrix<double> rinv = inverse(cholesky(build_cov(theta, data.design.points)));
  const Eigen::VectorXd a = rinv * data.y;
  return data.y.array() - a.array() / rinv.diagonal().array();
}

double cv_criterion(const CovParams& theta, const Dataset& data) {
  theta.validate();
  if (data.n() < 2) throw std::invalid_argument("cv_criterion: need n >= 2");
  // CV depends on (sigma2, delta) only through delta / sigma2.
  const Matrix<double> corr = correlation_matrix(MaternKernel<double>(theta), data.design.points);
  return cv_criterion(inverse(cholesky(cov_from_correlation(corr, 1.0, theta.delta / theta.sigma2))),
                      data.y);
}

CriterionEvaluator::CriterionEvaluator(Method method, ModelFamily family, const Dataset& data)
    : method_(method), family_(family), data_(data) {
  if (method == Method::kCV && data.n() < 2)
    throw std::invalid_argument("CV criterion needs n >= 2");
}

double CriterionEvaluator::operator()(const Theta& theta) const {
  const CovParams spec = family_.at(theta);
  spec.validate();
  if (!cached_ell_ || *cached_ell_ != theta.ell) {
    cached_corr_ = correlation_matrix(MaternKernel<double>(spec), data_.design.points);
    cached_ell_ = theta.ell;
  }
  if (method_ == Method::kML)
    return ml_criterion(cholesky(cov_from_correlation(cached_corr_, spec.sigma2, spec.delta)),
                        data_.y);
  return cv_criterion(
      inverse(cholesky(cov_from_correlation(cached_corr_, 1.0, spec.delta / spec.sigma2))),
      data_.y);
}

void OptimizerConfig::validate() const {
  if (grid_sigma2 < 1 || grid_ell < 1)
    throw std::invalid_argument("OptimizerConfig: grid sizes must be >= 1");
  if (starts < 0) throw std::invalid_argument("OptimizerConfig: starts must be >= 0");
  if (!(rel_tol > 0)) throw std::invalid_argument("OptimizerConfig: rel_tol must be positive");
  if (max_evals_per_start < 3)
    throw std::invalid_argument("OptimizerConfig: max_evals_per_start must be >= 3");
}

namespace {

double grid_fraction(int i, int count) {
  return count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1);
}

// Box-normalized coordinates: v0 = position of log sigma2, v1 = position of ell.
struct BoxMap {
  ParamBox box;
  double log_lo, log_width;

  explicit BoxMap(const ParamBox& b)
      : box(b), log_lo(std::log(b.sigma2.lo)), log_width(std::log(b.sigma2.hi) - log_lo) {}

  // Faces of the unit square map exactly onto the box bounds.
  double sigma2(double v) const {
    if (v <= 0) return box.sigma2.lo;
    if (v >= 1) return box.sigma2.hi;
    return box.sigma2.clamp(std::exp(log_lo + v * log_width));
  }
  double ell(double v) const {
    if (v <= 0) return box.ell.lo;
    if (v >= 1) return box.ell.hi;
    return box.ell.clamp(box.ell.lo + v * box.ell.width());
  }
  Theta theta(const Eigen::Vector2d& v) const { return {sigma2(v(0)), ell(v(1))}; }
};

struct Vertex {
  Eigen::Vector2d v;
  Theta theta;
  double f;
};

class CountingObjective {
 public:
  CountingObjective(const Objective& objective, const BoxMap& map)
      : objective_(objective), map_(map) {}

  Vertex operator()(const Eigen::Vector2d& raw) {
    const Eigen::Vector2d v = raw.cwiseMax(0.0).cwiseMin(1.0);
    const Theta theta = map_.theta(v);
    return {v, theta, (*this)(theta)};
  }

  double operator()(const Theta& theta) {
    ++count_;
    double f;
    try {
      f = objective_(theta);
    } catch (const std::exception&) {
      f = std::numeric_limits<double>::infinity();
    }
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  }

  int count() const { return count_; }

 private:
  const Objective& objective_;
  const BoxMap& map_;
  int count_{0};
};

struct StartResult {
  Vertex best;
  bool converged;
};

double simplex_diameter(const std::array<Vertex, 3>& s) {
  double d = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) d = std::max(d, (s[i].v - s[j].v).norm());
  return d;
}

StartResult nelder_mead(CountingObjective& eval, const Vertex& start, double step,
                        const OptimizerConfig& cfg) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  const int budget_end = eval.count() + cfg.max_evals_per_start;

  std::array<Vertex, 3> s{start, start, start};
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::Vector2d v = start.v;
    v(axis) += (v(axis) + step <= 1.0) ? step : -step;
    s[static_cast<std::size_t>(axis) + 1] = eval(v);
  }

  bool converged = false;
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  while (true) {
    std::stable_sort(s.begin(), s.end(), by_value);
    if (simplex_diameter(s) < cfg.rel_tol) {
      converged = true;
      break;
    }
    if (eval.count() >= budget_end) break;

    const Eigen::Vector2d centroid = 0.5 * (s[0].v + s[1].v);
    const Vertex reflected = eval(centroid + kReflect * (centroid - s[2].v));
    if (reflected.f < s[0].f) {
      const Vertex expanded = eval(centroid + kExpand * (reflected.v - centroid));
      s[2] = expanded.f < reflected.f ? expanded : reflected;
      continue;
    }
    if (reflected.f < s[1].f) {
      s[2] = reflected;
      continue;
    }
    const bool outside = reflected.f < s[2].f;
    const Vertex contracted =
        outside ? eval(centroid + kContract * (reflected.v - centroid))
                : eval(centroid + kContract * (s[2].v - centroid));
    if (outside ? contracted.f <= reflected.f : contracted.f < s[2].f) {
      s[2] = contracted;
      continue;
    }
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = eval(s[0].v + kShrink * (s[i].v - s[0].v));
  }
  std::stable_sort(s.begin(), s.end(), by_value);
  return {s[0], converged};
}

}  // namespace

Eigen::VectorXd sigma2_grid(const ParamBox& box, int count) {
  const BoxMap map(box);
  Eigen::VectorXd g(count);
  for (int i = 0; i < count; ++i) g(i) = map.sigma2(grid_fraction(i, count));
  return g;
}

Eigen::VectorXd ell_grid(const ParamBox& box, int count) {
  const BoxMap map(box);
  Eigen::VectorXd g(count);
  for (int i = 0; i < count; ++i) g(i) = map.ell(grid_fraction(i, count));
  return g;
}

FitResult minimize(const Objective& objective, const ParamBox& box, const OptimizerConfig& cfg) {
  box.validate();
  cfg.validate();
  const BoxMap map(box);
  CountingObjective eval(objective, map);

  std::vector<Vertex> grid;
  grid.reserve(static_cast<std::size_t>(cfg.grid_sigma2 * cfg.grid_ell));
  for (int j = 0; j < cfg.grid_ell; ++j) {
    for (int i = 0; i < cfg.grid_sigma2; ++i) {
      grid.push_back(eval(Eigen::Vector2d(grid_fraction(i, cfg.grid_sigma2),
                                          grid_fraction(j, cfg.grid_ell))));
    }
  }

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a].f < grid[b].f; });
  if (!std::isfinite(grid[order.front()].f))
    throw ObjectiveFailure("minimize: objective failed at every grid point");

  // Starting points: grid-local minima (no better 8-neighbour) by value,
  // then the remaining grid points by value.
  const int gs = cfg.grid_sigma2, gl = cfg.grid_ell;
  auto local_min = [&](std::size_t idx) {
    const int i = static_cast<int>(idx) % gs, j = static_cast<int>(idx) / gs;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int ii = i + di, jj = j + dj;
        if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= gs || jj >= gl) continue;
        if (grid[static_cast<std::size_t>(jj * gs + ii)].f < grid[idx].f) return false;
      }
    return true;
  };
  std::stable_partition(order.begin(), order.end(), local_min);

  Vertex best = grid[order.front()];
  bool converged = false;
  const double step =
      1.0 / static_cast<double>(std::max(1, std::max(cfg.grid_sigma2, cfg.grid_ell) - 1));
  const std::size_t starts = std::min(order.size(), static_cast<std::size_t>(cfg.starts));
  for (std::size_t k = 0; k < starts; ++k) {
    const Vertex& start = grid[order[k]];
    if (!std::isfinite(start.f)) break;
    const StartResult r = nelder_mead(eval, start, step, cfg);
    if (r.best.f < best.f || (k == 0 && r.best.f <= best.f)) {
      best = r.best;
      converged = r.converged;
    }
  }
  return {best.theta, best.f, eval.count(), converged};
}

FitResult fit(Method method, const ModelFamily& family, const Dataset& data,
              const ParamBox& box, const OptimizerConfig& cfg) {
  data.validate();
  family.at(Theta{}).validate_family_member(kDefaultNuggetFloor);
  const CriterionEvaluator evaluator(method, family, data);
  return minimize([&evaluator](const Theta& t) { return evaluator(t); }, box, cfg);
}

}  // namespace krigcv
