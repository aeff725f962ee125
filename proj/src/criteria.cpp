#include "krigcv/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace krigcv {

std::string_view to_string(QuadratureOrigin o) {
  return o == QuadratureOrigin::kIidUniform ? "iid-uniform" : "regular-grid";
}

QuadratureOrigin parse_quadrature_origin(std::string_view s) {
  if (s == "iid-uniform") return QuadratureOrigin::kIidUniform;
  if (s == "regular-grid") return QuadratureOrigin::kRegularGrid;
  throw std::invalid_argument("unknown quadrature origin '" + std::string(s) +
                              "', expected iid-uniform or regular-grid");
}

QuadratureSet draw_quadrature(Eigen::Index m, Eigen::Index d, double side,
                              QuadratureOrigin origin, std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("draw_quadrature: need m >= 1 and d >= 1");
  if (!(side > 0)) throw std::invalid_argument("draw_quadrature: side must be positive");
  QuadratureSet quad{Eigen::MatrixXd(m, d), origin};
  if (origin == QuadratureOrigin::kIidUniform) {
    Rng rng(seed);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = 0; k < d; ++k) quad.nodes(i, k) = rng.uniform(0.0, side);
    return quad;
  }
  const auto per_axis = static_cast<Eigen::Index>(
      std::llround(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d))));
  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < d; ++k) total *= per_axis;
  if (total != m)
    throw std::invalid_argument("draw_quadrature: regular grid needs m = k^d, got m = " +
                                std::to_string(m));
  const double h = side / static_cast<double>(per_axis);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index rest = i;
    for (Eigen::Index k = 0; k < d; ++k) {
      quad.nodes(i, k) = (static_cast<double>(rest % per_axis) + 0.5) * h;
      rest /= per_axis;
    }
  }
  return quad;
}

Eigen::VectorXd predict(const CovParams& theta, const Dataset& data, const Eigen::MatrixXd& nodes) {
  theta.validate();
  const auto factor = cholesky(build_cov(theta, data.design.points));
  const Eigen::VectorXd alpha = solve(factor, data.y);
  return cross_cov(theta, nodes, data.design.points) * alpha;
}

double predictor(const CovParams& theta, const Dataset& data, const Eigen::VectorXd& t) {
  if (t.size() != data.design.d()) throw std::invalid_argument("predictor: dimension mismatch");
  return predict(theta, data, Eigen::MatrixXd(t.transpose()))(0);
}

double kl_divergence(const CholFactor<double>& theta_factor, const Matrix<double>& theta_inverse,
                     const Matrix<double>& r0, double logdet_r0) {
  const double n = static_cast<double>(r0.rows());
  const double trace = r0.cwiseProduct(theta_inverse).sum();
  return (logdet(theta_factor) - logdet_r0 + trace) / n - 1.0;
}

double kl_divergence(const CovParams& theta, const TruthSpec& truth, const Design& design) {
  theta.validate();
  truth.validate();
  if (truth.cov.delta == 0.0) {
    try {
      design.validate();
    } catch (const DuplicatePoints& e) {
      throw NotPositiveDefinite(std::string("kl_divergence: noise-free truth on a design with "
                                            "duplicated points: ") + e.what());
    }
  }
  const Matrix<double> r0 = build_cov(truth.cov, design.points);
  const auto f0 = cholesky(r0);
  const auto ft = cholesky(build_cov(theta, design.points));
  return kl_divergence(ft, inverse(ft), r0, logdet(f0));
}

namespace {

struct TruthSolve {
  ConditionalMoments moments;
  Eigen::MatrixXd half;  // L0^{-1} r0(nodes), n x m
};

TruthSolve truth_solve(const TruthSpec& truth, const Dataset& data, const Eigen::MatrixXd& nodes) {
  truth.validate();
  data.validate();
  if (nodes.cols() != data.design.d())
    throw std::invalid_argument("conditional moments: node dimension mismatch");
  const auto f0 = cholesky(build_cov(truth.cov, data.design.points));
  const Eigen::MatrixXd r0 = cross_cov(truth.cov, data.design.points, nodes);
  TruthSolve out;
  out.half = solve_lower(f0, r0);
  const Eigen::VectorXd w = solve_lower(f0, data.y);
  out.moments.mean = out.half.transpose() * w;
  out.moments.variance =
      (truth.cov.sigma2 - out.half.colwise().squaredNorm().array()).cwiseMax(0.0).matrix();
  return out;
}

}  // namespace

ConditionalMoments conditional_moments(const TruthSpec& truth, const Dataset& data,
                                       const Eigen::MatrixXd& nodes) {
  return truth_solve(truth, data, nodes).moments;
}

double ispe_from_predictions(const Eigen::VectorXd& predictions, const ConditionalMoments& truth) {
  if (predictions.size() != truth.mean.size())
    throw std::invalid_argument("ispe: prediction count mismatch");
  return ((predictions - truth.mean).array().square() + truth.variance.array()).mean();
}

double ispe_given_data(const CovParams& theta, const TruthSpec& truth, const Dataset& data,
                       const QuadratureSet& quad) {
  const ConditionalMoments moments = conditional_moments(truth, data, quad.nodes);
  return ispe_from_predictions(predict(theta, data, quad.nodes), moments);
}

ConditionalSampler::ConditionalSampler(const TruthSpec& truth, const Dataset& data,
                                       const QuadratureSet& quad) {
  TruthSolve ts = truth_solve(truth, data, quad.nodes);
  moments_ = std::move(ts.moments);
  Eigen::MatrixXd cov = build_cov(CovParams{truth.cov.sigma2, truth.cov.ell, truth.cov.nu, 0.0},
                                  quad.nodes);
  cov.noalias() -= ts.half.transpose() * ts.half;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NotPositiveDefinite("conditional_simulate: eigendecomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-8 * scale * static_cast<double>(cov.rows()))
    throw NotPositiveDefinite("conditional_simulate: conditional covariance is indefinite");
  root_ = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::VectorXd ConditionalSampler::draw(const Eigen::VectorXd& z) const {
  if (z.size() != root_.cols()) throw std::invalid_argument("conditional_simulate: |z| != m");
  return moments_.mean + root_ * z;
}

Eigen::VectorXd conditional_simulate(const TruthSpec& truth, const Dataset& data,
                                     const QuadratureSet& quad, const Eigen::VectorXd& z) {
  return ConditionalSampler(truth, data, quad).draw(z);
}

CriterionGrid evaluate_criteria_on_grid(const ModelFamily& family, const TruthSpec& truth,
                                        const Dataset& data, const QuadratureSet& quad,
                                        const ParamBox& box, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("evaluate_criteria_on_grid: grid_size < 1");
  CriterionGrid g;
  g.sigma2 = sigma2_grid(box, grid_size);
  g.ell = ell_grid(box, grid_size);
  g.kl.resize(grid_size, grid_size);
  g.ispe.resize(grid_size, grid_size);

  const Matrix<double> r0 = build_cov(truth.cov, data.design.points);
  const double logdet_r0 = logdet(cholesky(r0));
  const ConditionalMoments moments = conditional_moments(truth, data, quad.nodes);

  for (int j = 0; j < grid_size; ++j) {
    const MaternKernel<double> kernel(family.at(Theta{1.0, g.ell(j)}));
    const Matrix<double> corr = correlation_matrix(kernel, data.design.points);
    const Matrix<double> cross = cross_correlation(kernel, quad.nodes, data.design.points);
    for (int i = 0; i < grid_size; ++i) {
      const double s2 = g.sigma2(i);
      const auto factor = cholesky(cov_from_correlation(corr, s2, family.delta));
      const Matrix<double> rinv = inverse(factor);
      g.kl(i, j) = kl_divergence(factor, rinv, r0, logdet_r0);
      const Eigen::VectorXd pred = s2 * (cross * (rinv * data.y));
      g.ispe(i, j) = ispe_from_predictions(pred, moments);
    }
  }
  return g;
}

}  // namespace krigcv
