// Quality criteria for a covariance parameter: the normalized Kullback-Leibler
// divergence D and the integrated square prediction error E, plus the
// kriging predictor and conditional simulation under the true model.

#ifndef KRIGCV_CRITERIA_HPP_
#define KRIGCV_CRITERIA_HPP_

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "krigcv/covkernel.hpp"
#include "krigcv/estimators.hpp"
#include "krigcv/gplinalg.hpp"
#include "krigcv/sampling.hpp"

namespace krigcv {

/// Generating covariance and nugget. A zero nugget is allowed for the truth.
struct TruthSpec {
  CovParams cov{1.0, 3.0, 10.0, 0.25 * 0.25};

  void validate() const { cov.validate(); }
  bool operator==(const TruthSpec&) const = default;
};

enum class QuadratureOrigin { kIidUniform, kRegularGrid };

std::string_view to_string(QuadratureOrigin o);
QuadratureOrigin parse_quadrature_origin(std::string_view s);

/// Integration nodes on the observation domain, one per row.
struct QuadratureSet {
  Eigen::MatrixXd nodes;
  QuadratureOrigin origin{QuadratureOrigin::kIidUniform};

  Eigen::Index m() const { return nodes.rows(); }
};

/// m nodes on [0, side]^d. A regular grid uses cell midpoints and requires
/// m to be a perfect d-th power.
QuadratureSet draw_quadrature(Eigen::Index m, Eigen::Index d, double side,
                              QuadratureOrigin origin, std::uint64_t seed);

/// Kriging predictor r_theta(t)^T R_theta^{-1} y at a single point.
double predictor(const CovParams& theta, const Dataset& data, const Eigen::VectorXd& t);

/// Kriging predictor at every row of `nodes`.
Eigen::VectorXd predict(const CovParams& theta, const Dataset& data, const Eigen::MatrixXd& nodes);

/// (1/n)[log det R_theta - log det R_0 + Tr(R_0 R_theta^{-1})] - 1.
double kl_divergence(const CovParams& theta, const TruthSpec& truth, const Design& design);

/// D from precomputed pieces; `r0` is the true covariance matrix.
double kl_divergence(const CholFactor<double>& theta_factor, const Matrix<double>& theta_inverse,
                     const Matrix<double>& r0, double logdet_r0);

/// Mean and variance of Y at a set of nodes given y, under the truth.
struct ConditionalMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

ConditionalMoments conditional_moments(const TruthSpec& truth, const Dataset& data,
                                       const Eigen::MatrixXd& nodes);

/// E[(yhat_theta(t) - Y(t))^2 | X, y] averaged over the quadrature nodes.
double ispe_given_data(const CovParams& theta, const TruthSpec& truth, const Dataset& data,
                       const QuadratureSet& quad);

/// Same, with precomputed predictions and true conditional moments.
double ispe_from_predictions(const Eigen::VectorXd& predictions, const ConditionalMoments& truth);

/// Draws Y(nodes) given y under the truth. The conditional covariance is
/// factored once; it is usually numerically singular for smooth kernels, so
/// the square root comes from a symmetric eigendecomposition with round-off
/// negative eigenvalues clipped to zero.
class ConditionalSampler {
 public:
  ConditionalSampler(const TruthSpec& truth, const Dataset& data, const QuadratureSet& quad);

  const ConditionalMoments& moments() const { return moments_; }
  Eigen::VectorXd draw(const Eigen::VectorXd& z) const;

 private:
  ConditionalMoments moments_;
  Eigen::MatrixXd root_;
};

/// One conditional draw of Y at the quadrature nodes given y.
Eigen::VectorXd conditional_simulate(const TruthSpec& truth, const Dataset& data,
                                     const QuadratureSet& quad, const Eigen::VectorXd& z);

/// D and E evaluated over a (sigma2, ell) grid, one row per sigma2 value.
struct CriterionGrid {
  Eigen::VectorXd sigma2;
  Eigen::VectorXd ell;
  Eigen::MatrixXd kl;
  Eigen::MatrixXd ispe;

  double min_kl() const { return kl.minCoeff(); }
  double min_ispe() const { return ispe.minCoeff(); }
};

/// Grid geometric in sigma2 and uniform in ell, matching the optimizer grid.
CriterionGrid evaluate_criteria_on_grid(const ModelFamily& family, const TruthSpec& truth,
                                        const Dataset& data, const QuadratureSet& quad,
                                        const ParamBox& box, int grid_size);

}  // namespace krigcv

#endif  // KRIGCV_CRITERIA_HPP_
