// Matérn covariance family with additive nugget.
//
// The kernel is parameterized as
//
//   K(t) = sigma2 / (Gamma(nu) 2^(nu-1)) * (2 sqrt(nu) |t| / ell)^nu
//          * K_nu(2 sqrt(nu) |t| / ell)
//
// with |t| the max-norm of the displacement and K_nu the modified Bessel
// function of the second kind. The nugget is never part of K(t); it is added
// on the diagonal of covariance matrices only (see gplinalg.hpp).

#ifndef KRIGCV_COVKERNEL_HPP_
#define KRIGCV_COVKERNEL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace krigcv {

/// Smallest admissible nugget for a member of the estimation family.
inline constexpr double kDefaultNuggetFloor = 0.01;

template <typename Scalar = double>
struct MaternSpec {
  Scalar sigma2{1};
  Scalar ell{1};
  Scalar nu{0.5};
  Scalar delta{0};

  /// Throws std::invalid_argument unless sigma2 > 0, ell > 0, nu > 0 and
  /// delta >= 0.
  void validate() const {
    if (!(sigma2 > 0) || !std::isfinite(static_cast<double>(sigma2)))
      throw std::invalid_argument("MaternSpec: sigma2 must be positive");
    if (!(ell > 0) || !std::isfinite(static_cast<double>(ell)))
      throw std::invalid_argument("MaternSpec: ell must be positive");
    if (!(nu > 0) || !std::isfinite(static_cast<double>(nu)))
      throw std::invalid_argument("MaternSpec: nu must be positive");
    if (!(delta >= 0) || !std::isfinite(static_cast<double>(delta)))
      throw std::invalid_argument("MaternSpec: delta must be non-negative");
  }

  /// Validation for members of the parametric family, which need a nugget
  /// bounded away from zero.
  void validate_family_member(Scalar nugget_floor = kDefaultNuggetFloor) const {
    validate();
    if (delta < nugget_floor)
      throw std::invalid_argument("MaternSpec: family nugget below floor " +
                                  std::to_string(static_cast<double>(nugget_floor)));
  }

  bool operator==(const MaternSpec&) const = default;
};

/// Covariance parameters of a model: the estimated pair plus fixed nu, delta.
using CovParams = MaternSpec<double>;

struct Interval {
  double lo{0};
  double hi{0};

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool operator==(const Interval&) const = default;
};

/// Box constraint on (sigma2, ell).
struct ParamBox {
  Interval sigma2{0.1 * 0.1, 10.0 * 10.0};
  Interval ell{0.2, 10.0};

  void validate() const;
  bool contains(double s2, double l) const {
    return sigma2.contains(s2) && ell.contains(l);
  }
  bool operator==(const ParamBox&) const = default;
};

namespace detail {

// Taylor coefficients a_k of 1/Gamma(z) = sum_{k>=1} a_k z^k.
inline constexpr std::array<long double, 30> kRecipGammaTaylor = {
    1.0L,
    0.57721566490153286061L,
    -0.65587807152025388108L,
    -0.042002635034095235529L,
    0.1665386113822914895L,
    -0.042197734555544336748L,
    -0.0096219715278769735621L,
    0.0072189432466630995424L,
    -0.0011651675918590651121L,
    -0.00021524167411495097282L,
    0.00012805028238811618615L,
    -0.000020134854780788238656L,
    -1.2504934821426706573e-6L,
    1.1330272319816958824e-6L,
    -2.0563384169776071035e-7L,
    6.1160951044814158179e-9L,
    5.0020076444692229301e-9L,
    -1.1812745704870201446e-9L,
    1.0434267116911005105e-10L,
    7.782263439905071254e-12L,
    -3.6968056186422057082e-12L,
    5.100370287454475979e-13L,
    -2.0583260535665067832e-14L,
    -5.3481225394230179824e-15L,
    1.2267786282382607902e-15L,
    -1.1812593016974587695e-16L,
    1.1866922547516003326e-18L,
    1.4123806553180317816e-18L,
    -2.2987456844353702066e-19L,
    1.7144063219273374334e-20L,
};

// Gamma-function combinations used by Temme's series for |mu| <= 1/2:
//   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
//   gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
//   gampl = 1/Gamma(1+mu), gammi = 1/Gamma(1-mu)
template <std::floating_point T>
void temme_gammas(T mu, T& gam1, T& gam2, T& gampl, T& gammi) {
  // 1/Gamma(1+mu) = sum_k a_k mu^(k-1); split into even and odd powers.
  const long double m2 = static_cast<long double>(mu) * mu;
  long double odd = 0;   // sum over k odd of a_k mu^(k-1)
  long double even = 0;  // sum over k even of a_k mu^(k-2)
  for (int k = static_cast<int>(kRecipGammaTaylor.size()); k >= 1; --k) {
    if (k % 2 == 1)
      odd = odd * m2 + kRecipGammaTaylor[k - 1];
    else
      even = even * m2 + kRecipGammaTaylor[k - 1];
  }
  gam1 = static_cast<T>(-even);
  gam2 = static_cast<T>(odd);
  gampl = static_cast<T>(odd + mu * even);
  gammi = static_cast<T>(odd - mu * even);
}

}  // namespace detail

/// Modified Bessel function of the second kind K_nu(x).
///
/// Temme's series for x <= 2 and Steed's continued fraction otherwise give
/// K_mu and K_{mu+1} for the fractional order |mu| <= 1/2; the target order
/// is reached by upward recurrence, which is stable for K. Returns 0 once
/// the result underflows. Throws std::domain_error for x <= 0 or nu < 0.
template <std::floating_point T>
T bessel_k(T nu, T x) {
  if (!(x > 0)) throw std::domain_error("bessel_k: x must be positive");
  if (!(nu >= 0)) throw std::domain_error("bessel_k: nu must be non-negative");
  if (std::isinf(x)) return T(0);

  constexpr T eps = std::numeric_limits<T>::epsilon();
  constexpr T tiny = std::numeric_limits<T>::min();
  constexpr int max_iter = 100000;
  constexpr T pi = std::numbers::pi_v<T>;

  // exp(-x) underflows past this point, and K_nu(x) <= K_nu'(x) for the
  // fractional part only shrinks the prefactor further.
  if (x > -std::log(tiny) + T(50) && nu < x) return T(0);

  const int nl = static_cast<int>(nu + T(0.5));
  const T mu = nu - nl;
  const T mu2 = mu * mu;
  const T xi = T(1) / x;
  const T xi2 = T(2) * xi;

  T k_mu, k_mu1;
  if (x <= T(2)) {
    const T x2 = T(0.5) * x;
    const T pimu = pi * mu;
    const T fact = std::abs(pimu) < eps ? T(1) : pimu / std::sin(pimu);
    T d = -std::log(x2);
    T e = mu * d;
    const T fact2 = std::abs(e) < eps ? T(1) : std::sinh(e) / e;
    T gam1, gam2, gampl, gammi;
    detail::temme_gammas(mu, gam1, gam2, gampl, gammi);
    T ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    T sum = ff;
    e = std::exp(e);
    T p = T(0.5) * e / gampl;
    T q = T(0.5) / (e * gammi);
    T c = 1;
    d = x2 * x2;
    T sum1 = p;
    for (int i = 1; i <= max_iter; ++i) {
      const T fi = static_cast<T>(i);
      ff = (fi * ff + p + q) / (fi * fi - mu2);
      c *= d / fi;
      p /= (fi - mu);
      q /= (fi + mu);
      const T del = c * ff;
      sum += del;
      const T del1 = c * p - fi * del;
      sum1 += del1;
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    k_mu = sum;
    k_mu1 = sum1 * xi2;
  } else {
    T b = T(2) * (T(1) + x);
    T d = T(1) / b;
    T h = d;
    T delh = d;
    T q1 = 0;
    T q2 = 1;
    const T a1 = T(0.25) - mu2;
    T q = a1;
    T c = a1;
    T a = -a1;
    T s = T(1) + q * delh;
    for (int i = 2; i <= max_iter; ++i) {
      a -= T(2 * (i - 1));
      c = -a * c / static_cast<T>(i);
      const T qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += T(2);
      d = T(1) / (b + a * d);
      delh = (b * d - T(1)) * delh;
      h += delh;
      const T dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < eps) break;
    }
    h = a1 * h;
    k_mu = std::sqrt(pi / (T(2) * x)) * std::exp(-x) / s;
    k_mu1 = k_mu * (mu + x + T(0.5) - h) * xi;
  }

  for (int i = 1; i <= nl; ++i) {
    const T next = (mu + static_cast<T>(i)) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

/// Matérn correlation as a function of the scaled distance
/// u = 2 sqrt(nu) |t| / ell. Precomputes the nu-dependent normalization.
template <std::floating_point Scalar>
class MaternCorrelation {
 public:
  /// Past this Bessel argument the kernel is set to exactly zero.
  static constexpr Scalar kCutoff = Scalar(700);

  explicit MaternCorrelation(Scalar nu)
      : nu_(nu),
        log_norm_(-std::lgamma(nu) - (nu - Scalar(1)) * std::numbers::ln2_v<Scalar>) {
    if (!(nu > 0)) throw std::invalid_argument("MaternCorrelation: nu must be positive");
  }

  Scalar nu() const { return nu_; }

  Scalar operator()(Scalar u) const {
    if (u <= Scalar(0)) return Scalar(1);
    if (u > kCutoff) return Scalar(0);
    // Below 1e-8 the Bessel factor overflows for large nu; for nu > 1 the
    // first correction term is exact to double precision there.
    if (u < Scalar(1e-8) && nu_ > Scalar(1))
      return Scalar(1) - u * u / (Scalar(4) * (nu_ - Scalar(1)));
    const Scalar k = bessel_k(nu_, u);
    if (k == Scalar(0)) return Scalar(0);
    return std::min(Scalar(1), std::exp(log_norm_ + nu_ * std::log(u) + std::log(k)));
  }

 private:
  Scalar nu_;
  Scalar log_norm_;
};

/// Max-norm of a displacement vector.
template <typename Derived>
typename Derived::Scalar max_norm(const Eigen::MatrixBase<Derived>& t) {
  return t.size() == 0 ? typename Derived::Scalar(0) : t.cwiseAbs().maxCoeff();
}

/// Noise-free covariance at max-norm distance r >= 0.
template <std::floating_point Scalar>
Scalar matern_cov_at_distance(const MaternSpec<Scalar>& spec, Scalar r) {
  if (r == Scalar(0)) return spec.sigma2;
  const MaternCorrelation<Scalar> corr(spec.nu);
  return spec.sigma2 * corr(Scalar(2) * std::sqrt(spec.nu) * r / spec.ell);
}

/// Noise-free covariance K_theta(t) for a displacement vector t. Returns
/// sigma2 exactly at t = 0; the nugget is not included.
template <typename Scalar, typename Derived>
Scalar matern_cov(const MaternSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& t) {
  spec.validate();
  return matern_cov_at_distance(spec, static_cast<Scalar>(max_norm(t)));
}

/// Evaluates a Matérn kernel repeatedly for one spec.
template <std::floating_point Scalar>
class MaternKernel {
 public:
  explicit MaternKernel(const MaternSpec<Scalar>& spec)
      : spec_((spec.validate(), spec)),
        corr_(spec.nu),
        scale_(Scalar(2) * std::sqrt(spec.nu) / spec.ell) {}

  const MaternSpec<Scalar>& spec() const { return spec_; }

  /// Correlation K(r)/sigma2 at max-norm distance r.
  Scalar correlation(Scalar r) const { return corr_(scale_ * r); }

  Scalar operator()(Scalar r) const {
    return r == Scalar(0) ? spec_.sigma2 : spec_.sigma2 * corr_(scale_ * r);
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& t) const {
    return (*this)(static_cast<Scalar>(max_norm(t)));
  }

 private:
  MaternSpec<Scalar> spec_;
  MaternCorrelation<Scalar> corr_;
  Scalar scale_;
};

}  // namespace krigcv

#endif  // KRIGCV_COVKERNEL_HPP_
