#include "krigcv/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace krigcv {

namespace {

// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double Design::domain_side(Eigen::Index n, Eigen::Index d) {
  if (n < 1 || d < 1) throw std::invalid_argument("Design: n and d must be positive");
  if (d == 1) return static_cast<double>(n);
  return std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
}

void Design::validate() const {
  if (n() < 1 || d() < 1) throw std::invalid_argument("Design: empty");
  if (!points.allFinite()) throw std::invalid_argument("Design: non-finite coordinate");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [this](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < d(); ++k) {
      if (points(a, k) != points(b, k)) return points(a, k) < points(b, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (points.row(order[i - 1]) == points.row(order[i]))
      throw DuplicatePoints("Design: duplicated point at rows " + std::to_string(order[i - 1]) +
                            " and " + std::to_string(order[i]));
  }
}

void Design::validate_domain() const {
  validate();
  const double s = side();
  if ((points.array() < 0.0).any() || (points.array() > s).any())
    throw std::invalid_argument("Design: coordinate outside [0, n^(1/d)]");
}

std::string_view to_string(StreamTag tag) {
  switch (tag) {
    case StreamTag::kDesign: return "design";
    case StreamTag::kField: return "field";
    case StreamTag::kNoise: return "noise";
    case StreamTag::kQuadrature: return "quadrature";
  }
  return "unknown";
}

std::uint64_t derive_seed(const SeedPlan& plan) {
  if (plan.rep_index >= (std::uint64_t{1} << 56))
    throw std::out_of_range("derive_seed: rep_index exceeds 2^56");
  const std::uint64_t counter = (plan.rep_index << 8) | static_cast<std::uint64_t>(plan.tag);
  return mix64(counter + mix64(plan.master_seed));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Eigen::VectorXd Rng::normals(Eigen::Index count) {
  Eigen::VectorXd z(count);
  for (Eigen::Index i = 0; i < count; ++i) z(i) = normal();
  return z;
}

Design draw_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  const double side = Design::domain_side(n, d);
  Rng rng(seed);
  Design design{Eigen::MatrixXd(n, d)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) design.points(i, k) = rng.uniform(0.0, side);
  design.validate_domain();
  return design;
}

}  // namespace krigcv
