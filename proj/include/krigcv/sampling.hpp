// Random spatial designs and replication-indexed random streams.

#ifndef KRIGCV_SAMPLING_HPP_
#define KRIGCV_SAMPLING_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace krigcv {

/// n observation points on [0, n^(1/d)]^d, one point per row.
struct Design {
  Eigen::MatrixXd points;

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index d() const { return points.cols(); }
  /// Side length n^(1/d) of the observation domain.
  double side() const { return domain_side(n(), d()); }

  /// Throws DuplicatePoints if two points coincide exactly and
  /// std::invalid_argument for empty or non-finite designs.
  void validate() const;
  /// Additionally requires every coordinate in [0, n^(1/d)].
  void validate_domain() const;

  static double domain_side(Eigen::Index n, Eigen::Index d);
};

/// Raised for designs with exactly duplicated points.
class DuplicatePoints : public std::runtime_error {
 public:
  explicit DuplicatePoints(const std::string& what) : std::runtime_error(what) {}
};

enum class StreamTag : std::uint8_t { kDesign = 0, kField = 1, kNoise = 2, kQuadrature = 3 };

std::string_view to_string(StreamTag tag);

struct SeedPlan {
  std::uint64_t master_seed{0};
  std::uint64_t rep_index{0};
  StreamTag tag{StreamTag::kDesign};
};

/// Counter-mode sub-seed. For a fixed master seed the map
/// (rep_index, tag) -> seed is injective for rep_index < 2^56.
std::uint64_t derive_seed(const SeedPlan& plan);

/// Deterministic random stream. Uniforms take the top 53 bits of a
/// mt19937_64 output; normals use the Marsaglia polar method. Both are fully
/// specified, so streams are identical across platforms and standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  Eigen::VectorXd normals(Eigen::Index count);

 private:
  std::mt19937_64 engine_;
  double spare_{0};
  bool has_spare_{false};
};

/// n iid uniform points on [0, n^(1/d)]^d. Throws DuplicatePoints if two
/// points coincide exactly.
Design draw_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

}  // namespace krigcv

#endif  // KRIGCV_SAMPLING_HPP_
