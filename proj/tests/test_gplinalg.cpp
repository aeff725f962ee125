#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "krigcv/gplinalg.hpp"

using namespace krigcv;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& gen, int n, int d = 1, double side = 20) {
  std::uniform_real_distribution<double> u(0, side);
  Eigen::MatrixXd p(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) p(i, k) = u(gen);
  return p;
}

CovParams random_theta(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0, 1);
  return {0.01 * std::pow(1e4, u(gen)), 0.2 + 9.8 * u(gen), 10, 0.01 + 0.1 * u(gen)};
}

}  // namespace

TEST_CASE("build_cov structure") {
  const CovParams th{1.5, 3, 10, 0.2};
  Eigen::MatrixXd one(1, 1);
  one << 4.0;
  const auto r1 = build_cov(th, one);
  REQUIRE(r1.rows() == 1);
  CHECK(r1(0, 0) == 1.5 + 0.2);

  Eigen::MatrixXd dup(2, 1);
  dup << 2.0, 2.0;
  const auto r2 = build_cov(th, dup);
  CHECK(r2(0, 0) == 1.7);
  CHECK(r2(1, 1) == 1.7);
  CHECK(r2(0, 1) == 1.5);
  CHECK(r2(1, 0) == 1.5);
  CHECK_NOTHROW(cholesky(r2));

  std::mt19937_64 gen(1);
  const Eigen::MatrixXd p = random_points(gen, 5, 2);
  const auto r = build_cov(th, p);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const Eigen::VectorXd diff = (p.row(i) - p.row(j)).transpose();
      const double want = matern_cov(th, diff) + (i == j ? th.delta : 0.0);
      CHECK(r(i, j) == doctest::Approx(want).epsilon(1e-15));
      CHECK(r(i, j) == r(j, i));
    }
}

TEST_CASE("cholesky examples") {
  const auto fi = cholesky(Eigen::MatrixXd::Identity(4, 4).eval());
  CHECK(fi.lower().isIdentity(0));

  Eigen::MatrixXd a(2, 2);
  a << 4, 2, 2, 3;
  const auto f = cholesky(a);
  CHECK(f.lower()(0, 0) == doctest::Approx(2));
  CHECK(f.lower()(0, 1) == 0);
  CHECK(f.lower()(1, 0) == doctest::Approx(1));
  CHECK(f.lower()(1, 1) == doctest::Approx(std::sqrt(2.0)));

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(bad), NotPositiveDefinite);

  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 10; ++rep) {
    const CovParams th = random_theta(gen);
    const auto r = build_cov(th, random_points(gen, 20));
    const auto fr = cholesky(r);
    CHECK((fr.lower().diagonal().array() > 0).all());
    const double err = (fr.lower() * fr.lower().transpose() - r).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-8 * (th.sigma2 + th.delta));
  }
}

TEST_CASE("logdet") {
  CHECK(logdet(cholesky(Eigen::MatrixXd::Identity(3, 3).eval())) == 0.0);
  Eigen::MatrixXd d = Eigen::Vector2d(2.5, 7).asDiagonal();
  CHECK(logdet(cholesky(d)) == doctest::Approx(std::log(17.5)).epsilon(1e-14));
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto r = build_cov(random_theta(gen), random_points(gen, 10));
    const double lu = std::log(r.fullPivLu().determinant());
    CHECK(std::abs(logdet(cholesky(r)) - lu) <= 1e-9 * std::max(1.0, std::abs(lu)));
  }
}

TEST_CASE("solve") {
  const Eigen::VectorXd b = Eigen::Vector3d(1, -2, 3);
  CHECK(solve(cholesky(Eigen::MatrixXd::Identity(3, 3).eval()), b).isApprox(b));
  Eigen::MatrixXd two(1, 1);
  two << 2;
  CHECK(solve(cholesky(two), Eigen::VectorXd::Constant(1, 4.0))(0) == doctest::Approx(2));

  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto r = build_cov(random_theta(gen), random_points(gen, 15));
    const Eigen::VectorXd rhs = Eigen::VectorXd::Random(15);
    const Eigen::VectorXd x = solve(cholesky(r), rhs);
    CHECK((r * x - rhs).norm() <= 1e-8 * rhs.norm());
  }
  CHECK_THROWS_AS(solve(cholesky(two), b), std::invalid_argument);
}

TEST_CASE("inverse") {
  CHECK(inverse(cholesky(Eigen::MatrixXd::Identity(3, 3).eval())).isIdentity(1e-15));
  Eigen::MatrixXd a(2, 2);
  a << 4, 2, 2, 3;
  Eigen::MatrixXd want(2, 2);
  want << 3, -2, -2, 4;
  want /= 8;
  CHECK(inverse(cholesky(a)).isApprox(want, 1e-14));

  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 10; ++rep) {
    const CovParams th = random_theta(gen);
    const auto r = build_cov(th, random_points(gen, 20));
    const auto rinv = inverse(cholesky(r));
    CHECK(rinv == rinv.transpose());
    CHECK((rinv.diagonal().array() > 0).all());
    CHECK((rinv.diagonal().array() <= 1 / th.delta).all());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    CHECK(eig.eigenvalues().minCoeff() >= th.delta - 1e-10);
  }

  const CovParams th{1, 3, 10, 0.01};
  const auto big = build_cov(th, random_points(gen, 500, 1, 500));
  const auto bigi = inverse(cholesky(big));
  CHECK((big * bigi - Eigen::MatrixXd::Identity(500, 500)).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("sample_joint") {
  Eigen::MatrixXd pts(5, 1);
  pts << 0.0, 0.7, 1.5, 4.0, 9.0;
  const CovParams th{1, 3, 10, 0.0625};
  const auto r = build_cov(th, pts);
  const auto f = cholesky(r);
  CHECK(sample_joint(f, Eigen::VectorXd::Zero(5)).isZero(0));
  const Eigen::VectorXd z = Eigen::VectorXd::Random(5);
  CHECK(sample_joint(cholesky(Eigen::MatrixXd::Identity(5, 5).eval()), z) == z);

  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  const int draws = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd zz(5);
    for (int i = 0; i < 5; ++i) zz(i) = nd(gen);
    const Eigen::VectorXd y = sample_joint(f, zz);
    acc += y * y.transpose();
  }
  acc /= draws;
  CHECK((acc - r).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("nugget floor on random designs") {
  std::mt19937_64 gen(8);
  for (int rep = 0; rep < 30; ++rep) {
    const CovParams th = random_theta(gen);
    const int n = 2 + rep * 3;
    const auto r = build_cov(th, random_points(gen, n, 1, 10));
    // R - (delta - 1e-10) I stays positive definite.
    Eigen::MatrixXd shifted = r;
    shifted.diagonal().array() -= th.delta - 1e-10;
    CHECK_NOTHROW(cholesky(shifted));
  }
}
