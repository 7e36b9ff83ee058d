#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcs/errors.hpp"
#include "pcs/rng.hpp"
#include "pcs/teststats.hpp"
#include "support.hpp"

using namespace pcs;
using namespace pcs::testsupport;

namespace {

MomentBlock block_from(const Eigen::VectorXd& D, const Eigen::MatrixXd& omega) {
  MomentBlock b;
  b.D_hat = D;
  b.omega = omega;
  b.omega_star = omega;
  const int p = static_cast<int>(D.size());
  for (int j = 0; j < p; ++j) b.alt_groups.push_back(j + 1);
  return b;
}

}  // namespace

TEST_CASE("max_statistic basics") {
  Eigen::VectorXd D(2);
  D << 1.2, -0.3;
  auto b = block_from(D, Eigen::MatrixXd::Identity(2, 2));
  CHECK(max_statistic(b) == 1.2);

  Eigen::VectorXd d1(1);
  d1 << -0.7;
  CHECK(max_statistic(block_from(d1, Eigen::MatrixXd::Identity(1, 1))) == -0.7);

  // permutation invariance
  Eigen::VectorXd Dp(3);
  Dp << 0.4, 2.0, -1.0;
  Eigen::VectorXd Dq(3);
  Dq << 2.0, -1.0, 0.4;
  auto I3 = Eigen::MatrixXd::Identity(3, 3);
  CHECK(max_statistic(block_from(Dp, I3)) == max_statistic(block_from(Dq, I3)));
}

TEST_CASE("qlr_project trivial cases") {
  Eigen::VectorXd D(2);
  D << -0.5, -2.0;
  auto r = qlr_project(D, Eigen::MatrixXd::Identity(2, 2));
  CHECK(r.value == 0.0);
  CHECK((r.minimizer - D).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.active_set.empty());

  Eigen::VectorXd D2(2);
  D2 << 1.0, -1.0;
  auto r2 = qlr_project(D2, Eigen::MatrixXd::Identity(2, 2));
  CHECK(r2.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r2.minimizer(0) == 0.0);
  CHECK(r2.minimizer(1) == -1.0);
  CHECK(r2.active_set == std::vector<int>{0});

  // G=2 scalar: value = max(D,0)^2
  Eigen::VectorXd ds(1);
  for (double v : {-1.5, 0.0, 0.3, 2.2}) {
    ds << v;
    auto rs = qlr_project(ds, Eigen::MatrixXd::Identity(1, 1));
    CHECK(rs.value == doctest::Approx(std::max(v, 0.0) * std::max(v, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("qlr_project KKT invariants on random instances") {
  SplitMix64 rng(77u);
  for (int rep = 0; rep < 400; ++rep) {
    int p = 1 + static_cast<int>(rng.next() % 4);
    Eigen::MatrixXd omega = regularize_corr(random_correlation(p, rng));
    Eigen::VectorXd D(p);
    for (int j = 0; j < p; ++j) D(j) = 2.0 * normal(rng);
    auto r = qlr_project(D, omega);
    CHECK(r.value >= 0.0);
    CHECK(r.minimizer.maxCoeff() <= 1e-10);
    Eigen::VectorXd grad = omega.llt().solve(D - r.minimizer);
    for (int j = 0; j < p; ++j) {
      // complementary slackness and dual feasibility
      CHECK(std::fabs(r.minimizer(j) * grad(j)) < 1e-8);
      if (std::find(r.active_set.begin(), r.active_set.end(), j) != r.active_set.end())
        CHECK(grad(j) >= -1e-8);
    }
    // value matches the quadratic form at the minimizer
    double direct = (D - r.minimizer).dot(grad);
    CHECK(r.value == doctest::Approx(direct).epsilon(1e-10));
    // zero value iff D componentwise nonpositive
    if (D.maxCoeff() <= 0.0)
      CHECK(r.value == 0.0);
    else
      CHECK(r.value > 0.0);
  }
}

TEST_CASE("qlr_project joint permutation invariance") {
  SplitMix64 rng(123u);
  for (int rep = 0; rep < 50; ++rep) {
    int p = 2 + static_cast<int>(rng.next() % 3);
    Eigen::MatrixXd omega = regularize_corr(random_correlation(p, rng));
    Eigen::VectorXd D(p);
    for (int j = 0; j < p; ++j) D(j) = 2.0 * normal(rng);
    std::vector<int> perm(p);
    for (int j = 0; j < p; ++j) perm[j] = j;
    for (int j = p - 1; j > 0; --j)
      std::swap(perm[j], perm[rng.next() % static_cast<std::uint64_t>(j + 1)]);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(p);
    for (int j = 0; j < p; ++j) P.indices()(j) = perm[j];
    Eigen::VectorXd Dp = P * D;
    Eigen::MatrixXd Op = P * omega * P.transpose();
    CHECK(qlr_project(Dp, Op).value ==
          doctest::Approx(qlr_project(D, omega).value).epsilon(1e-10));
  }
}

TEST_CASE("qlr_project monotone in D components") {
  SplitMix64 rng(55u);
  for (int rep = 0; rep < 100; ++rep) {
    int p = 1 + static_cast<int>(rng.next() % 4);
    Eigen::MatrixXd omega = regularize_corr(random_correlation(p, rng));
    Eigen::VectorXd D(p);
    for (int j = 0; j < p; ++j) D(j) = 2.0 * normal(rng);
    double base = qlr_project(D, omega).value;
    double base_max = D.maxCoeff();
    int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(p));
    Eigen::VectorXd D2 = D;
    D2(j) += 0.3;
    CHECK(qlr_project(D2, omega).value >= base - 1e-12);
    CHECK(D2.maxCoeff() >= base_max);
  }
}

TEST_CASE("qlr_project agrees with the grid oracle") {
  SplitMix64 rng(88u);
  for (int rep = 0; rep < 200; ++rep) {
    int p = 1 + static_cast<int>(rng.next() % 4);
    Eigen::MatrixXd omega = regularize_corr(random_correlation(p, rng));
    Eigen::VectorXd D(p);
    for (int j = 0; j < p; ++j) D(j) = 1.5 * normal(rng);
    double exact = qlr_project(D, omega).value;
    double grid = qlr_grid_oracle(D, omega);
    CHECK(grid >= exact - 1e-12);
    CHECK(grid - exact < 1e-4);
  }
}

TEST_CASE("statistic dispatch") {
  SplitMix64 rng(9u);
  Eigen::MatrixXd omega = regularize_corr(random_correlation(2, rng));
  Eigen::VectorXd D(2);
  D << 0.8, -0.4;
  auto b = block_from(D, omega);
  CHECK(statistic(Method::SNS, b) == statistic(Method::MAX, b));
  CHECK(statistic(Method::MAX, b) == max_statistic(b));
  CHECK(statistic(Method::QLR, b) == qlr_statistic(b).value);
}

TEST_CASE("qlr_project rejects singular omega") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  Eigen::VectorXd D(2);
  D << 1.0, 1.0;
  CHECK_THROWS_AS(qlr_project(D, ones), SingularOmega);
  CHECK_THROWS_AS(qlr_project(D, Eigen::MatrixXd::Identity(3, 3)), DimensionMismatch);
}
