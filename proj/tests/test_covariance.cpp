#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>

#include "eiv/covariance.hpp"
#include "eiv/rng.hpp"

using namespace eiv;

TEST_CASE("ar1 entries and identity limit") {
  const Covariance A = Covariance::ar1(3, 0.5);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
  CHECK((A.matrix() - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const Covariance I = Covariance::ar1(7, 0.0);
  CHECK((I.matrix() - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(Covariance::ar1(4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Covariance::ar1(4, -1.2), std::invalid_argument);
}

TEST_CASE("ar1 minimum eigenvalue ratio between rho 0.3 and 0.7") {
  const Covariance A3 = Covariance::ar1(256, 0.3);
  const Covariance A7 = Covariance::ar1(256, 0.7);
  const double ratio = A3.lambda_min() / A7.lambda_min();
  CHECK(ratio == doctest::Approx(3.0).epsilon(0.07));
}

TEST_CASE("star_block structure") {
  const double rho = 0.4;
  const Covariance S2 = Covariance::star_block(2, rho, 2);
  CHECK(S2.matrix()(0, 1) == doctest::Approx(rho));
  CHECK(S2.matrix()(0, 0) == 1.0);

  // 32 blocks of 17 cover 544 coordinates; the rest are singletons.
  const Covariance S = Covariance::star_block(1024, 0.3, 17);
  CHECK(S.matrix()(0, 1) == doctest::Approx(0.3));   // hub edge
  CHECK(S.matrix()(1, 2) == doctest::Approx(0.09));  // leaf-leaf
  CHECK(S.matrix()(16, 17) == 0.0);                  // across blocks
  CHECK(S.matrix()(543, 544) == 0.0);                // last block to singleton
  CHECK(S.matrix()(600, 601) == 0.0);                // singleton region
  CHECK(S.matrix()(600, 600) == 1.0);
  CHECK(S.lambda_min() >= -1e-10);

  CHECK_THROWS_AS(Covariance::star_block(16, 0.3, 1), std::invalid_argument);
}

TEST_CASE("random_precision properties") {
  const Covariance B1 = Covariance::random_precision(1, 2.0, 0.1, 0.3, 9);
  CHECK(B1.matrix()(0, 0) == doctest::Approx(0.5));

  const Covariance B = Covariance::random_precision(24, 1.0, 0.1, 0.3, 42);
  CHECK(B.lambda_min() > 0.0);
  const Covariance B_again = Covariance::random_precision(24, 1.0, 0.1, 0.3, 42);
  CHECK((B.matrix() - B_again.matrix()).cwiseAbs().maxCoeff() == 0.0);
  const Covariance B_other = Covariance::random_precision(24, 1.0, 0.1, 0.3, 43);
  CHECK((B.matrix() - B_other.matrix()).cwiseAbs().maxCoeff() > 0.0);

  // One edge update keeps the precision matrix diagonally dominant.
  const Covariance B3 = Covariance::random_precision(3, 1.0, 0.1, 0.3, 7);
  CHECK(B3.lambda_min() > 0.0);
}

TEST_CASE("scale_to_trace") {
  const Covariance I = Covariance::ar1(8, 0.0);
  const Covariance S = scale_to_trace(I, 8, 0.3);
  CHECK((S.matrix() - 0.3 * Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));

  const Covariance B = Covariance::random_precision(16, 1.0, 0.1, 0.3, 3);
  const Covariance B2 = scale_to_trace(B, 16, 0.7);
  CHECK(B2.trace() / 16.0 == doctest::Approx(0.7).epsilon(1e-12));
  // Correlation structure is preserved under a scalar multiple.
  const double c = B2.matrix()(0, 1) / B.matrix()(0, 1);
  CHECK((B2.matrix() - c * B.matrix()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(scale_to_trace(Covariance(Eigen::MatrixXd::Zero(4, 4)), 4, 0.3),
                  std::invalid_argument);
}

TEST_CASE("scale_to_trace reuses spectral work") {
  Covariance B = Covariance::ar1(32, 0.4);
  B.sqrt();  // populate the cache first
  const Covariance S = scale_to_trace(B, 32, 0.5);
  const double factor = 0.5 * 32 / B.trace();
  CHECK((S.sqrt() - std::sqrt(factor) * B.sqrt()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(S.lambda_max() == doctest::Approx(factor * B.lambda_max()));
}

TEST_CASE("matrix square root") {
  const Covariance I = Covariance::ar1(5, 0.0);
  CHECK((I.sqrt() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 4.0;
  D(1, 1) = 9.0;
  const Covariance Dc(D);
  CHECK(Dc.sqrt()(0, 0) == doctest::Approx(2.0));
  CHECK(Dc.sqrt()(1, 1) == doctest::Approx(3.0));

  const Covariance A = Covariance::ar1(3, 0.5);
  const Eigen::MatrixXd R = A.sqrt();
  CHECK((R * R - A.matrix()).norm() / A.matrix().norm() < 1e-8);

  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(3, 3);
  neg(2, 2) = -0.5;
  CHECK_THROWS(Covariance(neg).sqrt());
}

TEST_CASE("sqrt scaling property") {
  const Covariance A = Covariance::ar1(6, 0.3);
  const Covariance cA(4.0 * A.matrix());
  CHECK((cA.sqrt() - 2.0 * A.sqrt()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sparse eigenvalue small cases") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(4, 4);
  M(0, 0) = 3.0;
  M(3, 3) = 0.5;
  const Covariance C(M);
  CHECK(C.sparse_eigenvalue(1, Extremum::max).value == doctest::Approx(3.0));
  CHECK(C.sparse_eigenvalue(1, Extremum::min).value == doctest::Approx(0.5));
  CHECK(C.sparse_eigenvalue(4, Extremum::max).value == doctest::Approx(C.lambda_max()));
  CHECK(C.sparse_eigenvalue(4, Extremum::min).value == doctest::Approx(C.lambda_min()));
}

TEST_CASE("sparse eigenvalue matches brute force on AR1(6, 0.5), d = 2") {
  const Covariance A = Covariance::ar1(6, 0.5);
  const auto res = A.sparse_eigenvalue(2, Extremum::max);
  CHECK(res.exact);
  // 15 supports; the 2x2 top eigenvalue is 1 + |a_ij| on a unit diagonal.
  double best = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) best = std::max(best, 1.0 + std::abs(A.matrix()(i, j)));
  CHECK(res.value == doctest::Approx(best));
}

TEST_CASE("sparse eigenvalue monotone in d and bracketed by diagonal and spectrum") {
  const Covariance A = Covariance::ar1(12, 0.6);
  double prev_max = 0.0, prev_min = 1e100;
  for (int d = 1; d <= 12; ++d) {
    const double up = A.sparse_eigenvalue(d, Extremum::max, 4000).value;
    const double dn = A.sparse_eigenvalue(d, Extremum::min, 4000).value;
    CHECK(up >= prev_max - 1e-12);
    CHECK(dn <= prev_min + 1e-12);
    CHECK(up >= A.max_diagonal() - 1e-12);
    CHECK(up <= A.lambda_max() + 1e-12);
    prev_max = up;
    prev_min = dn;
  }
}

TEST_CASE("randomized sparse eigenvalue is a valid inner bound") {
  const Covariance A = Covariance::ar1(40, 0.5);
  const auto approx = A.sparse_eigenvalue(5, Extremum::max, 50);
  CHECK_FALSE(approx.exact);
  CHECK(approx.value <= A.lambda_max() + 1e-12);
  CHECK(approx.value >= A.max_diagonal() - 1e-12);
}

TEST_CASE("csv round trip with dim header") {
  const Covariance A = Covariance::ar1(5, -0.4);
  const std::string path = "/tmp/eiv_test_cov.csv";
  A.save_csv(path);
  const Covariance B = Covariance::load_csv(path);
  CHECK((A.matrix() - B.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  std::filesystem::remove(path);
}

TEST_CASE("constructor validates symmetry") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(Covariance{M}, std::invalid_argument);
}
