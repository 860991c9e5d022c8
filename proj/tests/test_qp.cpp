#include <doctest.h>

#include <Eigen/Dense>
#include <limits>
#include <random>

#include "mrnav/qp.hpp"

using namespace mrnav;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent check: verify the KKT conditions of a returned solution against
// the problem data, without reusing any solver internals.
void check_kkt(const QpProblem& prob, const QpResult& res, double tol) {
  REQUIRE(res.converged);
  const VectorXd ax = prob.A * res.x;
  for (Eigen::Index i = 0; i < prob.num_constraints(); ++i) {
    if (std::isfinite(prob.lower(i))) CHECK(ax(i) >= prob.lower(i) - tol);
    if (std::isfinite(prob.upper(i))) CHECK(ax(i) <= prob.upper(i) + tol);
  }
  const VectorXd stationarity = prob.P * res.x + prob.q + prob.A.transpose() * res.y;
  CHECK(stationarity.cwiseAbs().maxCoeff() <= tol * (1.0 + res.y.cwiseAbs().maxCoeff()));
  for (Eigen::Index i = 0; i < prob.num_constraints(); ++i) {
    // Complementarity: a nonzero dual pins its constraint to the bound.
    if (res.y(i) > tol) CHECK(ax(i) <= prob.upper(i) + tol * (1.0 + std::abs(prob.upper(i))));
    if (res.y(i) < -tol) CHECK(ax(i) >= prob.lower(i) - tol * (1.0 + std::abs(prob.lower(i))));
  }
}

}  // namespace

TEST_CASE("unconstrained quadratic reduces to the linear solve") {
  QpProblem prob;
  prob.P = (MatrixXd(2, 2) << 4, 1, 1, 3).finished();
  prob.q = (VectorXd(2) << -1, -2).finished();
  prob.A = MatrixXd::Identity(2, 2);
  prob.lower = VectorXd::Constant(2, -kInf);
  prob.upper = VectorXd::Constant(2, kInf);

  const QpResult res = solve_qp(prob);
  REQUIRE(res.converged);
  const VectorXd expected = prob.P.ldlt().solve(-prob.q);
  CHECK((res.x - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("projection onto a box") {
  // min ||x - c||^2 inside [-1, 1]^3: solution is the clamp of c.
  QpProblem prob;
  prob.P = 2.0 * MatrixXd::Identity(3, 3);
  const VectorXd c = (VectorXd(3) << 2.5, -0.3, -7.0).finished();
  prob.q = -2.0 * c;
  prob.A = MatrixXd::Identity(3, 3);
  prob.lower = VectorXd::Constant(3, -1.0);
  prob.upper = VectorXd::Constant(3, 1.0);

  const QpResult res = solve_qp(prob);
  REQUIRE(res.converged);
  CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.x(1) == doctest::Approx(-0.3).epsilon(1e-9));
  CHECK(res.x(2) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("equality row (lower == upper)") {
  // min x'x subject to x0 + x1 = 1: solution (0.5, 0.5).
  QpProblem prob;
  prob.P = 2.0 * MatrixXd::Identity(2, 2);
  prob.q = VectorXd::Zero(2);
  prob.A = (MatrixXd(1, 2) << 1, 1).finished();
  prob.lower = VectorXd::Constant(1, 1.0);
  prob.upper = VectorXd::Constant(1, 1.0);

  const QpResult res = solve_qp(prob);
  REQUIRE(res.converged);
  CHECK(res.x(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.x(1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("random strictly convex problems satisfy KKT") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.2, 2.0);

  for (int trial = 0; trial < 25; ++trial) {
    const int n = 8, m = 14;
    MatrixXd root(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) root(i, j) = gauss(rng);
    QpProblem prob;
    prob.P = root.transpose() * root + 0.1 * MatrixXd::Identity(n, n);
    prob.q = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return gauss(rng); });
    prob.A = MatrixXd::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
    prob.lower.resize(m);
    prob.upper.resize(m);
    for (int i = 0; i < m; ++i) {
      const double center = gauss(rng);
      const double width = spread(rng);
      prob.lower(i) = center - width;
      prob.upper(i) = center + width;
    }
    // Make a few rows one-sided.
    prob.upper(0) = kInf;
    prob.lower(1) = -kInf;

    const QpResult res = solve_qp(prob);
    check_kkt(prob, res, 1e-7);
  }
}

TEST_CASE("badly scaled slack-penalty problem converges") {
  // Shape of the planner subproblems: a tiny effort cost against a huge
  // linear slack penalty with a nonnegativity bound.
  QpProblem prob;
  prob.P = MatrixXd::Zero(4, 4);
  prob.P.diagonal() << 0.1, 0.1, 0.1, 200.0;
  prob.q = (VectorXd(4) << 0.3, -0.2, 0.0, 1000.0).finished();
  prob.A = MatrixXd::Zero(5, 4);
  prob.A.topLeftCorner(4, 4) = MatrixXd::Identity(4, 4);
  prob.A(4, 0) = 0.05;
  prob.A(4, 3) = 1.0;  // coupled slack row
  prob.lower = (VectorXd(5) << -4, -4, -4, 0, 0.2).finished();
  prob.upper = (VectorXd(5) << 4, 4, 4, kInf, kInf).finished();

  const QpResult res = solve_qp(prob);
  check_kkt(prob, res, 1e-7);
}

TEST_CASE("warm start does not change the answer") {
  QpProblem prob;
  prob.P = 2.0 * MatrixXd::Identity(3, 3);
  prob.q = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  prob.A = MatrixXd::Identity(3, 3);
  prob.lower = VectorXd::Constant(3, -0.5);
  prob.upper = VectorXd::Constant(3, 0.5);

  const QpResult cold = solve_qp(prob);
  QpWarmStart warm{VectorXd::Constant(3, 0.4), VectorXd::Zero(3)};
  const QpResult warm_res = solve_qp(prob, QpSettings{}, warm);
  REQUIRE(cold.converged);
  REQUIRE(warm_res.converged);
  CHECK((cold.x - warm_res.x).cwiseAbs().maxCoeff() < 1e-8);
}
