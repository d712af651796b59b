#include "adatrans/solvers.hpp"

#include "doctest.h"
#include "test_oracles.hpp"

#include <cmath>
#include <limits>

using namespace adatrans;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("scalar soft-threshold solutions") {
  Matrix A(1, 1);
  A << 1.0;
  Vector b(1);
  b << 1.0;

  // argmin (1-t)^2 + 0.5 |t| = 1 - 0.25
  Vector pw(1);
  pw << 0.5;
  CdResult fit = weighted_lasso_cd(A, b, nullptr, pw, 1.0);
  CHECK(fit.converged);
  CHECK(fit.theta[0] == doctest::Approx(0.75).epsilon(1e-10));

  pw << 2.0;  // full shrinkage at the threshold
  fit = weighted_lasso_cd(A, b, nullptr, pw, 1.0);
  CHECK(fit.theta[0] == 0.0);
  pw << 2.5;
  fit = weighted_lasso_cd(A, b, nullptr, pw, 1.0);
  CHECK(fit.theta[0] == 0.0);
}

TEST_CASE("zero penalty on a square invertible system gives least squares") {
  auto gen = oracles::rng(21);
  const Matrix A = oracles::gaussian_matrix(6, 6, gen) + 3.0 * Matrix::Identity(6, 6);
  const Vector b = oracles::gaussian_vector(6, gen);
  CdSettings tight;
  tight.tol = 1e-12;
  const CdResult fit = weighted_lasso_cd(A, b, nullptr, Vector::Zero(6), 6.0, tight);
  const Vector ols = A.fullPivLu().solve(b);
  CHECK((fit.theta - ols).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK(fit.converged);
}

TEST_CASE("infinite penalty weights pin coordinates at zero") {
  auto gen = oracles::rng(22);
  const Matrix A = oracles::gaussian_matrix(20, 6, gen);
  Vector beta(6);
  beta << 1.0, -2.0, 0.5, 0.0, 0.0, 3.0;
  const Vector b = A * beta;
  Vector pw = Vector::Constant(6, 0.01);
  pw[1] = kInf;
  pw[5] = kInf;
  const CdResult fit = weighted_lasso_cd(A, b, nullptr, pw, 20.0);
  CHECK(fit.theta[1] == 0.0);
  CHECK(fit.theta[5] == 0.0);
  CHECK(fit.converged);
}

TEST_CASE("sample weights replicate duplicated rows") {
  auto gen = oracles::rng(23);
  const Matrix A = oracles::gaussian_matrix(8, 4, gen);
  const Vector b = oracles::gaussian_vector(8, gen);
  const Vector pw = Vector::Constant(4, 0.05);

  Matrix A2(16, 4);
  A2 << A, A;
  Vector b2(16);
  b2 << b, b;
  const Vector w = Vector::Constant(8, 2.0);

  const CdResult weighted = weighted_lasso_cd(A, b, &w, pw, 8.0);
  const CdResult duplicated = weighted_lasso_cd(A2, b2, nullptr, pw, 8.0);
  CHECK((weighted.theta - duplicated.theta).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("solver is deterministic") {
  auto gen = oracles::rng(24);
  const Matrix A = oracles::gaussian_matrix(30, 12, gen);
  const Vector b = oracles::gaussian_vector(30, gen);
  const Vector pw = Vector::Constant(12, 0.1);
  const CdResult a = weighted_lasso_cd(A, b, nullptr, pw, 30.0);
  const CdResult c = weighted_lasso_cd(A, b, nullptr, pw, 30.0);
  CHECK(a.theta == c.theta);
  CHECK(a.sweeps == c.sweeps);
}

TEST_CASE("non-finite inputs are rejected") {
  Matrix A(2, 2);
  A << 1.0, 2.0, 3.0, std::nan("");
  const Vector b = Vector::Ones(2);
  CHECK_THROWS_AS(weighted_lasso_cd(A, b, nullptr, Vector::Zero(2), 2.0),
                  std::invalid_argument);
  A(1, 1) = 1.0;
  Vector bad_b = b;
  bad_b[0] = kInf;
  CHECK_THROWS_AS(weighted_lasso_cd(A, bad_b, nullptr, Vector::Zero(2), 2.0),
                  std::invalid_argument);
  Vector bad_pw(2);
  bad_pw << -0.1, 0.0;
  CHECK_THROWS_AS(weighted_lasso_cd(A, b, nullptr, bad_pw, 2.0), std::invalid_argument);
}

TEST_CASE("kkt_residual at and away from solutions") {
  Matrix A(1, 1);
  A << 1.0;
  Vector b(1);
  b << 1.0;
  Vector pw(1);
  pw << 0.5;

  Vector theta(1);
  theta << 0.75;  // closed form
  CHECK(kkt_residual(A, b, nullptr, pw, 1.0, theta) <= 1e-8);

  // zero inside the subdifferential: |g| = 2|b| <= pw
  Vector pw_big(1);
  pw_big << 2.5;
  CHECK(kkt_residual(A, b, nullptr, pw_big, 1.0, Vector::Zero(1)) == 0.0);

  theta << 0.85;  // perturbed active coordinate
  CHECK(kkt_residual(A, b, nullptr, pw, 1.0, theta) > 0.01);
}

TEST_CASE("solver KKT residual meets the reported tolerance on random problems") {
  auto gen = oracles::rng(25);
  for (int t = 0; t < 10; ++t) {
    const int n = 40, d = 25;
    const Matrix A = oracles::gaussian_matrix(n, d, gen);
    const Vector b = oracles::gaussian_vector(n, gen);
    Vector pw(d);
    for (int j = 0; j < d; ++j)
      pw[j] = 0.02 + 0.05 * std::abs(oracles::gaussian_vector(1, gen)[0]);
    const CdResult fit = weighted_lasso_cd(A, b, nullptr, pw, static_cast<double>(n));
    CHECK(fit.converged);
    CHECK(fit.kkt_residual <= 1e-7);
    CHECK(kkt_residual(A, b, nullptr, pw, n, fit.theta) <= 1e-6);
  }
}

TEST_CASE("project_linf") {
  Vector u(2);
  u << 2.0, -3.0;
  Vector expect(2);
  expect << 1.0, -1.0;
  CHECK(project_linf(u, 1.0) == expect);

  Vector v(3);
  v << 0.5, -0.25, 0.0;
  CHECK(project_linf(v, kInf) == v);
  CHECK(project_linf(v, 1.0) == v);  // interior point

  CHECK(project_linf(v, 0.0) == Vector::Zero(3));
  CHECK_THROWS_AS(project_linf(v, -1.0), std::invalid_argument);
}

namespace {

struct SmallConstrained {
  Matrix A;
  Vector b;
  Vector sw;
  Vector pw;
  double n_obj;
  int beta_dim;
  Matrix M;
  Vector c;
};

// Target + one source in the stacked layout, moderate penalties.
SmallConstrained make_instance(std::uint64_t seed, int p = 5, int n_t = 20, int n_s = 15) {
  auto gen = oracles::rng(seed);
  SmallConstrained inst;
  const Matrix X0 = oracles::gaussian_matrix(n_t, p, gen);
  const Matrix X1 = oracles::gaussian_matrix(n_s, p, gen);
  Vector beta = Vector::Zero(p);
  beta[0] = 1.0;
  beta[2] = -0.7;
  Vector delta = Vector::Zero(p);
  delta[1] = 0.5;
  const Vector y0 = X0 * beta + 0.1 * oracles::gaussian_vector(n_t, gen);
  const Vector y1 = X1 * (beta + delta) + 0.1 * oracles::gaussian_vector(n_s, gen);

  const int n = n_t + n_s;
  inst.A = Matrix::Zero(n, 2 * p);
  inst.A.topLeftCorner(n_t, p) = X0;
  inst.A.block(n_t, 0, n_s, p) = X1;
  inst.A.block(n_t, p, n_s, p) = X1;
  inst.b.resize(n);
  inst.b << y0, y1;
  inst.sw = Vector::Ones(n);
  inst.pw = Vector::Constant(2 * p, 0.05);
  inst.n_obj = n;
  inst.beta_dim = p;
  inst.M = X0.transpose() * X0 / n_t;
  inst.c = X0.transpose() * y0 / n_t;
  return inst;
}

}  // namespace

TEST_CASE("inactive constraint reproduces the unconstrained solution") {
  const SmallConstrained inst = make_instance(31);

  const CdResult uncon = weighted_lasso_cd(inst.A, inst.b, &inst.sw, inst.pw, inst.n_obj);

  const AdmmResult shortcut = admm_linf_constrained(
      inst.A, inst.b, &inst.sw, inst.n_obj, inst.pw, inst.beta_dim, inst.M, inst.c, kInf);
  CHECK(shortcut.converged);
  CHECK((shortcut.theta - uncon.theta).lpNorm<Eigen::Infinity>() < 1e-9);

  // a finite radius that never binds exercises the full ADMM loop
  const double slack_radius =
      (inst.c - inst.M * uncon.theta.head(inst.beta_dim)).lpNorm<Eigen::Infinity>() * 3.0;
  const AdmmResult loose = admm_linf_constrained(inst.A, inst.b, &inst.sw, inst.n_obj, inst.pw,
                                                 inst.beta_dim, inst.M, inst.c, slack_radius);
  CHECK(loose.converged);
  CHECK((loose.theta - uncon.theta).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("zero radius with a noiseless identity design recovers beta") {
  const int p = 6;
  Vector beta(p);
  beta << 0.5, -1.0, 0.0, 2.0, 0.0, 0.3;
  const Matrix X = Matrix::Identity(p, p);
  const Vector y = beta;

  const Matrix M = X.transpose() * X / p;
  const Vector c = X.transpose() * y / p;
  AdmmSettings settings;
  settings.tol_primal = 1e-10;
  settings.tol_dual = 1e-10;
  settings.cd.tol = 1e-12;
  const AdmmResult fit =
      admm_linf_constrained(X, y, nullptr, p, Vector::Zero(p), p, M, c, 0.0, settings);
  CHECK(fit.converged);
  CHECK((fit.theta - beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("ADMM objective matches a projected-subgradient oracle") {
  const SmallConstrained inst = make_instance(33);

  // tight radius so the constraint binds
  const CdResult uncon = weighted_lasso_cd(inst.A, inst.b, &inst.sw, inst.pw, inst.n_obj);
  const double reach =
      (inst.c - inst.M * uncon.theta.head(inst.beta_dim)).lpNorm<Eigen::Infinity>();
  const double radius = 0.3 * reach;

  AdmmSettings settings;
  settings.tol_primal = 1e-8;
  settings.tol_dual = 1e-8;
  settings.max_iter = 20000;
  settings.cd.tol = 1e-11;
  const AdmmResult fit = admm_linf_constrained(inst.A, inst.b, &inst.sw, inst.n_obj, inst.pw,
                                               inst.beta_dim, inst.M, inst.c, radius, settings);
  CHECK(fit.converged);
  CHECK((inst.c - inst.M * fit.theta.head(inst.beta_dim)).lpNorm<Eigen::Infinity>() <=
        radius + 1e-5);

  const oracles::WeightedLassoProblem prob{inst.A, inst.b, inst.sw, inst.pw, inst.n_obj};
  // slow independent route: strongly convex subgradient steps 2/(mu (t+1))
  const Matrix hessian =
      2.0 / inst.n_obj * inst.A.transpose() * inst.sw.asDiagonal() * inst.A;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian);
  const double mu = eig.eigenvalues().minCoeff();
  const double lip = eig.eigenvalues().maxCoeff();
  REQUIRE(mu > 0.0);
  const double sg_best = oracles::projected_subgradient_best(
      prob, inst.beta_dim, inst.M, inst.c, radius, 300000, mu, lip);
  CHECK(fit.objective == doctest::Approx(sg_best).epsilon(1e-4));
}

TEST_CASE("ADMM feasibility holds across random instances") {
  for (std::uint64_t seed : {41u, 42u, 43u, 44u}) {
    const SmallConstrained inst = make_instance(seed);
    const double radius = 0.1;
    const AdmmResult fit = admm_linf_constrained(inst.A, inst.b, &inst.sw, inst.n_obj, inst.pw,
                                                 inst.beta_dim, inst.M, inst.c, radius);
    CHECK(fit.constraint_gap <= 1e-5);
    if (fit.converged) {
      CHECK(fit.subproblem_kkt <= 1e-6);
      CHECK(fit.primal_residual <= 1e-5);
    }
  }
}
