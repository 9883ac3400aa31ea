#include <cmath>

#include "doctest.h"
#include "fwl/fock.hpp"
#include "fwl/matrix.hpp"

using namespace fwl;

namespace {

constexpr double kPi = 3.14159265358979323846;
const FockParams kP{1.0, 1};

GridPtr desk_grid() {
  static GridPtr g = QuadratureGrid::build_shared({1, 8.0, 0.05});
  return g;
}

// regularized lower incomplete gamma P(m+1, x) for integer m, via the stable
// complement e^{-x} sum_{k<=m} x^k/k!
double reg_lower_gamma(int m, double x) {
  double sum = 0.0, term = 1.0;
  for (int k = 0; k <= m; ++k) {
    sum += term;
    term *= x / (k + 1);
  }
  return 1.0 - std::exp(-x) * sum;
}

OperatorMatrix scaled(const OperatorMatrix& a, Complex factor) {
  OperatorMatrix out = a;
  out.entries *= factor;
  return out;
}

}  // namespace

TEST_CASE("toeplitz matrix of the constant symbol is the identity at low degree") {
  auto grid = desk_grid();
  OperatorMatrix t1 = toeplitz_matrix(kP, SymbolFn::constant(1.0), 12, *grid);
  Eigen::MatrixXcd diff = t1.entries - Eigen::MatrixXcd::Identity(13, 13);
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("toeplitz matrix degree guard and its compact-support exemption") {
  auto grid = desk_grid();
  CHECK_THROWS_AS(toeplitz_matrix(kP, SymbolFn::constant(1.0), 60, *grid), ConfigError);
  CHECK_NOTHROW(toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 60, *grid));
  CHECK_THROWS_AS(toeplitz_matrix(kP, SymbolFn::constant(1.0), 300, *grid), ConfigError);
}

TEST_CASE("ball indicator diagonal matches the incomplete gamma ladder") {
  auto grid = desk_grid();
  OperatorMatrix t = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 60, *grid);
  for (int m = 0; m <= 60; ++m) {
    CHECK(std::abs(t.entries(m, m).real() - reg_lower_gamma(m, 1.0)) < 1e-6);
    CHECK(std::abs(t.entries(m, m).imag()) < 1e-12);
  }
  // radial symbols produce exactly diagonal truncations here
  for (int i = 0; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      if (i != j) CHECK(t.entries(i, j) == Complex{0.0, 0.0});
    }
  }
}

TEST_CASE("radial fast path agrees with the 2-d quadrature route") {
  auto grid = desk_grid();
  OperatorMatrix radial = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 8, *grid);
  // same evaluator with the radial flag dropped goes through the grid path
  SymbolFn chi2d = SymbolFn::indicator_ball(1.0);
  chi2d.radial = false;
  OperatorMatrix planar = toeplitz_matrix(kP, chi2d, 8, *grid);
  // the planar route carries the plain midpoint boundary error of the disk
  CHECK((radial.entries - planar.entries).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("plane wave entry (0,0) has magnitude e^{-1/(4 alpha)}") {
  auto grid = desk_grid();
  OperatorMatrix t = toeplitz_matrix(kP, SymbolFn::plane_wave({1.0, 0.0}), 10, *grid);
  CHECK(std::abs(t.entries(0, 0)) == doctest::Approx(std::exp(-0.25)).epsilon(1e-6));
}

TEST_CASE("algebra composition: identities, cancellation, idempotent defect") {
  auto grid = desk_grid();
  OperatorMatrix a = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 40, *grid);
  OperatorMatrix same = algebra_compose({{a}});
  CHECK((same.entries - a.entries).cwiseAbs().maxCoeff() == 0.0);

  OperatorMatrix zero = algebra_compose({{a}, {scaled(a, -1.0)}});
  CHECK(zero.entries.cwiseAbs().maxCoeff() == 0.0);

  // T_chi^2 differs from T_{chi^2} = T_chi by a nonzero compact correction
  OperatorMatrix squared = algebra_compose({{a, a}});
  PowerIterationResult defect = norm2_power_iteration(
      algebra_compose({{squared}, {scaled(a, -1.0)}}), 42);
  CHECK(defect.value > 1e-3);

  OperatorMatrix small = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 10, *grid);
  CHECK_THROWS_AS(algebra_compose({{a, small}}), ConfigError);
}

TEST_CASE("kernel coefficients match the quadrature pairing oracle") {
  auto grid = desk_grid();
  const Complex z{1.2, -0.3};
  Eigen::VectorXcd coeff = kernel_coefficients(kP, z, 6, true);
  GridFunction kz = sample_kernel(kP, grid, point_from(z).view(), true);
  for (int m : {0, 1, 5}) {
    GridFunction em = sample_fn(grid, [m](PointView u) {
      Complex uc{u[0], u[1]};
      Complex v{1.0, 0.0};
      for (int k = 1; k <= m; ++k) v *= uc * std::sqrt(1.0 / k);
      return v;
    });
    Complex oracle = pairing(kP, kz, em);
    CHECK(std::abs(coeff(m) - oracle) < 1e-6);
  }
}

TEST_CASE("matrix berezin agrees with the heat-kernel berezin inside the trusted disk") {
  auto grid = desk_grid();
  OperatorMatrix t = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 60, *grid);
  SymbolFn chi = SymbolFn::indicator_ball(1.0);
  for (Complex z : {Complex{0, 0}, Complex{1, 1}, Complex{3, 0}}) {
    Complex lhs = berezin_of_matrix(t, z);
    Complex rhs = berezin_symbol(kP, chi, point_from(z).view(), *grid);
    CHECK(std::abs(lhs - rhs) < 1e-4);
  }
}

TEST_CASE("operator matrix JSON round trip") {
  auto grid = desk_grid();
  OperatorMatrix t = toeplitz_matrix(kP, SymbolFn::plane_wave({1.0, 0.0}), 6, *grid);
  OperatorMatrix back = operator_matrix_from_json(operator_matrix_to_json(t));
  CHECK(back.basis_degree == t.basis_degree);
  CHECK((back.entries - t.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("power iteration: identity, rank-one projector, indicator diagonal") {
  PowerIterationResult id = norm2_power_iteration(identity_matrix(kP, 40), 42);
  CHECK(id.converged);
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-8));

  // Berezin projector k_u (x) k_u has unit norm
  Eigen::VectorXcd c = kernel_coefficients(kP, Complex{1.0, 0.5}, 40, true);
  OperatorMatrix proj;
  proj.params = kP;
  proj.basis_degree = 40;
  proj.entries = c * c.adjoint();
  PowerIterationResult pr = norm2_power_iteration(proj, 42);
  // the truncated coefficient vector is unit up to the basis tail
  CHECK(pr.value == doctest::Approx(1.0).epsilon(1e-6));

  auto grid = desk_grid();
  OperatorMatrix t = toeplitz_matrix(kP, SymbolFn::indicator_ball(1.0), 60, *grid);
  PowerIterationResult pi = norm2_power_iteration(t, 42);
  CHECK(pi.value == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));

  OperatorMatrix zero;
  zero.params = kP;
  zero.basis_degree = 5;
  zero.entries = Eigen::MatrixXcd::Zero(6, 6);
  PowerIterationResult z = norm2_power_iteration(zero, 42);
  CHECK(z.converged);
  CHECK(z.value == 0.0);
}

TEST_CASE("grid operator norm: orthogonal projection control case") {
  Weight canon = Weight::constant(1.0 / kPi);
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.2});
  WeightedGridOperator op = grid_operator_build(kP, canon, canon, ExponentPair(2.0), grid);
  CHECK(op.dense());
  PowerIterationResult pi = norm2_power_iteration(op, 42);
  CHECK(pi.converged);
  CHECK(std::abs(pi.value - 1.0) < 0.02);
}

TEST_CASE("grid operator norms stabilize for the bounded power weight") {
  Weight pw = Weight::power(2.0);
  double prev = -1.0;
  for (double R : {3.0, 4.0}) {
    auto grid = QuadratureGrid::build_shared({1, R, 0.2});
    WeightedGridOperator op = grid_operator_build(kP, pw, pw, ExponentPair(2.0), grid);
    double v = norm2_power_iteration(op, 42).value;
    if (prev > 0.0) CHECK(std::abs(v - prev) / v < 0.05);
    prev = v;
  }
}

TEST_CASE("grid operator norms grow for the gaussian pair") {
  Weight sigma = Weight::gaussian(-1.0);
  Weight w = Weight::gaussian(-4.0);
  std::vector<double> norms;
  for (double R : {2.0, 3.0, 4.0}) {
    auto grid = QuadratureGrid::build_shared({1, R, 0.2});
    WeightedGridOperator op = grid_operator_build(kP, sigma, w, ExponentPair(2.0), grid);
    norms.push_back(norm2_power_iteration(op, 42).value);
  }
  CHECK(norms[0] < norms[1]);
  CHECK(norms[1] < norms[2]);
  CHECK(norms[2] / norms[0] >= 2.0);
}

TEST_CASE("matrix-free application matches a direct kernel sum") {
  Weight pw = Weight::power(2.0);
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});  // 6400 nodes, above the dense cap
  WeightedGridOperator op = grid_operator_build(kP, pw, pw, ExponentPair(2.0), grid);
  CHECK_FALSE(op.dense());

  Rng rng(5);
  std::vector<Complex> f(grid->size());
  for (auto& v : f) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  std::vector<Complex> out;
  op.apply(f, out);

  for (std::size_t i : {std::size_t(17), grid->size() / 2, grid->size() - 3}) {
    PointView zi = grid->node(i);
    Complex acc{};
    for (std::size_t j = 0; j < grid->size(); ++j) {
      PointView uj = grid->node(j);
      Complex lg = hermitian_inner(zi, uj) - abs2(uj);
      acc += std::exp(lg) * f[j];
    }
    acc *= grid->node_weight() / kPi;
    CHECK(std::abs(out[i] - acc) <= 1e-9 * (1.0 + std::abs(acc)));
  }
}

TEST_CASE("weighted adjoint satisfies the inner-product identity") {
  Weight pw = Weight::power(2.0);
  Weight sigma = Weight::constant(1.0);
  for (double h : {0.25, 0.1}) {  // dense and matrix-free paths
    auto grid = QuadratureGrid::build_shared({1, 4.0, h});
    WeightedGridOperator op = grid_operator_build(kP, sigma, pw, ExponentPair(2.0), grid);
    Rng rng(9);
    std::vector<Complex> f(grid->size()), g(grid->size()), tf, tg;
    for (auto& v : f) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (auto& v : g) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    op.apply(f, tf);
    op.apply_weighted_adjoint(g, tg);
    // <Tf, g>_w vs <f, T#g>_sigma, with the diagonal p=2 weights
    Complex lhs{}, rhs{};
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const double wt = std::exp(-abs2(grid->node(i)));
      lhs += tf[i] * std::conj(g[i]) * wt * pw.eval(grid->node(i));
      rhs += f[i] * std::conj(tg[i]) * wt * sigma.eval(grid->node(i));
    }
    CHECK(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("discretized projection is idempotent on sampled entire functions") {
  Weight canon = Weight::constant(1.0 / kPi);
  auto grid = QuadratureGrid::build_shared({1, 5.0, 0.2});
  WeightedGridOperator op = grid_operator_build(kP, canon, canon, ExponentPair(2.0), grid);
  GridFunction f = sample_kernel(kP, grid, ComplexPoint(0.7, 0.0).view(), false);
  std::vector<Complex> once, twice;
  op.apply(f.values, once);
  op.apply(once, twice);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (abs2(grid->node(i)) > 9.0) continue;
    worst = std::max(worst, std::abs(twice[i] - once[i]) / (1.0 + std::abs(once[i])));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("norm bracket contains the control projection norm") {
  Weight canon = Weight::constant(1.0 / kPi);
  auto grid = QuadratureGrid::build_shared({1, 5.0, 0.2});
  SymbolFn one = SymbolFn::constant(1.0);
  NormBracket nb = norm_bracket(kP, NormProblem::toeplitz, &one, canon, canon,
                                ExponentPair(2.0), 1.0, grid, {3.0, 0.25}, 42);
  CHECK(nb.lower <= 1.0);
  CHECK(nb.upper >= 1.0);
  CHECK(nb.point_available);
  CHECK(std::abs(nb.point_estimate - 1.0) < 0.02);
  CHECK(nb.lower <= 1.1 * nb.point_estimate);
  CHECK(nb.point_estimate <= 1.1 * nb.upper);
  CHECK(nb.upper / nb.lower < 1e3);
}

TEST_CASE("norm bracket for the indicator symbol on the power weight") {
  Weight pw = Weight::power(2.0);
  auto grid = QuadratureGrid::build_shared({1, 5.0, 0.2});
  SymbolFn chi = SymbolFn::indicator_ball(1.0);
  NormBracket nb = norm_bracket(kP, NormProblem::toeplitz, &chi, pw, pw, ExponentPair(2.0), 1.0,
                                grid, {3.0, 0.25}, 42);
  CHECK(std::isfinite(nb.upper));
  CHECK(nb.lower > 0.0);
  CHECK(nb.lower <= 1.1 * nb.point_estimate);
  CHECK(nb.point_estimate <= 1.1 * nb.upper);
  CHECK(nb.upper / nb.lower < 1e3);
  // the two characteristic routes agree at this coarse resolution
  double sub = nb.witnesses.at("char_sub_path").get<double>();
  double grd = nb.witnesses.at("char_grid_path").get<double>();
  CHECK(std::abs(sub - grd) / sub < 5e-3);
}

TEST_CASE("norm bracket reports an infinite upper bound for the gaussian pair") {
  Weight sigma = Weight::gaussian(-1.0);
  Weight w = Weight::gaussian(-4.0);
  auto grid = QuadratureGrid::build_shared({1, 3.0, 0.2});
  NormBracket nb = norm_bracket(kP, NormProblem::projection, nullptr, sigma, w,
                                ExponentPair(2.0), 1.0, grid, {2.0, 0.5}, 42);
  CHECK(std::isinf(nb.upper));
  CHECK(nb.witnesses.at("doubling_suspect").get<bool>());
  CHECK(std::isfinite(nb.lower));
  CHECK(nb.lower > 0.0);
}

TEST_CASE("p = 1 bracket stays ordered without a point estimate") {
  Weight one = Weight::constant(1.0);
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.2});
  SymbolFn sym = SymbolFn::constant(1.0);
  NormBracket nb = norm_bracket(kP, NormProblem::toeplitz, &sym, one, one, ExponentPair(1.0),
                                1.0, grid, {2.0, 0.5}, 42);
  CHECK_FALSE(nb.point_available);
  CHECK(nb.lower == doctest::Approx(std::exp(-1.0) / kPi).epsilon(1e-6));
  CHECK(nb.lower <= nb.upper);
  CHECK(std::isfinite(nb.upper));
}

TEST_CASE("localized operators obey the lifted norm bound") {
  Weight pw = Weight::power(2.0);
  auto grid = QuadratureGrid::build_shared({1, 5.0, 0.2});
  SymbolFn chi = SymbolFn::indicator_ball(1.0);
  const double r = 1.0;
  NormBracket nb = norm_bracket(kP, NormProblem::toeplitz, &chi, pw, pw, ExponentPair(2.0), r,
                                grid, {3.0, 0.25}, 42);
  const double cap = std::exp(r * r / 2.0) * nb.upper * 1.1;

  ComplexPoint u(0.5, 0.3);
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    GridFunction f;
    f.grid = grid;
    f.values.resize(grid->size());
    for (auto& v : f.values) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    GridFunction img = localized_operator_apply(kP, LocalKind::toeplitz, &chi, u.view(), r, f);
    double num = weighted_norm(kP, img, ExponentPair(2.0), pw);
    double den = weighted_norm(kP, f, ExponentPair(2.0), pw);
    CHECK(num / den <= cap);
  }
}
