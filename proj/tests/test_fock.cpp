#include <cmath>
#include <limits>

#include "doctest.h"
#include "fwl/fock.hpp"

using namespace fwl;

namespace {

constexpr double kPi = 3.14159265358979323846;
const FockParams kP{1.0, 1};

GridPtr desk_grid() {
  static GridPtr g = QuadratureGrid::build_shared({1, 8.0, 0.05});
  return g;
}

ComplexPoint cpt(double re, double im) { return ComplexPoint(re, im); }

}  // namespace

TEST_CASE("kernel evaluations at distinguished points") {
  CHECK(kernel_eval(kP, cpt(0, 0).view(), cpt(1.3, -0.4).view()) == Complex{1.0, 0.0});
  CHECK(normalized_kernel_eval(kP, cpt(0, 0).view(), cpt(1.3, -0.4).view()) == Complex{1.0, 0.0});

  Complex K = kernel_eval(kP, cpt(1, 0).view(), cpt(1, 0).view());
  CHECK(K.real() == doctest::Approx(std::exp(1.0)));
  Complex k = normalized_kernel_eval(kP, cpt(1, 0).view(), cpt(1, 0).view());
  CHECK(k.real() == doctest::Approx(std::exp(0.5)));

  CHECK_THROWS_AS(kernel_eval(kP, cpt(30, 0).view(), cpt(30, 0).view()), EvaluationError);
  Complex lg = kernel_log(kP, cpt(30, 0).view(), cpt(30, 0).view());
  CHECK(lg.real() == doctest::Approx(900.0));
}

TEST_CASE("pairing: probability normalization and kernel overlaps") {
  auto grid = desk_grid();
  GridFunction one = sample_fn(grid, [](PointView) { return Complex{1.0, 0.0}; });
  Complex total = pairing(kP, one, one);
  CHECK(std::abs(total - 1.0) < 1e-6);

  for (Complex z : {Complex{0.5, 0.2}, Complex{-2.0, 1.0}, Complex{3.0, 0.0}}) {
    GridFunction kz = sample_kernel(kP, grid, point_from(z).view(), true);
    CHECK(std::abs(pairing(kP, kz, kz) - 1.0) < 1e-6);
  }

  // <k_0, k_1> magnitude e^{-1/2}
  GridFunction k0 = sample_kernel(kP, grid, cpt(0, 0).view(), true);
  GridFunction k1 = sample_kernel(kP, grid, cpt(1, 0).view(), true);
  CHECK(std::abs(pairing(kP, k0, k1)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("reproducing identity <K_z, K_u> = K_z(u)") {
  auto grid = desk_grid();
  const Complex z{0.8, -0.5}, u{-1.2, 0.9};
  GridFunction Kz = sample_kernel(kP, grid, point_from(z).view(), false);
  GridFunction Ku = sample_kernel(kP, grid, point_from(u).view(), false);
  Complex lhs = pairing(kP, Kz, Ku);
  Complex rhs = kernel_eval(kP, point_from(z).view(), point_from(u).view());
  CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-5);
}

TEST_CASE("gaussian overlap identity on seeded pairs") {
  auto grid = desk_grid();
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Complex z = Complex{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    Complex u = Complex{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    GridFunction kz = sample_kernel(kP, grid, point_from(z).view(), true);
    GridFunction ku = sample_kernel(kP, grid, point_from(u).view(), true);
    double lhs = std::abs(pairing(kP, kz, ku));
    double rhs = std::exp(-0.5 * std::norm(z - u));
    CHECK(std::abs(lhs - rhs) / rhs < 1e-6);
  }
}

TEST_CASE("kernel_norm: closed forms and ratio brackets") {
  auto grid = desk_grid();
  KernelNormResult at0 =
      kernel_norm(kP, cpt(0, 0).view(), ExponentPair(2.0), Weight::constant(1.0), *grid);
  CHECK(at0.value == doctest::Approx(std::sqrt(kPi)).epsilon(1e-6));
  CHECK_FALSE(at0.truncation_warning);

  // w = (p alpha / 2 pi)^n makes ||K_z|| = e^{alpha |z|^2/2} exactly
  Weight canon = Weight::constant(2.0 * 1.0 / (2.0 * kPi));
  for (double rho : {0.0, 1.0, 2.5}) {
    KernelNormResult res = kernel_norm(kP, cpt(rho, 0).view(), ExponentPair(2.0), canon, *grid);
    CHECK(res.log_value == doctest::Approx(rho * rho / 2.0).epsilon(1e-8));
  }

  Weight pw = Weight::power(2.0);
  for (double p : {1.5, 2.0, 3.0}) {
    double lo = 1e300, hi = 0.0;
    for (double rho : {0.0, 1.0, 2.0, 3.0, 4.0}) {
      KernelNormResult res = kernel_norm(kP, cpt(rho, 0).view(), ExponentPair(p), pw, *grid);
      lo = std::min(lo, res.ratio_vs_estimate);
      hi = std::max(hi, res.ratio_vs_estimate);
    }
    CHECK(hi / lo < 10.0);
    CHECK(lo > 0.1);
    CHECK(hi < 10.0);
  }

  KernelNormResult far =
      kernel_norm(kP, cpt(5.5, 0).view(), ExponentPair(2.0), Weight::constant(1.0), *grid);
  CHECK(far.truncation_warning);
}

TEST_CASE("kernel_norm_field matches pointwise kernel_norm at nodes") {
  auto grid = QuadratureGrid::build_shared({1, 6.0, 0.1});
  Weight pw = Weight::power(2.0);
  auto field = kernel_norm_field(kP, ExponentPair(2.0), pw, *grid);
  for (std::size_t idx : {std::size_t(0), grid->size() / 2, grid->size() / 3}) {
    KernelNormResult res = kernel_norm(kP, grid->node(idx), ExponentPair(2.0), pw, *grid);
    const double g_val = std::exp(res.log_value - abs2(grid->node(idx)) / 2.0);
    CHECK(field[idx] == doctest::Approx(g_val).epsilon(1e-10));
  }
}

TEST_CASE("norm product stays inside the two-sided bracket") {
  auto grid = desk_grid();
  Weight pw = Weight::power(2.0);
  for (double p : {1.5, 2.0, 3.0}) {
    ExponentPair ep(p), epc(ExponentPair(p).conj());
    Weight dual = dual_weight(pw, ep);
    for (double rho : {0.0, 1.5, 3.0, 4.0}) {
      KernelNormResult a = kernel_norm(kP, cpt(rho, 0).view(), ep, pw, *grid);
      KernelNormResult b = kernel_norm(kP, cpt(rho, 0).view(), epc, dual, *grid);
      double normalized = std::exp(a.log_value + b.log_value - rho * rho);
      CHECK(normalized > 1.0 / 20.0);
      CHECK(normalized < 20.0);
    }
  }
}

TEST_CASE("projection reproduces constants and kernel combinations") {
  auto grid = desk_grid();
  GridFunction one = sample_fn(grid, [](PointView) { return Complex{1.0, 0.0}; });
  for (Complex z : {Complex{0, 0}, Complex{2, 1}, Complex{-3, 0}}) {
    Complex v = projection_apply(kP, one, point_from(z).view());
    CHECK(std::abs(v - 1.0) < 1e-5);
  }

  const Complex u1{0.5, 0.0}, u2{-0.7, 1.1};
  const Complex a{2.0, 0.0}, b{0.0, -0.7};
  GridFunction f = sample_fn(grid, [&](PointView xi) {
    return a * kernel_eval(kP, point_from(u1).view(), xi) +
           b * kernel_eval(kP, point_from(u2).view(), xi);
  });
  for (Complex z : {Complex{0.3, 0.1}, Complex{-1.0, 2.0}, Complex{2.5, -1.0}}) {
    Complex expected = a * kernel_eval(kP, point_from(u1).view(), point_from(z).view()) +
                       b * kernel_eval(kP, point_from(u2).view(), point_from(z).view());
    Complex got = projection_apply(kP, f, point_from(z).view());
    CHECK(std::abs(got - expected) / std::abs(expected) < 1e-5);
  }

  bool warn = false;
  projection_apply(kP, one, cpt(5.5, 0).view(), &warn);
  CHECK(warn);
}

TEST_CASE("Toeplitz action of the ball indicator on constants") {
  auto grid = desk_grid();
  GridFunction one = sample_fn(grid, [](PointView) { return Complex{1.0, 0.0}; });
  SymbolFn chi = SymbolFn::indicator_ball(1.0);
  Complex v = toeplitz_apply(kP, chi, one, cpt(0, 0).view());
  CHECK(v.real() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(5e-3));
  CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("berezin transform: constants, ball indicator, plane wave") {
  auto grid = desk_grid();
  SymbolFn one = SymbolFn::constant(1.0);
  for (Complex z : {Complex{0, 0}, Complex{1.5, -2.0}, Complex{0, 3}}) {
    Complex v = berezin_symbol(kP, one, point_from(z).view(), *grid);
    CHECK(std::abs(v - 1.0) < 1e-6);
  }

  SymbolFn chi = SymbolFn::indicator_ball(1.0);
  Complex at0 = berezin_symbol(kP, chi, cpt(0, 0).view(), *grid);
  CHECK(at0.real() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(5e-3));
  Complex at4 = berezin_symbol(kP, chi, cpt(4, 0).view(), *grid);
  CHECK(std::abs(at4) < 5e-4);

  SymbolFn wave = SymbolFn::plane_wave({1.0, 0.0});
  for (Complex z : {Complex{0, 0}, Complex{2, 1}}) {
    Complex v = berezin_symbol(kP, wave, point_from(z).view(), *grid);
    CHECK(std::abs(v) == doctest::Approx(std::exp(-0.25)).epsilon(1e-6));
  }
}

TEST_CASE("berezin positivity and sup-norm contractivity") {
  auto grid = desk_grid();
  SymbolFn step = SymbolFn::indicator_ball(2.0);
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    Complex z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    Complex v = berezin_symbol(kP, step, point_from(z).view(), *grid);
    CHECK(v.real() >= -1e-12);
    CHECK(std::abs(v) <= 1.0 + 1e-9);
  }
}

TEST_CASE("test functions: main3 with trivial source weight") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});
  const double inf = std::numeric_limits<double>::infinity();
  TestFunction tf = test_function_build(kP, TestVariant::main3, ExponentPair(2.0),
                                        Weight::constant(1.0), nullptr, cpt(0.5, -0.5).view(),
                                        1.0, inf, grid);
  CHECK_FALSE(tf.degenerate);
  CHECK(tf.norm_bound == doctest::Approx(1.0));  // (int_Q 1)^{1/2}
  for (std::size_t i = 0; i < grid->size(); ++i) {
    PointView xi = grid->node(i);
    const bool inside = std::abs(xi[0] - 0.5) <= 0.5 && std::abs(xi[1] + 0.5) <= 0.5;
    if (inside) {
      Complex expect = normalized_kernel_eval(kP, cpt(0.5, -0.5).view(), xi);
      CHECK(std::abs(tf.values.values[i] - expect) < 1e-12);
    } else {
      CHECK(tf.values.values[i] == Complex{0.0, 0.0});
    }
  }
}

TEST_CASE("test functions: gaussian cutoff set covers the cube for large m") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});
  TestFunction tf = test_function_build(kP, TestVariant::main3, ExponentPair(2.0),
                                        Weight::gaussian(-1.0), nullptr, cpt(0, 0).view(), 1.0,
                                        10.0, grid);
  CHECK_FALSE(tf.degenerate);
  // E_10 is the ball of radius sqrt(ln 10) ~ 1.52 and covers Q_1(0); the
  // carried bound is (int_Q e^{|xi|^2})^{1/2}
  CHECK(tf.norm_bound == doctest::Approx(std::sqrt(1.18804)).epsilon(1e-3));

  CHECK_THROWS_AS(test_function_build(kP, TestVariant::main3, ExponentPair(2.0),
                                      Weight::gaussian(-1.0), nullptr, cpt(0, 0).view(), 1.0,
                                      0.5, grid),
                  DegenerateTestError);
}

TEST_CASE("built test functions respect their carried norm bounds") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.05});
  const double inf = std::numeric_limits<double>::infinity();
  Weight pw = Weight::power(2.0);
  SymbolFn chi = SymbolFn::indicator_ball(1.5);

  TestFunction main3 = test_function_build(kP, TestVariant::main3, ExponentPair(2.0), pw,
                                           nullptr, cpt(0.4, 0.2).view(), 1.0, inf, grid);
  CHECK(weighted_norm(kP, main3.values, ExponentPair(2.0), pw) <= main3.norm_bound * 1.01);

  TestFunction nece = test_function_build(kP, TestVariant::nece, ExponentPair(3.0), pw, &chi,
                                          cpt(0.4, 0.2).view(), 1.0, inf, grid);
  CHECK_FALSE(nece.degenerate);
  CHECK(weighted_norm(kP, nece.values, ExponentPair(3.0), pw) <= nece.norm_bound * 1.01);
}

TEST_CASE("test functions: nece flags a symbol vanishing on the cube") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});
  SymbolFn chi = SymbolFn::indicator_ball(0.5);
  TestFunction tf = test_function_build(kP, TestVariant::nece, ExponentPair(2.0),
                                        Weight::constant(1.0), &chi, cpt(2.5, 2.5).view(), 1.0,
                                        std::numeric_limits<double>::infinity(), grid);
  CHECK(tf.degenerate);
  for (const auto& v : tf.values.values) CHECK(v == Complex{0.0, 0.0});
  CHECK(tf.norm_bound == doctest::Approx(0.0));
}

TEST_CASE("localized operators: zero symbol and orthogonal inputs") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});
  GridFunction f = sample_fn(grid, [](PointView u) { return Complex{u[0], u[1]}; });
  SymbolFn zero = SymbolFn::constant(0.0);
  GridFunction out =
      localized_operator_apply(kP, LocalKind::toeplitz, &zero, cpt(0, 0).view(), 1.0, f);
  for (const auto& v : out.values) CHECK(v == Complex{0.0, 0.0});

  // Gram-Schmidt against k_u under the cube-restricted lambda pairing
  const ComplexPoint u = cpt(0.2, 0.1), vpt = cpt(0.9, -0.3);
  GridFunction ku = sample_kernel(kP, grid, u.view(), true);
  GridFunction kv = sample_kernel(kP, grid, vpt.view(), true);
  auto cube_pair = [&](const GridFunction& a, const GridFunction& b) {
    Complex acc{};
    for (std::size_t i = 0; i < grid->size(); ++i) {
      PointView xi = grid->node(i);
      if (std::abs(xi[0] - 0.2) > 0.5 || std::abs(xi[1] - 0.1) > 0.5) continue;
      acc += a.values[i] * std::conj(b.values[i]) * std::exp(-abs2(xi));
    }
    return acc * (grid->node_weight() / kPi);
  };
  Complex coef = cube_pair(kv, ku) / cube_pair(ku, ku);
  GridFunction g;
  g.grid = grid;
  g.values.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    g.values[i] = kv.values[i] - coef * ku.values[i];
  }
  GridFunction img =
      localized_operator_apply(kP, LocalKind::projection, nullptr, u.view(), 1.0, g);
  double sup = 0.0;
  for (const auto& v : img.values) sup = std::max(sup, std::abs(v));
  CHECK(sup < 1e-8);
}

TEST_CASE("localized operators reject cubes outside the grid") {
  auto grid = QuadratureGrid::build_shared({1, 4.0, 0.1});
  GridFunction f = sample_fn(grid, [](PointView) { return Complex{1.0, 0.0}; });
  CHECK_THROWS_AS(
      localized_operator_apply(kP, LocalKind::projection, nullptr, cpt(3.9, 0).view(), 1.0, f),
      TruncationError);
}
