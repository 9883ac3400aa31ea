#include <cmath>

#include "doctest.h"
#include "fwl/bergman.hpp"

using namespace fwl;

namespace {

Weight std_radial(double gamma) {
  return make_weight({{"family", "std_radial"}, {"gamma", gamma}}, 1);
}

}  // namespace

TEST_CASE("tent membership at the apex, the center, and the far side") {
  BallPoint origin(0.0, 0.0);
  BallPoint z_any(0.3, -0.8);
  CHECK(tent_membership(origin.view(), z_any.view()));

  BallPoint a(0.5, 0.0);
  BallPoint inside(0.9, 0.0);
  BallPoint outside(-0.9, 0.0);
  CHECK(tent_membership(a.view(), inside.view()));
  CHECK_FALSE(tent_membership(a.view(), outside.view()));
}

TEST_CASE("bergman metric: diagonal, closed form at the origin, symmetry") {
  BallPoint z(0.3, 0.4);
  CHECK(bergman_metric(z.view(), z.view()) == doctest::Approx(0.0));

  BallPoint origin(0.0, 0.0);
  BallPoint half(0.5, 0.0);
  CHECK(bergman_metric(origin.view(), half.view()) ==
        doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    double r1 = std::sqrt(rng.uniform()) * 0.99, t1 = rng.uniform(0.0, 6.28);
    double r2 = std::sqrt(rng.uniform()) * 0.99, t2 = rng.uniform(0.0, 6.28);
    BallPoint p(r1 * std::cos(t1), r1 * std::sin(t1));
    BallPoint q(r2 * std::cos(t2), r2 * std::sin(t2));
    double ab = bergman_metric(p.view(), q.view());
    double ba = bergman_metric(q.view(), p.view());
    CHECK(std::abs(ab - ba) < 1e-12);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("metric balls realize as Euclidean disks with unit metric radius") {
  Complex c{0.4, -0.2};
  Complex ec;
  double er;
  metric_ball_euclid(c, 1.0, &ec, &er);
  double cp[2] = {c.real(), c.imag()};
  for (double theta : {0.0, 1.0, 2.5, 4.0}) {
    Complex edge = ec + er * Complex{std::cos(theta), std::sin(theta)};
    double ep[2] = {edge.real(), edge.imag()};
    CHECK(bergman_metric(cp, PointView(ep, 2)) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pushed-out apex geometry") {
  TentSpec spec = make_tent(BallPoint(0.96, 0.0));
  CHECK(spec.has_tilde);
  CHECK(spec.tilde.coords[0] == doctest::Approx(1.0 - 20.0 * 0.04));
  CHECK_FALSE(make_tent(BallPoint(0.5, 0.0)).has_tilde);
}

TEST_CASE("B_p characteristic: unit weight and the standard radial family") {
  DiskQuadSpec quad;
  ApexScan scan;
  CharacteristicReport flat =
      bp_characteristic(Weight::constant(1.0), ExponentPair(2.0), scan, quad);
  CHECK(flat.value == doctest::Approx(1.0).epsilon(1e-9));

  CharacteristicReport half = bp_characteristic(std_radial(0.5), ExponentPair(2.0), scan, quad);
  CHECK(half.value == doctest::Approx(1.2796).epsilon(5e-3));  // radial quadrature oracle
  CHECK(half.refinement_gap < 0.05);
}

TEST_CASE("negative powers below the integrability edge diverge under shell refinement") {
  // under the |z| <= 1-delta confinement the divergent mass of a non-B_p
  // weight concentrates at the shell, so the detector is instability in
  // delta rather than apex position
  Weight sigma = std_radial(-1.5);
  ApexScan scan{{0.0, 0.5, 0.9}, 4};
  DiskQuadSpec coarse, fine;
  fine.delta = 1e-5;
  double v_coarse = bp_characteristic(sigma, ExponentPair(2.0), scan, coarse).value;
  double v_fine = bp_characteristic(sigma, ExponentPair(2.0), scan, fine).value;
  CHECK(v_fine > 10.0 * v_coarse);

  Weight good = std_radial(0.5);
  double g_coarse = bp_characteristic(good, ExponentPair(2.0), scan, coarse).value;
  double g_fine = bp_characteristic(good, ExponentPair(2.0), scan, fine).value;
  CHECK(std::abs(g_fine - g_coarse) / g_coarse < 0.1);
}

TEST_CASE("C_p characteristic: unit weight and containment in the B_p family") {
  DiskQuadSpec quad;
  ApexScan scan;
  CharacteristicReport flat =
      cp_characteristic(Weight::constant(1.0), ExponentPair(2.0), scan, quad);
  CHECK(flat.value == doctest::Approx(1.0).epsilon(1e-9));

  for (double gamma : {-0.3, 0.5}) {
    double bp = bp_characteristic(std_radial(gamma), ExponentPair(2.0), scan, quad).value;
    double cp = cp_characteristic(std_radial(gamma), ExponentPair(2.0), scan, quad).value;
    CHECK(std::isfinite(bp));
    CHECK(std::isfinite(cp));
    CHECK(cp <= 50.0 * bp);
  }
}

TEST_CASE("tent measure is comparable to the boundary-distance power") {
  DiskQuadSpec quad;
  for (double a : {0.5, 0.9, 0.96, 0.99}) {
    double ratio = tent_measure(BallPoint(a, 0.0), quad) / ((1.0 - a) * (1.0 - a));
    CHECK(ratio > 0.1);
    CHECK(ratio < 10.0);
  }
}

TEST_CASE("hat weight: flat weights are fixed and radial powers stay comparable") {
  DiskQuadSpec quad;
  Weight hat_one = hat_sigma(Weight::constant(1.0), quad);
  BallPoint mid(0.4, 0.4);
  CHECK(hat_one.eval(mid.view()) == doctest::Approx(1.0).epsilon(1e-9));

  Weight sigma = std_radial(0.5);
  Weight hat = hat_sigma(sigma, quad);
  for (double r : {0.0, 0.5, 0.9, 0.95}) {
    BallPoint z(r, 0.0);
    double ratio = hat.eval(z.view()) / sigma.eval(z.view());
    CHECK(ratio > 1.0 / 8.0);
    CHECK(ratio < 8.0);
  }
}

TEST_CASE("containment: samples stay inside the pushed-out tent") {
  ContainmentReport rep = containment_check(BallPoint(0.96, 0.0), 10000, 42);
  CHECK(rep.samples == 10000);
  CHECK(rep.violations == 0);
  CHECK(rep.max_constant < 20.0);
  CHECK(rep.max_constant > 0.0);

  CHECK_THROWS_AS(containment_check(BallPoint(0.9, 0.0), 10, 42), ConfigError);
}

TEST_CASE("the numeric pivot of the containment chain") {
  CHECK((std::sqrt(10.0) + 1.0) * (std::sqrt(10.0) + 1.0) < 20.0);
  CHECK((std::sqrt(10.0) + 1.0) * (std::sqrt(10.0) + 1.0) == doctest::Approx(17.3246).epsilon(1e-4));
  CHECK(std::tanh(1.0) < 0.8);
}

TEST_CASE("disk Berezin transform: constants, small indicators, boundary decay") {
  DiskQuadSpec quad;
  SymbolFn one = SymbolFn::constant(1.0);
  for (double r : {0.0, 0.5, 0.9}) {
    BallPoint z(r, 0.0);
    Complex v = bergman_berezin(one, z.view(), quad);
    CHECK(std::abs(v - 1.0) < 2e-3);
  }

  SymbolFn chi = SymbolFn::indicator_ball(0.5);
  BallPoint z0(0.0, 0.0);
  CHECK(bergman_berezin(chi, z0.view(), quad).real() == doctest::Approx(0.25).epsilon(1e-3));
  BallPoint zb(0.95, 0.0);
  CHECK(bergman_berezin(chi, zb.view(), quad).real() < 0.05);
}

TEST_CASE("weighted norms against sigma and hat-sigma are equivalent on test functions") {
  DiskQuadSpec quad;
  Weight sigma = std_radial(0.5);
  Weight hat = hat_sigma(sigma, quad);

  // holomorphic test functions: monomials and kernels
  std::vector<ComplexFn> tests;
  for (int m : {0, 1, 3}) {
    tests.push_back([m](PointView u) {
      Complex uc{u[0], u[1]};
      Complex v{1.0, 0.0};
      for (int k = 0; k < m; ++k) v *= uc;
      return v;
    });
  }
  tests.push_back([](PointView u) {
    Complex uc{u[0], u[1]};
    return 1.0 / std::pow(Complex{1.0, 0.0} - uc * Complex{0.6, -0.35}, 2);
  });

  const int m = 160;
  const double h = 2.0 / m;
  for (const auto& f : tests) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        double x = -1.0 + (i + 0.5) * h, y = -1.0 + (j + 0.5) * h;
        if (x * x + y * y > (1.0 - quad.delta) * (1.0 - quad.delta)) continue;
        double pt[2] = {x, y};
        double mag = std::pow(std::abs(f(PointView(pt, 2))), 2.0);
        num += mag * hat.eval(PointView(pt, 2));
        den += mag * sigma.eval(PointView(pt, 2));
      }
    }
    double ratio = num / den;
    CHECK(ratio > 1.0 / 8.0);
    CHECK(ratio < 8.0);
  }
}

TEST_CASE("hat lemma ratio at a single family member") {
  DiskQuadSpec quad;
  ApexScan scan;
  scan.angles = 4;
  HatLemmaReport rep = hat_lemma_check(0.5, ExponentPair(2.0), scan, quad);
  CHECK(std::isfinite(rep.bp_sigma));
  CHECK(std::isfinite(rep.bp_hat));
  CHECK(rep.ratio <= 50.0);
  CHECK(rep.boundary_truncated);
}
