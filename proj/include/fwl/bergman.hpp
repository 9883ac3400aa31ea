#pragma once

#include <cstdint>
#include <vector>

#include "fwl/numerics.hpp"
#include "fwl/symbols.hpp"
#include "fwl/weights.hpp"

namespace fwl {

// Point of the unit ball B_n (default n = 1, the disk).
struct BallPoint {
  std::vector<double> coords;

  BallPoint() = default;
  explicit BallPoint(std::vector<double> c);
  BallPoint(double re, double im) : BallPoint(std::vector<double>{re, im}) {}
  PointView view() const { return coords; }
};

// <z, a/|a|> tent inequality; a = 0 means the whole ball.
bool tent_membership(PointView a, PointView z);

// beta(z,u) = atanh |phi_z(u)| through 1 - |phi_z(u)|^2 =
// (1-|z|^2)(1-|u|^2)/|1-<z,u>|^2, stable near the boundary.
double bergman_metric(PointView z, PointView u);

// apex a with |a| > 19/20 gets the pushed-out apex (1 - 20(1-|a|)) a/|a|.
struct TentSpec {
  BallPoint apex;
  bool has_tilde = false;
  BallPoint tilde;
};

TentSpec make_tent(const BallPoint& apex);

// Disk quadrature knobs. Tents integrate on a rotated local grid over
// [1-t,1] x [-t,t]; metric balls on the bounding box of their Euclidean
// realization; everything is confined to |z| <= 1 - delta.
struct DiskQuadSpec {
  int tent_cells = 64;
  int ball_cells = 512;        // per axis for whole-disk integrals
  int metric_ball_cells = 20;
  double delta = 1e-3;
};

struct ApexScan {
  std::vector<double> radii{0.0, 0.5, 0.9, 0.96, 0.99};
  int angles = 16;
};

// Bekolle-Bonami characteristic over Carleson tents:
// sup_a (avg_{T_a} sigma) (avg_{T_a} sigma^{-p'/p})^{p/p'}.
CharacteristicReport bp_characteristic(const Weight& sigma, const ExponentPair& p,
                                       const ApexScan& scan, const DiskQuadSpec& quad);

// Same product over Bergman-metric balls D(a,1).
CharacteristicReport cp_characteristic(const Weight& sigma, const ExponentPair& p,
                                       const ApexScan& scan, const DiskQuadSpec& quad);

// z -> sigma(D(z,1)) / v(D(z,1)).
Weight hat_sigma(const Weight& sigma, const DiskQuadSpec& quad);

// Euclidean center/radius of the Bergman ball D(c, rho) on the disk.
void metric_ball_euclid(Complex c, double rho, Complex* center, double* radius);

double tent_measure(const BallPoint& apex, const DiskQuadSpec& quad);

struct ContainmentReport {
  int samples = 0;
  int violations = 0;
  double max_constant = 0.0;
};

// Samples z in T_a and u in D(z,1), verifies u lands in the pushed-out tent
// and tracks max |1 - <u, ta/|ta|>| / (1-|a|).
ContainmentReport containment_check(const BallPoint& apex, int samples, std::uint64_t seed = 42);

// Berezin transform of a Bergman-Toeplitz symbol, computed through the
// Moebius substitution w = phi_z(zeta): the |k_z|^2 density pulls back to
// the normalized area measure, so the integrand stays bounded by |phi|.
Complex bergman_berezin(const SymbolFn& phi, PointView z, const DiskQuadSpec& quad);

struct HatLemmaReport {
  double bp_sigma = 0.0;
  double bp_hat = 0.0;
  double ratio = 0.0;
  double gap_sigma = 0.0;  // apex-scan refinement gaps of the two characteristics
  double gap_hat = 0.0;
  bool boundary_truncated = false;
};

HatLemmaReport hat_lemma_check(double gamma, const ExponentPair& p, const ApexScan& scan,
                               const DiskQuadSpec& quad);

}  // namespace fwl
