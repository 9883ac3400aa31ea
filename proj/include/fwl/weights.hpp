#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fwl/numerics.hpp"
#include "fwl/symbols.hpp"
#include "json.hpp"

namespace fwl {

struct ExponentPair {
  double p = 2.0;

  explicit ExponentPair(double p_in = 2.0);
  bool is_one() const { return p == 1.0; }
  // p' with 1/p + 1/p' = 1; +inf when p = 1.
  double conj() const;
  // p'/p, the dual-weight exponent.
  double dual_ratio() const { return conj() / p; }
};

// Pointwise-evaluable nonnegative weight on C^n (or on the disk for the
// Bergman module). radial_jumps lists radii where the evaluator is
// discontinuous; cube quadratures refine cells crossing those circles.
struct Weight {
  RealFn eval;
  std::string family;
  nlohmann::json params;
  bool radial = false;
  bool strictly_positive = false;
  std::vector<double> radial_jumps;

  double operator()(PointView z) const { return eval(z); }

  static Weight constant(double value);
  static Weight gaussian(double beta);          // e^{beta |z|^2}
  static Weight power(double beta);             // (1 + |z|)^beta
  static Weight radial_step(double radius, double inside, double outside);
  static Weight anisotropic_power(std::vector<double> exponents);  // prod (1+|t_j|)^{e_j}
  static Weight product(std::vector<Weight> factors);
};

// {"family":"gaussian","beta":-1.0} | {"family":"power","beta":2.0} |
// {"family":"constant","value":1.0} | {"family":"radial_step",...} |
// {"family":"anisotropic_power","exponents":[...]} |
// {"family":"product","factors":[...]} | {"family":"tabulated",...}
Weight make_weight(const nlohmann::json& j, int n);

struct CubeSpec {
  ComplexPoint center;
  double side = 1.0;
};

struct ScanSpec {
  double radius = 6.0;
  double step = 0.25;
};

ScanSpec make_scan(const nlohmann::json& j);

struct CharacteristicReport {
  double value = 0.0;
  ComplexPoint argmax_center;
  double scan_radius = 0.0;
  double scan_step = 0.0;
  double refinement_gap = 0.0;
};

struct DoublingReport {
  CharacteristicReport report;
  // value at the full scan radius divided by the value at half the radius;
  // a ratio above kDoublingSuspectRatio marks the weight doubling-suspect.
  double growth_ratio = 1.0;
  bool suspect = false;
};

inline constexpr double kDoublingSuspectRatio = 1.25;
// Cube averages beyond this are reported as the +inf sentinel.
inline constexpr double kDivergenceSentinel = 1e150;

// w(Q) = int_Q w dv on a cube-aligned midpoint subgrid of spacing <= h.
// Throws TruncationError when the cube escapes [-R,R]^{2n}.
double cube_mass(const Weight& w, const CubeSpec& q, const GridSpec& resolution);

// As cube_mass but without the box check (used by hat evaluators that roam).
double cube_mass_unchecked(const Weight& w, const CubeSpec& q, double max_spacing);

// z -> w(Q_1(z)), evaluated lazily on a per-call subgrid of spacing <= h.
Weight hat_weight(const Weight& w, double max_spacing);

// w' = w^{-p'/p}; requires p > 1 and a strictly positive w.
Weight dual_weight(const Weight& w, const ExponentPair& p);

DoublingReport doubling_constant(const Weight& w, double r, const ScanSpec& scan,
                                 const GridSpec& resolution);

// Joint A_{p,r} characteristic of (w, sigma), phi-adapted when phi is given:
//   p > 1: sup_Q (avg_Q w) (avg_Q |phi|^{p'} sigma^{-p'/p})^{p/p'}
//   p = 1: sup_Q (avg_Q w) max_Q (|phi| / sigma)
// The sup scans cube centers on a step-lattice inside the scan radius; the
// report carries the gap against a step/2 rescan.
CharacteristicReport joint_characteristic(const Weight& w, const Weight& sigma,
                                          const ExponentPair& p, double r,
                                          const SymbolFn* phi, const ScanSpec& scan,
                                          const GridSpec& resolution);

// Scan lattice shared by characteristic scans: step-multiples with
// |center|_inf <= radius, lexicographic order.
std::vector<ComplexPoint> scan_centers(int n, double radius, double step);

}  // namespace fwl
