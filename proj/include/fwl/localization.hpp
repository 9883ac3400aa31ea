#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwl/matrix.hpp"

namespace fwl {

enum class WLOrientation { integrate_u, integrate_z };

struct WLProfile {
  std::vector<double> radii;
  std::vector<double> values;  // per radius: sup over samples of the excluded-ball integral
  WLOrientation orientation = WLOrientation::integrate_u;
};

// Precomputes the (p,w)- and (p',w')-normalization fields so a batch of
// excluded-ball integrals reuses them.
class WLContext {
 public:
  WLContext(const FockParams& params, const ExponentPair& p, const Weight& w, GridPtr grid);

  // int_{B_r(fixed)^c} |<T k_z^{(p,w)}, k_u^{(p',w')}>_alpha| dv over the
  // free variable; fixed plays z when integrating over u and vice versa.
  double integral(const OperatorMatrix& T, Complex fixed, double r, WLOrientation o) const;

  const QuadratureGrid& grid() const { return *grid_; }

 private:
  FockParams params_;
  ExponentPair p_;
  Weight w_;
  Weight w_dual_;
  GridPtr grid_;
  std::vector<double> field_pw_;    // g_{p,w} on nodes
  std::vector<double> field_pcwd_;  // g_{p',w'} on nodes
};

double wl_integral(const OperatorMatrix& T, const ExponentPair& p, const Weight& w, Complex fixed,
                   double r, WLOrientation o, GridPtr grid);

WLProfile wl_profile(const OperatorMatrix& T, const ExponentPair& p, const Weight& w,
                     const std::vector<double>& radii, const std::vector<Complex>& samples,
                     WLOrientation o, GridPtr grid);

// Circle sampling used for the suprema: count points on each circle |z| = rho.
std::vector<Complex> circle_samples(const std::vector<double>& rhos, int count);

struct TailNormResult {
  double radius = 0.0;
  double value = 0.0;
  bool exact = false;  // p = 2 pencil solve; otherwise a flagged lower estimate
  PowerIterationResult iteration;
};

// Norm of f -> (Tf) restricted outside B_r(0), from the F^p_{alpha,w} unit
// ball into the hat-w weighted target. Exact for p = 2 via a generalized
// power iteration; a search-based lower estimate otherwise.
std::vector<TailNormResult> tail_norms(const OperatorMatrix& T, const ExponentPair& p,
                                       const Weight& w, const std::vector<double>& radii,
                                       GridPtr grid, std::uint64_t seed = 42);

TailNormResult tail_norm(const OperatorMatrix& T, const ExponentPair& p, const Weight& w,
                         double r, GridPtr grid, std::uint64_t seed = 42);

enum class Verdict { compact_consistent, non_compact_consistent, inconclusive };

std::string to_string(Verdict v);

struct CompactnessConfig {
  std::vector<double> berezin_radii{0.0, 1.0, 2.0, 3.0, 4.0};
  int circle_samples = 16;
  std::vector<double> tail_radii{1.0, 2.0, 3.0};
  double berezin_compact_threshold = 1e-2;   // at the largest radius
  double tail_compact_threshold = 0.1;       // at the largest radius, decreasing
  double berezin_noncompact_floor = 0.1;     // stays above at every radius
  std::uint64_t seed = 42;
};

struct CompactnessVerdict {
  std::vector<double> berezin_sup;  // per berezin radius: sup over circle samples of |T~|
  std::vector<double> tail;         // per tail radius
  Verdict verdict = Verdict::inconclusive;
  CompactnessConfig config;
};

CompactnessVerdict compactness_verdict(const OperatorMatrix& T, const ExponentPair& p,
                                       const Weight& w, GridPtr grid,
                                       const CompactnessConfig& config);

}  // namespace fwl
