#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fwl/errors.hpp"

namespace fwl {

using Complex = std::complex<double>;

// A point of C^n seen through its 2n real coordinates, interleaved as
// (Re z_1, Im z_1, Re z_2, Im z_2, ...).
using PointView = std::span<const double>;

struct ComplexPoint {
  std::vector<double> coords;

  ComplexPoint() = default;
  explicit ComplexPoint(std::vector<double> c);
  ComplexPoint(double re, double im) : coords{re, im} {}

  int dim_n() const { return static_cast<int>(coords.size() / 2); }
  Complex coord(int j) const { return {coords[2 * j], coords[2 * j + 1]}; }
  PointView view() const { return coords; }
};

ComplexPoint point_from(Complex z);

double abs2(PointView u);                 // |u|^2
double dist2(PointView u, PointView v);   // |u - v|^2
double sup_coord(PointView u);            // |u|_inf over the 2n real axes
Complex hermitian_inner(PointView u, PointView v);  // <u,v> = sum u_j conj(v_j)

struct GridSpec {
  int n = 1;
  double R = 8.0;
  double h = 0.05;
};

// Node budget; FWL_NODE_CAP overrides the 1e8 default.
std::size_t node_cap();

// Tensor midpoint grid covering [-R,R]^{2n}. Each axis carries 2*ceil(R/h)
// cells of effective spacing R/ceil(R/h) <= h, so the box is covered exactly
// and every midpoint stays strictly inside. Node order is lexicographic with
// axis 0 slowest.
class QuadratureGrid {
 public:
  static QuadratureGrid build(const GridSpec& spec);
  static std::shared_ptr<const QuadratureGrid> build_shared(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim_n() const { return spec_.n; }
  int axes() const { return 2 * spec_.n; }
  std::size_t size() const { return count_; }
  double node_weight() const { return node_weight_; }   // spacing^{2n}
  double spacing() const { return spacing_; }
  int cells_per_axis() const { return cells_; }
  double box_radius() const { return spec_.R; }

  PointView node(std::size_t i) const {
    return {coords_.data() + i * axes(), static_cast<std::size_t>(axes())};
  }
  // Midpoints shared by every axis.
  const std::vector<double>& axis_nodes() const { return axis_; }

 private:
  GridSpec spec_;
  int cells_ = 0;
  double spacing_ = 0.0;
  double node_weight_ = 0.0;
  std::size_t count_ = 0;
  std::vector<double> axis_;
  std::vector<double> coords_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

using ComplexFn = std::function<Complex(PointView)>;
using RealFn = std::function<double(PointView)>;

Complex integrate(const QuadratureGrid& grid, const ComplexFn& f);
double integrate_real(const QuadratureGrid& grid, const RealFn& f);

struct ConvergenceReport {
  Complex value_h;
  Complex value_half;
  double relative_gap;
};

ConvergenceReport convergence_check(const GridSpec& spec, const ComplexFn& f);

// Deterministic RNG used for seeded starts and sample draws. mt19937_64 with
// a hand-rolled uniform keeps streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform();                    // [0, 1)
  double uniform(double a, double b);  // [a, b)
  Complex unit_complex();              // uniform on the unit circle

 private:
  std::uint64_t next();
  std::uint64_t state_;
};

}  // namespace fwl
