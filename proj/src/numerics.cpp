#include "fwl/numerics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

std::atomic<int> g_threads{0};  // 0 = hardware default

std::string point_string(PointView u) {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (j) os << ", ";
    os << u[j];
  }
  os << ")";
  return os.str();
}

}  // namespace

int thread_count() {
  int t = g_threads.load();
  if (t > 0) return t;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : 0); }

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = std::min<std::size_t>(std::max(1, thread_count()), chunks);

  if (workers == 1) {
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      fn(ci, ci * chunk_size, std::min(n, (ci + 1) * chunk_size));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(chunks);
  auto work = [&] {
    for (;;) {
      std::size_t ci = next.fetch_add(1);
      if (ci >= chunks) return;
      try {
        fn(ci, ci * chunk_size, std::min(n, (ci + 1) * chunk_size));
      } catch (...) {
        errors[ci] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  // Rethrow the lowest-index failure so the surfaced error is reproducible.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ComplexPoint::ComplexPoint(std::vector<double> c) : coords(std::move(c)) {
  if (coords.size() % 2 != 0) throw ConfigError("ComplexPoint needs 2n coordinates");
  for (double x : coords) {
    if (!std::isfinite(x)) throw ConfigError("ComplexPoint coordinates must be finite");
  }
}

ComplexPoint point_from(Complex z) { return ComplexPoint(z.real(), z.imag()); }

double abs2(PointView u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return s;
}

double dist2(PointView u, PointView v) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    double d = u[j] - v[j];
    s += d * d;
  }
  return s;
}

double sup_coord(PointView u) {
  double s = 0.0;
  for (double x : u) s = std::max(s, std::abs(x));
  return s;
}

Complex hermitian_inner(PointView u, PointView v) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); j += 2) {
    // u_j * conj(v_j)
    re += u[j] * v[j] + u[j + 1] * v[j + 1];
    im += u[j + 1] * v[j] - u[j] * v[j + 1];
  }
  return {re, im};
}

std::size_t node_cap() {
  static const std::size_t cap = [] {
    if (const char* env = std::getenv("FWL_NODE_CAP")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end != env && v >= 1.0) return static_cast<std::size_t>(v);
    }
    return static_cast<std::size_t>(100000000);  // 1e8
  }();
  return cap;
}

QuadratureGrid QuadratureGrid::build(const GridSpec& spec) {
  if (spec.n < 1) throw ConfigError("grid dimension n must be >= 1");
  if (!(spec.R > 0.0) || !std::isfinite(spec.R)) throw ConfigError("grid R must be positive");
  if (!(spec.h > 0.0) || !std::isfinite(spec.h)) throw ConfigError("grid h must be positive");
  if (spec.h > spec.R) throw ConfigError("grid spacing h must not exceed R");

  QuadratureGrid g;
  g.spec_ = spec;
  const int half = static_cast<int>(std::ceil(spec.R / spec.h - 1e-12));
  g.cells_ = 2 * half;
  g.spacing_ = spec.R / half;

  const int axes = 2 * spec.n;
  double count = 1.0;
  for (int a = 0; a < axes; ++a) count *= g.cells_;
  if (count > static_cast<double>(node_cap())) {
    std::ostringstream os;
    os << "grid would need " << count << " nodes, above the cap of " << node_cap();
    throw CapacityError(os.str());
  }
  g.count_ = static_cast<std::size_t>(count);
  g.node_weight_ = std::pow(g.spacing_, axes);

  g.axis_.resize(g.cells_);
  for (int k = 0; k < g.cells_; ++k) g.axis_[k] = -spec.R + (k + 0.5) * g.spacing_;

  g.coords_.resize(g.count_ * axes);
  parallel_chunks(g.count_, kDefaultChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<int> idx(axes);
    for (std::size_t i = b; i < e; ++i) {
      std::size_t rest = i;
      for (int a = axes - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rest % g.cells_);
        rest /= g.cells_;
      }
      for (int a = 0; a < axes; ++a) g.coords_[i * axes + a] = g.axis_[idx[a]];
    }
  });
  return g;
}

GridPtr QuadratureGrid::build_shared(const GridSpec& spec) {
  return std::make_shared<const QuadratureGrid>(build(spec));
}

Complex integrate(const QuadratureGrid& grid, const ComplexFn& f) {
  auto parts = chunk_map<KahanComplex>(grid.size(), kDefaultChunk,
                                       [&](std::size_t b, std::size_t e) {
    KahanComplex acc;
    for (std::size_t i = b; i < e; ++i) {
      Complex v = f(grid.node(i));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw EvaluationError("non-finite integrand value at node " + point_string(grid.node(i)));
      }
      acc.add(v);
    }
    return acc;
  });
  KahanComplex total;
  for (const auto& p : parts) total.merge(p);
  return total.value() * grid.node_weight();
}

double integrate_real(const QuadratureGrid& grid, const RealFn& f) {
  auto parts = chunk_map<KahanSum>(grid.size(), kDefaultChunk,
                                   [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    for (std::size_t i = b; i < e; ++i) {
      double v = f(grid.node(i));
      if (!std::isfinite(v)) {
        throw EvaluationError("non-finite integrand value at node " + point_string(grid.node(i)));
      }
      acc.add(v);
    }
    return acc;
  });
  KahanSum total;
  for (const auto& p : parts) total.merge(p);
  return total.value() * grid.node_weight();
}

ConvergenceReport convergence_check(const GridSpec& spec, const ComplexFn& f) {
  GridSpec fine = spec;
  fine.h = spec.h / 2.0;
  const QuadratureGrid coarse_grid = QuadratureGrid::build(spec);
  const QuadratureGrid fine_grid = QuadratureGrid::build(fine);

  ConvergenceReport rep;
  rep.value_h = integrate(coarse_grid, f);
  rep.value_half = integrate(fine_grid, f);
  const double denom = std::max(std::abs(rep.value_half), 1e-300);
  rep.relative_gap = std::abs(rep.value_h - rep.value_half) / denom;
  return rep;
}

std::uint64_t Rng::next() {
  // splitmix64; self-contained so streams never depend on the standard library.
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

Complex Rng::unit_complex() {
  double t = uniform() * 6.283185307179586476925286766559;
  return {std::cos(t), std::sin(t)};
}

}  // namespace fwl
