#pragma once

#include <complex>

namespace fwl {

// Compensated (Kahan) accumulator. Chunked parallel sums merge their
// partials in fixed chunk order, so totals do not depend on thread count.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;

  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  void merge(const KahanSum& o) {
    add(o.sum);
    add(-o.c);
  }
  double value() const { return sum; }
};

struct KahanComplex {
  KahanSum re, im;

  void add(std::complex<double> x) {
    re.add(x.real());
    im.add(x.imag());
  }
  void merge(const KahanComplex& o) {
    re.merge(o.re);
    im.merge(o.im);
  }
  std::complex<double> value() const { return {re.value(), im.value()}; }
};

}  // namespace fwl
