#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gpicl/errors.hpp"

namespace gpicl {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants). xgk[1], xgk[3], ... are the Gauss abscissae.
inline constexpr double kGk15Xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGk15Wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15Wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15_segment(F&& f, double a, double b, double& value, double& error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = fc * kGk15Wg[3];
  double resk = fc * kGk15Wgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kGk15Xgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    resk += kGk15Wgk[j] * fsum;
    if (j % 2 == 1) resg += kGk15Wg[j / 2] * fsum;
  }
  value = resk * half;
  error = std::abs((resk - resg) * half);
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

// Adaptive bisection driven by per-segment Kronrod-vs-Gauss error estimates:
// always splits the segment with the largest error. Throws NumericalError
// with the achieved tolerance when max_subdivisions is exhausted.
template <class F>
QuadratureResult integrate_gk15(F&& f, double a, double b, double abs_tol = 1e-10,
                                double rel_tol = 1e-8, int max_subdivisions = 200) {
  if (!(b >= a)) throw InputDomainError("integrate_gk15: need b >= a");
  if (a == b) return {0.0, 0.0, 0};

  std::vector<detail::Segment> heap;
  auto push = [&](double lo, double hi) {
    detail::Segment s{lo, hi, 0.0, 0.0};
    detail::gk15_segment(f, lo, hi, s.value, s.error);
    heap.push_back(s);
    std::push_heap(heap.begin(), heap.end());
  };
  push(a, b);

  QuadratureResult out;
  for (int iter = 0;; ++iter) {
    double total = 0.0, err = 0.0;
    for (const auto& s : heap) {
      total += s.value;
      err += s.error;
    }
    out.value = total;
    out.error_estimate = err;
    out.subdivisions = iter;
    if (err <= std::max(abs_tol, rel_tol * std::abs(total))) return out;
    if (iter >= max_subdivisions) {
      std::ostringstream msg;
      msg << "integrate_gk15: no convergence after " << max_subdivisions
          << " subdivisions (achieved abs error " << err << ", value " << total << ")";
      throw NumericalError(msg.str());
    }
    std::pop_heap(heap.begin(), heap.end());
    const detail::Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    push(worst.a, mid);
    push(mid, worst.b);
  }
}

}  // namespace gpicl
