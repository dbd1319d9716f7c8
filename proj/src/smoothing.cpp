#include "drlte/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "drlte/errors.hpp"

namespace drlte {

std::vector<double> normalize_rewards(std::span<const double> series) {
  if (series.empty()) throw InvariantError("normalize: empty series");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double mn = *lo, mx = *hi;
  std::vector<double> out(series.size(), 0.0);
  if (mx == mn) return out;
  const double span = mx - mn;
  for (std::size_t i = 0; i < series.size(); ++i) {
    out[i] = (series[i] - mn) / span;
  }
  // Exact endpoints even when the division rounds.
  out[static_cast<std::size_t>(lo - series.begin())] = 0.0;
  out[static_cast<std::size_t>(hi - series.begin())] = 1.0;
  return out;
}

LowPass butterworth2(double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw InvariantError("butterworth: cutoff must be in (0, 1) of Nyquist");
  }
  // Bilinear transform of the analog prototype with pre-warped cutoff.
  const double k = std::tan(std::numbers::pi * cutoff / 2.0);
  const double k2 = k * k;
  const double r2 = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + r2 * k + k2);
  LowPass f;
  f.b = {k2 * norm, 2.0 * k2 * norm, k2 * norm};
  f.a = {1.0, 2.0 * (k2 - 1.0) * norm, (1.0 - r2 * k + k2) * norm};
  return f;
}

std::array<double, 2> step_state(const LowPass& f) {
  // Solve (I - A) z = B - a*b0 for the companion form.
  const double b0 = f.b[0];
  const double r1 = f.b[1] - f.a[1] * b0;
  const double r2 = f.b[2] - f.a[2] * b0;
  // z0 = -a1*z0 + z1 + r1 ; z1 = -a2*z0 + r2
  const double z0 = (r1 + r2) / (1.0 + f.a[1] + f.a[2]);
  const double z1 = r2 - f.a[2] * z0;
  return {z0, z1};
}

std::vector<double> lfilter(const LowPass& f, std::span<const double> x,
                            std::array<double, 2> z) {
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double yn = f.b[0] * x[n] + z[0];
    z[0] = f.b[1] * x[n] - f.a[1] * yn + z[1];
    z[1] = f.b[2] * x[n] - f.a[2] * yn;
    y[n] = yn;
  }
  return y;
}

std::vector<double> smooth_rewards(std::span<const double> series,
                                   double cutoff) {
  const std::size_t n = series.size();
  if (n <= kSmoothingPad) {
    throw InvariantError("smooth: series of " + std::to_string(n) +
                         " samples is too short (need more than " +
                         std::to_string(kSmoothingPad) + ")");
  }
  const LowPass f = butterworth2(cutoff);
  const std::size_t pad = kSmoothingPad;
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * series[0] - series[i]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t i = 1; i <= pad; ++i) {
    ext.push_back(2.0 * series[n - 1] - series[n - 1 - i]);
  }
  const auto zi = step_state(f);
  auto y = lfilter(f, ext, {zi[0] * ext.front(), zi[1] * ext.front()});
  std::reverse(y.begin(), y.end());
  const double y0 = y.front();
  y = lfilter(f, y, {zi[0] * y0, zi[1] * y0});
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.end() - static_cast<std::ptrdiff_t>(pad)};
}

double zero_phase_gain(const LowPass& f, double freq) {
  const std::complex<double> z1 = std::polar(1.0, -std::numbers::pi * freq);
  const std::complex<double> z2 = z1 * z1;
  const auto h = (f.b[0] + f.b[1] * z1 + f.b[2] * z2) /
                 (f.a[0] + f.a[1] * z1 + f.a[2] * z2);
  return std::norm(h);
}

}  // namespace drlte
