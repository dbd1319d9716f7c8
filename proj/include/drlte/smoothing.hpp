#pragma once

#include <array>
#include <span>
#include <vector>

namespace drlte {

/// (r - min) / (max - min). A constant series maps to all zeros.
std::vector<double> normalize_rewards(std::span<const double> series);

/// Second-order Butterworth low-pass. `cutoff` is a fraction of Nyquist.
struct LowPass {
  std::array<double, 3> b{};
  std::array<double, 3> a{};  // a[0] == 1
};

LowPass butterworth2(double cutoff);

/// Zero-phase filtering: forward and backward passes over an odd
/// reflection of the series (9 samples each side), each pass started from
/// the filter's steady state for the edge value. Throws InvariantError when
/// the series has 9 or fewer samples.
std::vector<double> smooth_rewards(std::span<const double> series,
                                   double cutoff = 0.02);

/// Single-pass causal filter with initial state (transposed direct form II).
std::vector<double> lfilter(const LowPass& f, std::span<const double> x,
                            std::array<double, 2> state);

/// Steady-state filter state for a unit step input.
std::array<double, 2> step_state(const LowPass& f);

/// |H(e^{jw})|^2 for the forward-backward pair at `freq` (fraction of
/// Nyquist).
double zero_phase_gain(const LowPass& f, double freq);

inline constexpr std::size_t kSmoothingPad = 9;

}  // namespace drlte
