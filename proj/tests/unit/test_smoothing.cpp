#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "drlte/errors.hpp"
#include "drlte/rng.hpp"
#include "drlte/smoothing.hpp"

using namespace drlte;

namespace {

std::vector<double> reference_input() {
  std::vector<double> x;
  for (int i = 0; i < 40; ++i) x.push_back(std::sin(0.3 * i) + std::fmod(0.01 * i * i, 7.0));
  return x;
}

// Reference outputs of a standard zero-phase Butterworth filter (order 2,
// pad 9, odd extension, steady-state initial conditions).
const std::vector<double> kSmooth002 = {
    0.4155830975857787, 0.49631218781564995, 0.5774698161529059, 0.658826257638331,
    0.740151976705584,  0.8212204016819518,  0.9018099681072729, 0.9817052362368439,
    1.0606969989594688, 1.1385814150012836,  1.2151583181088694, 1.2902289555716426,
    1.363593489787844,  1.4350486474272717,  1.504385917556542,  1.5713906813662517,
    1.6358426035427556, 1.6975175335511319,  1.756191061433753,  1.8116437564246475,
    1.863667998101938,  1.9120761995150957,  1.9567101295500327, 1.9974509759282975,
    2.0342297565152125, 2.0670376879951875,  2.095936157276437,  2.121059181289307,
    2.1425945066618888, 2.160750094267519,   2.1757333345982452, 2.1877499721130245,
    2.19700933545148,   2.203729376901335,   2.2081419011163814, 2.210498377759011,
    2.2110767117713084, 2.2101892902059634,  2.20818571321229,   2.2054366839592423};

const std::vector<double> kSmooth03 = {
    -3.667559985387481e-05, 0.310297826230449,  0.6055850014194927, 0.8693392072378957,
    1.084960264497629,      1.2393424632645864, 1.325982417958324,  1.346428409965422,
    1.3102631412958965,     1.2341042416855175, 1.139989829470963,  1.053371110310009,
    1.0008609426849817,     1.0078554924057086, 1.096123985133942,  1.2814914016725378,
    1.5719464835140184,     1.9669984868692818, 2.4596763780590427, 3.0422638258528654,
    3.71384729006904,       4.480457661716326,  5.329499784979071,  6.161893441395936,
    6.7033768004044765,     6.514456130684704,  5.348042671080752,  3.657562197275978,
    2.3520248188218877,     1.9004704851103587, 2.090320529301911,  2.539785625550796,
    3.0527612236215442,     3.6022864405059147, 4.173863915127209,  4.600801192502824,
    4.5138292317288355,     3.6197649373327083, 2.115026645863113,  0.4460283522943835};

}  // namespace

TEST_CASE("normalization maps the range onto [0, 1]") {
  const std::vector<double> r{3.0, -1.0, 5.0, 1.0};
  const auto n = normalize_rewards(r);
  CHECK(n == std::vector<double>{4.0 / 6.0, 0.0, 1.0, 2.0 / 6.0});
  CHECK(normalize_rewards(n) == n);
  CHECK(normalize_rewards(std::vector<double>(5, 2.5)) == std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(normalize_rewards(std::vector<double>{}), InvariantError);
}

TEST_CASE("butterworth coefficients") {
  const auto f = butterworth2(0.02);
  CHECK(f.b[0] == doctest::Approx(0.0009446918438401507).epsilon(1e-12));
  CHECK(f.b[1] == doctest::Approx(0.0018893836876803015).epsilon(1e-12));
  CHECK(f.b[2] == doctest::Approx(0.0009446918438401507).epsilon(1e-12));
  CHECK(f.a[0] == 1.0);
  CHECK(f.a[1] == doctest::Approx(-1.911197067426073).epsilon(1e-12));
  CHECK(f.a[2] == doctest::Approx(0.9149758348014336).epsilon(1e-12));
  // Unit DC gain, half power at the cutoff for the single pass.
  CHECK((f.b[0] + f.b[1] + f.b[2]) / (1.0 + f.a[1] + f.a[2]) == doctest::Approx(1.0));
  CHECK(zero_phase_gain(f, 0.0) == doctest::Approx(1.0));
  CHECK(zero_phase_gain(f, 0.02) == doctest::Approx(0.5));
  CHECK_THROWS_AS(butterworth2(0.0), InvariantError);
  CHECK_THROWS_AS(butterworth2(1.0), InvariantError);
}

TEST_CASE("zero-phase filter matches reference values") {
  const auto x = reference_input();
  const auto a = smooth_rewards(x, 0.02);
  const auto b = smooth_rewards(x, 0.3);
  REQUIRE(a.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(a[i] - kSmooth002[i]) <= 1e-10);
    CHECK(std::abs(b[i] - kSmooth03[i]) <= 1e-10);
  }
}

TEST_CASE("steady state keeps a constant input constant") {
  const auto f = butterworth2(0.05);
  const auto zi = step_state(f);
  const std::vector<double> ones(30, 1.0);
  for (double y : lfilter(f, ones, zi)) CHECK(y == doctest::Approx(1.0).epsilon(1e-12));
  for (double y : smooth_rewards(std::vector<double>(50, 0.7))) {
    CHECK(y == doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("filter properties") {
  SUBCASE("impulse response is symmetric") {
    std::vector<double> x(301, 0.0);
    x[150] = 1.0;
    const auto y = smooth_rewards(x, 0.1);
    for (std::size_t d = 1; d < 100; ++d) CHECK(std::abs(y[150 - d] - y[150 + d]) <= 1e-12);
  }
  SUBCASE("alternating series is strongly attenuated") {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const auto y = smooth_rewards(x, 0.02);
    double peak = 0.0;
    for (std::size_t i = 100; i < 900; ++i) peak = std::max(peak, std::abs(y[i]));
    CHECK(peak < 0.1);
  }
  SUBCASE("mean of a long noisy series is preserved") {
    Engine eng(9);
    std::vector<double> x(5000);
    for (double& v : x) v = 2.0 + uniform(eng, -1.0, 1.0);
    const auto y = smooth_rewards(x, 0.02);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    CHECK(std::abs(my - mx) <= 0.01 * std::abs(mx));
  }
  SUBCASE("slow sinusoid passes") {
    std::vector<double> x(4000);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::sin(std::numbers::pi * 0.002 * static_cast<double>(i));
    }
    const auto y = smooth_rewards(x, 0.02);
    for (std::size_t i = 500; i < 3500; ++i) CHECK(std::abs(y[i] - x[i]) <= 0.01);
  }
}

TEST_CASE("short series are rejected") {
  CHECK_THROWS_AS(smooth_rewards(std::vector<double>(9, 1.0)), InvariantError);
  CHECK_NOTHROW(smooth_rewards(std::vector<double>(10, 1.0)));
}
