#include "drlte/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "drlte/errors.hpp"
#include "drlte/rng.hpp"

namespace drlte {

void MlpShape::validate() const {
  if (sizes.size() < 2) throw InvariantError("mlp: need input and output sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) {
      throw InvariantError("mlp: layer " + std::to_string(i) + " has zero width");
    }
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw InvariantError("mlp: leaky slope must be in [0, 1)");
  }
  if (output == OutputMode::kGroupedSoftmax) {
    std::size_t total = std::accumulate(groups.begin(), groups.end(), std::size_t{0});
    if (groups.empty() || total != output_dim() ||
        std::find(groups.begin(), groups.end(), 0) != groups.end()) {
      throw InvariantError("mlp: softmax groups must partition the output");
    }
  }
}

MlpShape standard_shape(std::size_t input_dim, std::size_t output_dim,
                        OutputMode output, std::vector<std::size_t> groups) {
  MlpShape s;
  s.sizes = {input_dim, 64, 32, output_dim};
  s.output = output;
  s.groups = std::move(groups);
  return s;
}

std::size_t MlpParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

bool MlpParams::same_shape(const MlpParams& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in != o.layers[i].in || layers[i].out != o.layers[i].out) {
      return false;
    }
  }
  return true;
}

void MlpParams::set_zero() {
  for_each([](double& v) { v = 0.0; });
}

void MlpParams::axpy(double a, const MlpParams& x) {
  if (!same_shape(x)) throw InvariantError("mlp: shape mismatch in axpy");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& dst = layers[i];
    const auto& src = x.layers[i];
    for (std::size_t j = 0; j < dst.w.size(); ++j) dst.w[j] += a * src.w[j];
    for (std::size_t j = 0; j < dst.b.size(); ++j) dst.b[j] += a * src.b[j];
  }
}

double MlpParams::squared_distance(const MlpParams& o) const {
  if (!same_shape(o)) throw InvariantError("mlp: shape mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t j = 0; j < layers[i].w.size(); ++j) {
      const double e = layers[i].w[j] - o.layers[i].w[j];
      d += e * e;
    }
    for (std::size_t j = 0; j < layers[i].b.size(); ++j) {
      const double e = layers[i].b[j] - o.layers[i].b[j];
      d += e * e;
    }
  }
  return d;
}

bool MlpParams::all_finite() const {
  bool ok = true;
  for_each([&](double v) { ok = ok && std::isfinite(v); });
  return ok;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  z.set_zero();
  return z;
}

MlpParams init_params(const MlpShape& shape, std::uint64_t seed) {
  shape.validate();
  MlpParams p;
  p.shape = shape;
  Engine eng(derive_seed(seed, 0x6e6e));
  for (std::size_t i = 0; i + 1 < shape.sizes.size(); ++i) {
    DenseLayer l;
    l.in = shape.sizes[i];
    l.out = shape.sizes[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    l.w.resize(l.in * l.out);
    for (double& w : l.w) w = uniform(eng, -bound, bound);
    l.b.assign(l.out, 0.0);
    p.layers.push_back(std::move(l));
  }
  return p;
}

namespace {

void softmax_groups(std::span<double> v, std::span<const std::size_t> groups) {
  std::size_t off = 0;
  for (std::size_t n : groups) {
    auto g = v.subspan(off, n);
    const double mx = *std::max_element(g.begin(), g.end());
    double sum = 0.0;
    for (double& x : g) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : g) x /= sum;
    off += n;
  }
}

}  // namespace

std::vector<double> forward(const MlpParams& p, std::span<const double> input,
                            ForwardCache* cache) {
  const MlpShape& s = p.shape;
  if (input.size() != s.input_dim()) {
    throw InvariantError("mlp: input has " + std::to_string(input.size()) +
                         " entries, expected " + std::to_string(s.input_dim()));
  }
  for (double x : input) {
    if (!std::isfinite(x)) throw InvariantError("mlp: non-finite input");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const std::size_t L = p.layers.size();
  c.pre.resize(L);
  c.act.resize(L + 1);
  c.act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = p.layers[l];
    const auto& a = c.act[l];
    auto& z = c.pre[l];
    z.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = &layer.w[o * layer.in];
      double acc = layer.b[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    auto& next = c.act[l + 1];
    next = z;
    if (l + 1 < L) {
      if (s.hidden == Activation::kLeakyRelu) {
        for (double& v : next) v = v > 0.0 ? v : s.leaky_slope * v;
      }
    } else if (s.output == OutputMode::kGroupedSoftmax) {
      softmax_groups(next, s.groups);
    }
  }
  return c.act[L];
}

void backward(const MlpParams& p, const ForwardCache& cache,
              std::span<const double> output_grad, double scale,
              MlpParams* param_grad, std::vector<double>* input_grad) {
  const MlpShape& s = p.shape;
  const std::size_t L = p.layers.size();
  if (cache.act.size() != L + 1 || cache.pre.size() != L ||
      cache.act[0].size() != s.input_dim()) {
    throw InvariantError("mlp: cache does not match network");
  }
  if (output_grad.size() != s.output_dim()) {
    throw InvariantError("mlp: output gradient has wrong length");
  }
  if (param_grad && !param_grad->same_shape(p)) {
    throw InvariantError("mlp: gradient shape mismatch");
  }

  std::vector<double> g(output_grad.begin(), output_grad.end());
  if (s.output == OutputMode::kGroupedSoftmax) {
    const auto& y = cache.act[L];
    std::size_t off = 0;
    for (std::size_t n : s.groups) {
      double dot = 0.0;
      for (std::size_t j = off; j < off + n; ++j) dot += y[j] * g[j];
      for (std::size_t j = off; j < off + n; ++j) g[j] = y[j] * (g[j] - dot);
      off += n;
    }
  }

  std::vector<double> g_in;
  for (std::size_t l = L; l-- > 0;) {
    const DenseLayer& layer = p.layers[l];
    const auto& a = cache.act[l];
    if (param_grad) {
      DenseLayer& dl = param_grad->layers[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double go = scale * g[o];
        double* row = &dl.w[o * layer.in];
        for (std::size_t i = 0; i < layer.in; ++i) row[i] += go * a[i];
        dl.b[o] += go;
      }
    }
    if (l == 0 && !input_grad) break;
    g_in.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = &layer.w[o * layer.in];
      const double go = g[o];
      for (std::size_t i = 0; i < layer.in; ++i) g_in[i] += row[i] * go;
    }
    if (l > 0 && s.hidden == Activation::kLeakyRelu) {
      const auto& z = cache.pre[l - 1];
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (!(z[i] > 0.0)) g_in[i] *= s.leaky_slope;
      }
    }
    g.swap(g_in);
  }
  if (input_grad) *input_grad = std::move(g);
}

MlpParams backward_params(const MlpParams& p, const ForwardCache& cache,
                          std::span<const double> output_grad) {
  MlpParams grad = p.zeros_like();
  backward(p, cache, output_grad, 1.0, &grad, nullptr);
  return grad;
}

std::vector<double> backward_input(const MlpParams& p,
                                   const ForwardCache& cache,
                                   std::span<const double> output_grad) {
  std::vector<double> g;
  backward(p, cache, output_grad, 1.0, nullptr, &g);
  return g;
}

AdamState AdamState::for_params(const MlpParams& p, AdamConfig cfg) {
  AdamState st;
  st.cfg = cfg;
  st.m = p.zeros_like();
  st.v = p.zeros_like();
  return st;
}

void adam_step(MlpParams& p, const MlpParams& grad, AdamState& st) {
  if (!p.same_shape(grad) || !p.same_shape(st.m) || !p.same_shape(st.v)) {
    throw InvariantError("adam: shape mismatch");
  }
  if (!grad.all_finite()) throw DivergenceError("adam: non-finite gradient");
  ++st.step;
  const auto& c = st.cfg;
  const double t = static_cast<double>(st.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  auto update = [&](std::vector<double>& w, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    update(p.layers[l].w, grad.layers[l].w, st.m.layers[l].w, st.v.layers[l].w);
    update(p.layers[l].b, grad.layers[l].b, st.m.layers[l].b, st.v.layers[l].b);
  }
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (!target.same_shape(online)) throw InvariantError("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvariantError("soft_update: tau outside [0, 1]");
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    auto blend = [tau](std::vector<double>& t, const std::vector<double>& o) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = tau * o[i] + (1.0 - tau) * t[i];
      }
    };
    blend(target.layers[l].w, online.layers[l].w);
    blend(target.layers[l].b, online.layers[l].b);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kParamsMagic[8] = {'D', 'R', 'L', 'T', 'E', 'M', 'L', 'P'};
constexpr char kAdamMagic[8] = {'D', 'R', 'L', 'T', 'E', 'A', 'D', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ParseError("checkpoint: truncated stream");
  }
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& is, std::vector<double>& v) {
  if (!is.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)))) {
    throw ParseError("checkpoint: truncated stream");
  }
}

void expect_magic(std::istream& is, const char (&magic)[8]) {
  char buf[8];
  if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  if (get<std::uint32_t>(is) != kFormatVersion) {
    throw ParseError("checkpoint: unsupported version");
  }
}

}  // namespace

void write_params(std::ostream& os, const MlpParams& p) {
  os.write(kParamsMagic, 8);
  put<std::uint32_t>(os, kFormatVersion);
  const MlpShape& s = p.shape;
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.sizes.size()));
  for (auto n : s.sizes) put<std::uint64_t>(os, n);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(s.hidden));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(s.output));
  put<double>(os, s.leaky_slope);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.groups.size()));
  for (auto n : s.groups) put<std::uint64_t>(os, n);
  for (const auto& l : p.layers) {
    put_doubles(os, l.w);
    put_doubles(os, l.b);
  }
}

MlpParams read_params(std::istream& is) {
  expect_magic(is, kParamsMagic);
  MlpShape s;
  const auto n_sizes = get<std::uint32_t>(is);
  if (n_sizes < 2 || n_sizes > 64) throw ParseError("checkpoint: bad layer count");
  for (std::uint32_t i = 0; i < n_sizes; ++i) s.sizes.push_back(get<std::uint64_t>(is));
  const auto hidden = get<std::uint8_t>(is);
  const auto output = get<std::uint8_t>(is);
  if (hidden > 1 || output > 1) throw ParseError("checkpoint: bad activation tag");
  s.hidden = static_cast<Activation>(hidden);
  s.output = static_cast<OutputMode>(output);
  s.leaky_slope = get<double>(is);
  const auto n_groups = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_groups; ++i) s.groups.push_back(get<std::uint64_t>(is));
  try {
    s.validate();
  } catch (const InvariantError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  MlpParams p = init_params(s, 1);
  for (auto& l : p.layers) {
    get_doubles(is, l.w);
    get_doubles(is, l.b);
  }
  return p;
}

void write_adam(std::ostream& os, const AdamState& st) {
  os.write(kAdamMagic, 8);
  put<std::uint32_t>(os, kFormatVersion);
  put<std::uint64_t>(os, st.step);
  put<double>(os, st.cfg.lr);
  put<double>(os, st.cfg.beta1);
  put<double>(os, st.cfg.beta2);
  put<double>(os, st.cfg.eps);
  write_params(os, st.m);
  write_params(os, st.v);
}

AdamState read_adam(std::istream& is) {
  expect_magic(is, kAdamMagic);
  AdamState st;
  st.step = get<std::uint64_t>(is);
  st.cfg.lr = get<double>(is);
  st.cfg.beta1 = get<double>(is);
  st.cfg.beta2 = get<double>(is);
  st.cfg.eps = get<double>(is);
  st.m = read_params(is);
  st.v = read_params(is);
  return st;
}

}  // namespace drlte
