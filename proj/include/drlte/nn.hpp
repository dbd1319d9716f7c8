#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace drlte {

enum class Activation : std::uint8_t { kLeakyRelu = 0, kIdentity = 1 };
enum class OutputMode : std::uint8_t { kIdentity = 0, kGroupedSoftmax = 1 };

struct MlpShape {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  Activation hidden = Activation::kLeakyRelu;
  OutputMode output = OutputMode::kIdentity;
  std::vector<std::size_t> groups;  // softmax blocks, must sum to output size
  double leaky_slope = 0.01;

  void validate() const;
  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }
  bool operator==(const MlpShape&) const = default;
};

/// Two hidden layers of 64 and 32 units.
MlpShape standard_shape(std::size_t input_dim, std::size_t output_dim,
                        OutputMode output = OutputMode::kIdentity,
                        std::vector<std::size_t> groups = {});

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

/// Weights of a dense feedforward network. Also used as the gradient type,
/// so the element-wise helpers treat it as one flat vector.
struct MlpParams {
  MlpShape shape;
  std::vector<DenseLayer> layers;

  std::size_t num_scalars() const;
  bool same_shape(const MlpParams& o) const;
  void set_zero();
  /// this += a * x
  void axpy(double a, const MlpParams& x);
  double squared_distance(const MlpParams& o) const;
  bool all_finite() const;
  MlpParams zeros_like() const;

  template <typename F>
  void for_each(F&& f) {
    for (auto& l : layers) {
      for (double& v : l.w) f(v);
      for (double& v : l.b) f(v);
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& l : layers) {
      for (double v : l.w) f(v);
      for (double v : l.b) f(v);
    }
  }
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero. Deterministic per seed.
MlpParams init_params(const MlpShape& shape, std::uint64_t seed);

/// Pre-activations and activations of every layer; act[0] is the input and
/// act.back() the network output.
struct ForwardCache {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

std::vector<double> forward(const MlpParams& p, std::span<const double> input,
                            ForwardCache* cache = nullptr);

/// Backpropagates `output_grad` (dJ/d output). Adds scale * dJ/dtheta into
/// `param_grad` when given and writes dJ/d input into `input_grad` when given.
void backward(const MlpParams& p, const ForwardCache& cache,
              std::span<const double> output_grad, double scale,
              MlpParams* param_grad, std::vector<double>* input_grad);

MlpParams backward_params(const MlpParams& p, const ForwardCache& cache,
                          std::span<const double> output_grad);
std::vector<double> backward_input(const MlpParams& p,
                                   const ForwardCache& cache,
                                   std::span<const double> output_grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  MlpParams m;
  MlpParams v;
  std::uint64_t step = 0;

  static AdamState for_params(const MlpParams& p, AdamConfig cfg);
};

/// One bias-corrected Adam descent step along `grad`.
void adam_step(MlpParams& p, const MlpParams& grad, AdamState& st);

/// target := tau * online + (1 - tau) * target
void soft_update(MlpParams& target, const MlpParams& online, double tau);

// Binary checkpoints; layout documented in docs/checkpoint_format.md.
void write_params(std::ostream& os, const MlpParams& p);
MlpParams read_params(std::istream& is);
void write_adam(std::ostream& os, const AdamState& st);
AdamState read_adam(std::istream& is);

}  // namespace drlte
