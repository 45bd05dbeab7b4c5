#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace antijam::nn {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // [out x in]
  Eigen::VectorXd biases;   // [out]
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }

  bool operator==(const DenseLayer& other) const;
};

/// Fully connected feed-forward network, parameters theta_Q.
class Mlp {
 public:
  Mlp() = default;
  /// dims = {in, hidden..., out}; hidden layers use ReLU, the output layer is linear.
  /// Parameters start at zero.
  explicit Mlp(const std::vector<std::size_t>& dims);
  explicit Mlp(std::vector<DenseLayer> layers);

  /// The Q-network shape: channels -> 256 relu -> 256 relu -> channels.
  static Mlp q_network(std::size_t channels, const std::vector<std::size_t>& hidden = {256, 256});

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> dims() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  bool same_architecture(const Mlp& other) const;
  bool operator==(const Mlp& other) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};

struct GradientSet {
  std::vector<LayerGradient> layers;

  static GradientSet zeros_like(const Mlp& net);
  GradientSet scaled(double factor) const;
  double norm() const;
  bool all_zero() const;
};

struct Backprop {
  double loss = 0.0;
  GradientSet grads;
};

Eigen::VectorXd forward(const Mlp& net, std::span<const double> input);
/// Column-per-sample forward pass: inputs [in x batch] -> [out x batch].
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Squared error (Q(input)[action] - target)^2 and its gradient w.r.t. every parameter.
Backprop backward(const Mlp& net, std::span<const double> input, std::size_t action, double target);

/// Mean loss and mean gradient over the columns of `inputs`; equal (up to round-off)
/// to averaging `backward` over the samples one at a time.
Backprop backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                        std::span<const std::size_t> actions, std::span<const double> targets);

/// theta <- theta - learning_rate * grads.
void sgd_step(Mlp& net, const GradientSet& grads, double learning_rate);

void copy_parameters(const Mlp& src, Mlp& dst);

/// Glorot-uniform weights in [-b, b], b = sqrt(6 / (fan_in + fan_out)); zero biases.
void init_parameters(Mlp& net, std::uint64_t seed);

/// Text format: "mlp <layers>", then per layer "dense <in> <out> <activation>",
/// <out> lines of row-major weights and one line of biases.
void write_mlp(std::ostream& out, const Mlp& net);
/// `line_offset` is added to reported line numbers when the block is embedded in a larger file.
Mlp read_mlp(std::istream& in, std::size_t line_offset = 0);

}  // namespace antijam::nn
