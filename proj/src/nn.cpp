#include "antijam/nn.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "antijam/error.hpp"
#include "antijam/keyvalue.hpp"
#include "antijam/random.hpp"

namespace antijam::nn {

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::relu) z = z.cwiseMax(0.0);
}

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw std::invalid_argument(std::string(what) + " is not finite");
}

// Forward pass keeping every layer's post-activation output; acts[0] is the input.
std::vector<Eigen::MatrixXd> forward_cached(const Mlp& net, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.layers().size() + 1);
  acts.push_back(inputs);
  for (const auto& layer : net.layers()) {
    Eigen::MatrixXd z = layer.weights * acts.back();
    z.colwise() += layer.biases;
    apply_activation(z, layer.activation);
    acts.push_back(std::move(z));
  }
  return acts;
}

void require_input(const Mlp& net, std::size_t actual) {
  if (net.layers().empty()) throw std::logic_error("network has no layers");
  if (actual != net.input_dim()) {
    throw std::invalid_argument("input dimension mismatch: expected " +
                                std::to_string(net.input_dim()) + ", got " + std::to_string(actual));
  }
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

bool DenseLayer::operator==(const DenseLayer& other) const {
  return activation == other.activation && weights.rows() == other.weights.rows() &&
         weights.cols() == other.weights.cols() && biases.size() == other.biases.size() &&
         weights == other.weights && biases == other.biases;
}

Mlp::Mlp(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("an MLP needs at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw std::invalid_argument("layer dims must be positive");
    DenseLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims[i + 1]),
                                          static_cast<Eigen::Index>(dims[i]));
    layer.biases = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[i + 1]));
    layer.activation = i + 2 == dims.size() ? Activation::identity : Activation::relu;
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("an MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].biases.size() != layers_[i].weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": bias length differs from output dim");
    }
    if (i > 0 && layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": input dim does not chain");
    }
  }
}

Mlp Mlp::q_network(std::size_t channels, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> dims{channels};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(channels);
  return Mlp(dims);
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> d;
  if (layers_.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers_) d.push_back(l.out_dim());
  return d;
}

bool Mlp::same_architecture(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim() || a.activation != b.activation) {
      return false;
    }
  }
  return true;
}

GradientSet GradientSet::zeros_like(const Mlp& net) {
  GradientSet g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.biases.size())});
  }
  return g;
}

GradientSet GradientSet::scaled(double factor) const {
  GradientSet g = *this;
  for (auto& l : g.layers) {
    l.weights *= factor;
    l.biases *= factor;
  }
  return g;
}

double GradientSet::norm() const {
  double sq = 0.0;
  for (const auto& l : layers) sq += l.weights.squaredNorm() + l.biases.squaredNorm();
  return std::sqrt(sq);
}

bool GradientSet::all_zero() const {
  for (const auto& l : layers) {
    if (!l.weights.isZero(0.0) || !l.biases.isZero(0.0)) return false;
  }
  return true;
}

Eigen::VectorXd forward(const Mlp& net, std::span<const double> input) {
  require_input(net, input.size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (const auto& layer : net.layers()) {
    Eigen::VectorXd z = layer.weights * x + layer.biases;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
  require_input(net, static_cast<std::size_t>(inputs.rows()));
  Eigen::MatrixXd x = inputs;
  for (const auto& layer : net.layers()) {
    Eigen::MatrixXd z = layer.weights * x;
    z.colwise() += layer.biases;
    apply_activation(z, layer.activation);
    x = std::move(z);
  }
  return x;
}

Backprop backward(const Mlp& net, std::span<const double> input, std::size_t action, double target) {
  require_input(net, input.size());
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  const std::size_t a[1] = {action};
  const double y[1] = {target};
  return backward_batch(net, x, a, y);
}

Backprop backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                        std::span<const std::size_t> actions, std::span<const double> targets) {
  require_input(net, static_cast<std::size_t>(inputs.rows()));
  const auto batch = inputs.cols();
  if (batch == 0) throw std::invalid_argument("empty batch");
  if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != actions.size()) {
    throw std::invalid_argument("batch size mismatch between inputs, actions and targets");
  }
  for (std::size_t b = 0; b < actions.size(); ++b) {
    if (actions[b] >= net.output_dim()) {
      throw std::out_of_range("action " + std::to_string(actions[b]) + " outside [0, " +
                              std::to_string(net.output_dim()) + ")");
    }
    check_finite(targets[b], "target");
  }

  const auto acts = forward_cached(net, inputs);
  const Eigen::MatrixXd& q = acts.back();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  // dLoss/dOutput: only the selected action's output carries error.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(b)]);
    const double err = q(a, b) - targets[static_cast<std::size_t>(b)];
    loss += err * err;
    delta(a, b) = 2.0 * err * inv_batch;
  }

  Backprop out;
  out.loss = loss * inv_batch;
  out.grads.layers.resize(net.layers().size());
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const auto& layer = net.layers()[li];
    if (layer.activation == Activation::relu) {
      delta = delta.cwiseProduct((acts[li + 1].array() > 0.0).cast<double>().matrix());
    }
    out.grads.layers[li].weights = delta * acts[li].transpose();
    out.grads.layers[li].biases = delta.rowwise().sum();
    if (li > 0) delta = layer.weights.transpose() * delta;
  }
  return out;
}

void sgd_step(Mlp& net, const GradientSet& grads, double learning_rate) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be a finite non-negative number");
  }
  if (grads.layers.size() != net.layers().size()) throw std::invalid_argument("gradient layer count mismatch");
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    const auto& g = grads.layers[i];
    const auto& l = net.layers()[i];
    if (g.weights.rows() != l.weights.rows() || g.weights.cols() != l.weights.cols() ||
        g.biases.size() != l.biases.size()) {
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    auto& l = net.layers()[i];
    l.weights -= learning_rate * grads.layers[i].weights;
    l.biases -= learning_rate * grads.layers[i].biases;
  }
}

void copy_parameters(const Mlp& src, Mlp& dst) {
  if (!src.same_architecture(dst)) throw std::invalid_argument("architecture mismatch in copy_parameters");
  for (std::size_t i = 0; i < src.layers().size(); ++i) {
    dst.layers()[i].weights = src.layers()[i].weights;
    dst.layers()[i].biases = src.layers()[i].biases;
  }
}

void init_parameters(Mlp& net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : net.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
    // Row-major fill so the draw order matches the serialized order.
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        l.weights(r, c) = (2.0 * uniform_unit(rng) - 1.0) * bound;
      }
    }
    l.biases.setZero();
  }
}

void write_mlp(std::ostream& out, const Mlp& net) {
  out << "mlp " << net.layers().size() << '\n';
  for (const auto& l : net.layers()) {
    out << "dense " << l.in_dim() << ' ' << l.out_dim() << ' ' << to_string(l.activation) << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(l.weights(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) {
      if (r > 0) out << ' ';
      out << format_double(l.biases(r));
    }
    out << '\n';
  }
}

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::size_t offset) : in_(in), line_(offset) {}

  std::string next(const char* expecting) {
    std::string s;
    if (!std::getline(in_, s)) throw ParseError(line_ + 1, std::string("unexpected end of data, expected ") + expecting);
    ++line_;
    return s;
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, std::size_t line) {
  std::vector<double> values;
  values.reserve(expected);
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    double v = 0.0;
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{} || !std::isfinite(v)) throw ParseError(line, "malformed number");
    values.push_back(v);
    p = res.ptr;
    if (p < end && *p != ' ') throw ParseError(line, "malformed number");
  }
  if (values.size() != expected) {
    throw ParseError(line, "expected " + std::to_string(expected) + " values, got " + std::to_string(values.size()));
  }
  return values;
}

}  // namespace

Mlp read_mlp(std::istream& in, std::size_t line_offset) {
  LineReader reader(in, line_offset);
  std::istringstream header(reader.next("mlp header"));
  std::string tag;
  std::size_t count = 0;
  if (!(header >> tag >> count) || tag != "mlp" || count == 0) {
    throw ParseError(reader.line(), "expected 'mlp <layer count>'");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream dense(reader.next("dense header"));
    std::size_t in_dim = 0, out_dim = 0;
    std::string act;
    if (!(dense >> tag >> in_dim >> out_dim >> act) || tag != "dense" || in_dim == 0 || out_dim == 0) {
      throw ParseError(reader.line(), "expected 'dense <in> <out> <activation>'");
    }
    DenseLayer layer;
    try {
      layer.activation = activation_from_string(act);
    } catch (const std::invalid_argument& e) {
      throw ParseError(reader.line(), e.what());
    }
    layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
    for (std::size_t r = 0; r < out_dim; ++r) {
      const std::string row = reader.next("weight row");
      const auto values = parse_numbers(row, in_dim, reader.line());
      for (std::size_t c = 0; c < in_dim; ++c) {
        layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[c];
      }
    }
    const std::string bias_line = reader.next("bias row");
    const auto biases = parse_numbers(bias_line, out_dim, reader.line());
    layer.biases = Eigen::Map<const Eigen::VectorXd>(biases.data(), static_cast<Eigen::Index>(out_dim));
    layers.push_back(std::move(layer));
  }
  try {
    return Mlp(std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw ParseError(reader.line(), e.what());
  }
}

}  // namespace antijam::nn
