#pragma once

#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "deeptrade/random.hpp"

namespace deeptrade {

/// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class OutputHead { identity, softmax };

/// Fully connected perceptron with ReLU hidden activations. The usual shape
/// is input -> hidden1 -> hidden2 -> output, but any chain of at least one
/// weight layer is accepted.
struct Mlp {
  std::vector<int> dims;
  OutputHead head = OutputHead::identity;
  std::vector<Matrix> weights;              // weights[l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;  // biases[l]: dims[l+1]

  /// He-style uniform init, weight ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
  /// biases zero. Draws come from `rng` in a fixed order.
  static Mlp make(std::vector<int> dims, OutputHead head, Rng& rng);

  /// All parameters zero; handy for constructing exact fixtures.
  static Mlp zeros(std::vector<int> dims, OutputHead head);

  int input_size() const { return dims.front(); }
  int output_size() const { return dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
};

/// Activations recorded during a forward pass; needed for backward().
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;  // inputs[l]: activation fed to layer l
  std::vector<std::vector<double>> pre;     // pre[l]: W x + b of layer l
  std::vector<double> output;               // post-head output
};

std::vector<double> forward(const Mlp& net, std::span<const double> x);
ForwardTrace forward_trace(const Mlp& net, std::span<const double> x);

/// Numerically stable softmax (max-subtracted). Strictly positive, sums to 1.
std::vector<double> softmax(std::span<const double> logits);

/// Gradients shaped exactly like the network's parameters.
struct GradientBundle {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static GradientBundle zeros_like(const Mlp& net);
  void accumulate(const GradientBundle& other);
  void scale(double s);
  void set_zero();
};

/// Reverse-mode gradients of a scalar loss with respect to every parameter.
/// `output_grad` is dLoss/d(head output); the softmax Jacobian is applied
/// internally for softmax heads.
GradientBundle backward(const Mlp& net, const ForwardTrace& trace,
                        std::span<const double> output_grad);

// Allocation-free variants for training loops. Buffers grow on first use and
// are reused afterwards; shapes must stay fixed between calls.
void forward_trace_into(const Mlp& net, std::span<const double> x, ForwardTrace& trace);

struct BackwardScratch {
  std::vector<double> delta;
  std::vector<double> below;
};

/// Overwrites `grads` with the gradients backward() would return.
void backward_into(const Mlp& net, const ForwardTrace& trace,
                   std::span<const double> output_grad, BackwardScratch& scratch,
                   GradientBundle& grads);

/// Huber loss with delta = 1: 0.5 e^2 for |e| <= 1, |e| - 0.5 beyond.
double huber(double prediction, double target);
/// d huber / d prediction = clamp(prediction - target, -1, 1).
double huber_derivative(double prediction, double target);

struct OptimizerState {
  enum class Kind { sgd, adam };

  Kind kind = Kind::sgd;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long timestep = 0;
  GradientBundle first_moment;   // adam only
  GradientBundle second_moment;  // adam only

  static OptimizerState sgd(double lr);
  static OptimizerState adam(double lr, const Mlp& net);
};

/// SGD: theta -= lr * g. Adam: bias-corrected moment update, timestep++.
void apply_update(Mlp& net, const GradientBundle& grads, OptimizerState& opt);

// Loss specifications understood by loss_value/loss_gradient/grad_check.

/// Huber(prediction = output[action], target) on an identity head.
struct HuberOnAction {
  int action = 0;
  double target = 0.0;
};

/// -weight * ln(max(pi[action], 1e-12)) on a softmax head; one step-t term
/// of the policy-gradient objective with weight = G_t (scaled by 1/T upstream).
struct ReinforceTerm {
  int action = 0;
  double weight = 1.0;
};

using LossSpec = std::variant<HuberOnAction, ReinforceTerm>;

double loss_value(const Mlp& net, std::span<const double> x, const LossSpec& loss);
GradientBundle loss_gradient(const Mlp& net, std::span<const double> x, const LossSpec& loss);

/// Max over parameters of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
/// against central finite differences of loss_value (step 1e-5).
double grad_check(const Mlp& net, std::span<const double> x, const LossSpec& loss);

/// Self-describing text checkpoint: one header line (head kind + layer dims),
/// then one line per parameter tensor, row-major, 17 significant digits.
void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

/// Probability floor used when taking logarithms of policy outputs.
inline constexpr double kPolicyProbFloor = 1e-12;

}  // namespace deeptrade
