#include "deeptrade/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace deeptrade {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("mlp needs at least one weight layer");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("mlp layer widths must be positive");
}

void check_input(const Mlp& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_size())
    throw std::invalid_argument("input size " + std::to_string(x.size()) +
                                " does not match network input " +
                                std::to_string(net.input_size()));
}

std::vector<double> affine(const Matrix& w, const std::vector<double>& b,
                           const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(w.rows));
  for (int r = 0; r < w.rows; ++r) {
    double acc = b[static_cast<std::size_t>(r)];
    const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
    for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

}  // namespace

Mlp Mlp::make(std::vector<int> dims, OutputHead head, Rng& rng) {
  check_dims(dims);
  Mlp net;
  net.dims = std::move(dims);
  net.head = head;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const int fan_in = net.dims[l];
    const int fan_out = net.dims[l + 1];
    Matrix w(fan_out, fan_in);
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return net;
}

Mlp Mlp::zeros(std::vector<int> dims, OutputHead head) {
  check_dims(dims);
  Mlp net;
  net.dims = std::move(dims);
  net.head = head;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    net.weights.emplace_back(net.dims[l + 1], net.dims[l]);
    net.biases.emplace_back(static_cast<std::size_t>(net.dims[l + 1]), 0.0);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix& w : weights) n += w.data.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

void forward_trace_into(const Mlp& net, std::span<const double> x, ForwardTrace& trace) {
  check_input(net, x);
  const auto layers = static_cast<std::size_t>(net.num_layers());
  trace.inputs.resize(layers);
  trace.pre.resize(layers);

  trace.inputs[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = net.weights[l];
    const std::vector<double>& in = trace.inputs[l];
    std::vector<double>& z = trace.pre[l];
    z.resize(static_cast<std::size_t>(w.rows));
    for (int r = 0; r < w.rows; ++r) {
      double acc = net.biases[l][static_cast<std::size_t>(r)];
      const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) acc += row[c] * in[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = acc;
    }
    if (l + 1 < layers) {
      std::vector<double>& next_in = trace.inputs[l + 1];
      next_in.resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) next_in[i] = std::max(z[i], 0.0);
    }
  }

  if (net.head == OutputHead::softmax) {
    const std::vector<double>& z = trace.pre[layers - 1];
    const double m = *std::max_element(z.begin(), z.end());
    trace.output.resize(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      trace.output[i] = std::exp(z[i] - m);
      sum += trace.output[i];
    }
    for (double& v : trace.output) v /= sum;
  } else {
    trace.output = trace.pre[layers - 1];
  }
}

ForwardTrace forward_trace(const Mlp& net, std::span<const double> x) {
  ForwardTrace trace;
  forward_trace_into(net, x, trace);
  return trace;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
  check_input(net, x);
  std::vector<double> act(x.begin(), x.end());
  const int layers = net.num_layers();
  for (int l = 0; l < layers; ++l) {
    std::vector<double> z = affine(net.weights[static_cast<std::size_t>(l)],
                                   net.biases[static_cast<std::size_t>(l)], act);
    if (l + 1 < layers)
      for (double& v : z) v = std::max(v, 0.0);
    act = std::move(z);
  }
  return net.head == OutputHead::softmax ? softmax(act) : act;
}

GradientBundle GradientBundle::zeros_like(const Mlp& net) {
  GradientBundle g;
  for (const Matrix& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

void GradientBundle::accumulate(const GradientBundle& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].data.size(); ++i)
      weights[l].data[i] += other.weights[l].data[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void GradientBundle::scale(double s) {
  for (Matrix& w : weights)
    for (double& v : w.data) v *= s;
  for (auto& b : biases)
    for (double& v : b) v *= s;
}

void GradientBundle::set_zero() {
  for (Matrix& w : weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void backward_into(const Mlp& net, const ForwardTrace& trace,
                   std::span<const double> output_grad, BackwardScratch& scratch,
                   GradientBundle& grads) {
  if (static_cast<int>(output_grad.size()) != net.output_size())
    throw std::invalid_argument("output gradient size mismatch");

  grads.set_zero();
  const int layers = net.num_layers();

  // Gradient w.r.t. the last pre-activation.
  std::vector<double>& delta = scratch.delta;
  delta.assign(output_grad.begin(), output_grad.end());
  if (net.head == OutputHead::softmax) {
    const std::vector<double>& p = trace.output;
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += delta[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) delta[i] = p[i] * (delta[i] - dot);
  }

  for (int l = layers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    const Matrix& w = net.weights[lu];
    const std::vector<double>& in = trace.inputs[lu];
    for (int r = 0; r < w.rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      grads.biases[lu][static_cast<std::size_t>(r)] = d;
      double* grow = &grads.weights[lu].data[static_cast<std::size_t>(r) * w.cols];
      if (d == 0.0) continue;
      for (int c = 0; c < w.cols; ++c) grow[c] = d * in[static_cast<std::size_t>(c)];
    }
    if (l == 0) break;
    std::vector<double>& below = scratch.below;
    below.assign(static_cast<std::size_t>(w.cols), 0.0);
    for (int r = 0; r < w.rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      if (d == 0.0) continue;
      const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) below[static_cast<std::size_t>(c)] += d * row[c];
    }
    // ReLU gate of the layer below.
    const std::vector<double>& z = trace.pre[lu - 1];
    for (std::size_t i = 0; i < below.size(); ++i)
      if (z[i] <= 0.0) below[i] = 0.0;
    std::swap(scratch.delta, scratch.below);
  }
}

GradientBundle backward(const Mlp& net, const ForwardTrace& trace,
                        std::span<const double> output_grad) {
  GradientBundle grads = GradientBundle::zeros_like(net);
  BackwardScratch scratch;
  backward_into(net, trace, output_grad, scratch, grads);
  return grads;
}

double huber(double prediction, double target) {
  const double e = prediction - target;
  const double ae = std::abs(e);
  return ae <= 1.0 ? 0.5 * e * e : ae - 0.5;
}

double huber_derivative(double prediction, double target) {
  return std::clamp(prediction - target, -1.0, 1.0);
}

OptimizerState OptimizerState::sgd(double lr) {
  OptimizerState opt;
  opt.kind = Kind::sgd;
  opt.learning_rate = lr;
  return opt;
}

OptimizerState OptimizerState::adam(double lr, const Mlp& net) {
  OptimizerState opt;
  opt.kind = Kind::adam;
  opt.learning_rate = lr;
  opt.first_moment = GradientBundle::zeros_like(net);
  opt.second_moment = GradientBundle::zeros_like(net);
  return opt;
}

void apply_update(Mlp& net, const GradientBundle& grads, OptimizerState& opt) {
  const std::size_t layers = net.weights.size();
  if (opt.kind == OptimizerState::Kind::sgd) {
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t i = 0; i < net.weights[l].data.size(); ++i)
        net.weights[l].data[i] -= opt.learning_rate * grads.weights[l].data[i];
      for (std::size_t i = 0; i < net.biases[l].size(); ++i)
        net.biases[l][i] -= opt.learning_rate * grads.biases[l][i];
    }
    return;
  }

  ++opt.timestep;
  const double b1 = opt.beta1, b2 = opt.beta2;
  const double one_minus_b1 = 1.0 - b1, one_minus_b2 = 1.0 - b2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.timestep));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.timestep));
  const double step_over_c1 = opt.learning_rate / c1;
  const double inv_c2 = 1.0 / c2;
  const double eps = opt.epsilon;
  auto adam_span = [&](double* theta, const double* g, double* m, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + one_minus_b1 * g[i];
      v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
      theta[i] -= step_over_c1 * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  };
  for (std::size_t l = 0; l < layers; ++l) {
    adam_span(net.weights[l].data.data(), grads.weights[l].data.data(),
              opt.first_moment.weights[l].data.data(),
              opt.second_moment.weights[l].data.data(), net.weights[l].data.size());
    adam_span(net.biases[l].data(), grads.biases[l].data(), opt.first_moment.biases[l].data(),
              opt.second_moment.biases[l].data(), net.biases[l].size());
  }
}

double loss_value(const Mlp& net, std::span<const double> x, const LossSpec& loss) {
  const auto out = forward(net, x);
  if (const auto* h = std::get_if<HuberOnAction>(&loss))
    return huber(out[static_cast<std::size_t>(h->action)], h->target);
  const auto& r = std::get<ReinforceTerm>(loss);
  const double p = std::max(out[static_cast<std::size_t>(r.action)], kPolicyProbFloor);
  return -r.weight * std::log(p);
}

GradientBundle loss_gradient(const Mlp& net, std::span<const double> x, const LossSpec& loss) {
  const ForwardTrace trace = forward_trace(net, x);
  std::vector<double> up(static_cast<std::size_t>(net.output_size()), 0.0);
  if (const auto* h = std::get_if<HuberOnAction>(&loss)) {
    up[static_cast<std::size_t>(h->action)] =
        huber_derivative(trace.output[static_cast<std::size_t>(h->action)], h->target);
    return backward(net, trace, up);
  }
  const auto& r = std::get<ReinforceTerm>(loss);
  const double p = trace.output[static_cast<std::size_t>(r.action)];
  if (p < kPolicyProbFloor) return GradientBundle::zeros_like(net);  // floored, flat
  up[static_cast<std::size_t>(r.action)] = -r.weight / p;
  return backward(net, trace, up);
}

double grad_check(const Mlp& net, std::span<const double> x, const LossSpec& loss) {
  const GradientBundle analytic = loss_gradient(net, x, loss);
  Mlp probe = net;
  const double h = 1e-5;
  double worst = 0.0;

  auto check = [&](double& theta, double a) {
    const double saved = theta;
    theta = saved + h;
    const double up = loss_value(probe, x, loss);
    theta = saved - h;
    const double down = loss_value(probe, x, loss);
    theta = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, err);
  };

  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i)
      check(probe.weights[l].data[i], analytic.weights[l].data[i]);
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i)
      check(probe.biases[l][i], analytic.biases[l][i]);
  }
  return worst;
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << "mlp " << (net.head == OutputHead::softmax ? "softmax" : "identity");
  for (int d : net.dims) out << ' ' << d;
  out << '\n';
  char buf[64];
  auto emit = [&](const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    emit(net.weights[l].data);
    emit(net.biases[l]);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty checkpoint: " + path.string());
  std::istringstream header(line);
  std::string magic, head_name;
  header >> magic >> head_name;
  if (magic != "mlp" || (head_name != "softmax" && head_name != "identity"))
    throw std::runtime_error("bad checkpoint header: " + path.string());
  std::vector<int> dims;
  for (int d; header >> d;) dims.push_back(d);
  Mlp net = Mlp::zeros(dims, head_name == "softmax" ? OutputHead::softmax
                                                    : OutputHead::identity);
  auto read_line_into = [&](std::vector<double>& values, const char* what) {
    if (!std::getline(in, line))
      throw std::runtime_error(std::string("checkpoint truncated at ") + what);
    std::istringstream row(line);
    for (double& v : values)
      if (!(row >> v)) throw std::runtime_error(std::string("checkpoint short row for ") + what);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    read_line_into(net.weights[l].data, "weights");
    read_line_into(net.biases[l], "biases");
  }
  return net;
}

}  // namespace deeptrade
