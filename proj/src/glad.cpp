#include "uglad/glad.hpp"

#include <cmath>
#include <string>

#include "uglad/errors.hpp"
#include "uglad/linalg.hpp"
#include "uglad/random.hpp"

namespace uglad {

namespace {

double sigmoid(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

void check_square_input(const Matrix& s, const char* what) {
  if (!s.is_square() || s.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": covariance must be square");
  }
}

}  // namespace

Mlp Mlp::zeros(std::span<const std::size_t> widths) {
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.inputs = widths[l];
    layer.outputs = widths[l + 1];
    layer.weights.assign(layer.inputs * layer.outputs, 0.0);
    layer.bias.assign(layer.outputs, 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> w;
  if (layers.empty()) return w;
  w.push_back(layers.front().inputs);
  for (const auto& l : layers) w.push_back(l.outputs);
  return w;
}

double mlp_forward(const Mlp& net, std::span<const double> input) {
  if (input.size() != net.input_width()) {
    throw Error(ErrorCode::ShapeMismatch, "mlp_forward: expected input width " +
                                              std::to_string(net.input_width()) + ", got " +
                                              std::to_string(input.size()));
  }
  std::vector<double> h(input.begin(), input.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    const bool last = l + 1 == net.layers.size();
    std::vector<double> next(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double a = layer.bias[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) a += layer.weights[o * layer.inputs + i] * h[i];
      next[o] = last ? sigmoid(a) : std::tanh(a);
    }
    h = std::move(next);
  }
  return h.at(0);
}

GladParams GladParams::zeros() {
  GladParams p;
  p.rho = Mlp::zeros(kRhoWidths);
  p.lambda = Mlp::zeros(kLambdaWidths);
  p.theta_offset = kDefaultThetaOffset;
  return p;
}

GladParams GladParams::initialize(std::uint64_t seed) {
  GladParams p = zeros();
  Rng rng(derive_seed(seed, Stream::Parameters));
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (Mlp* net : {&p.rho, &p.lambda})
    for (auto& layer : net->layers)
      for (double& w : layer.weights) w = u(rng);
  return p;
}

std::size_t GladParams::size() const {
  return rho.parameter_count() + lambda.parameter_count() + 1;
}

std::vector<double> GladParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const Mlp* net : {&rho, &lambda})
    for (const auto& layer : net->layers) {
      flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
      flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
  flat.push_back(theta_offset);
  return flat;
}

void GladParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) {
    throw Error(ErrorCode::ShapeMismatch, "GladParams::assign: expected " +
                                              std::to_string(size()) + " values, got " +
                                              std::to_string(flat.size()));
  }
  std::size_t k = 0;
  for (Mlp* net : {&rho, &lambda})
    for (auto& layer : net->layers) {
      for (double& w : layer.weights) w = flat[k++];
      for (double& b : layer.bias) b = flat[k++];
    }
  theta_offset = flat[k];
}

double soft_threshold(double x, double tau) {
  const double mag = std::abs(x) - tau;
  if (!(mag > 0.0)) return 0.0;
  return x > 0.0 ? mag : -mag;
}

// --- recorded network --------------------------------------------------------

GladNetwork::GladNetwork(ad::Tape& tape, const GladParams& params) : tape_(&tape) {
  auto bind = [&](const Mlp& net, std::vector<LayerVars>& out) {
    for (const auto& layer : net.layers) {
      LayerVars lv;
      lv.weights.resize(layer.outputs);
      for (std::size_t o = 0; o < layer.outputs; ++o)
        for (std::size_t i = 0; i < layer.inputs; ++i) {
          lv.weights[o].push_back(tape.variable(layer.weights[o * layer.inputs + i]));
          leaves_.push_back(lv.weights[o].back());
        }
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        lv.bias.push_back(tape.variable(layer.bias[o]));
        leaves_.push_back(lv.bias.back());
      }
      out.push_back(std::move(lv));
    }
  };
  // Leaves are created layer by layer as weights then biases, matching flatten().
  bind(params.rho, rho_);
  bind(params.lambda, lambda_);
  leaves_.push_back(tape.variable(params.theta_offset));
}

ad::Var GladNetwork::run(const std::vector<LayerVars>& layers, std::vector<ad::Var> features) const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerVars& layer = layers[l];
    if (layer.weights.front().size() != features.size()) {
      throw Error(ErrorCode::ShapeMismatch, "network input width mismatch");
    }
    const bool last = l + 1 == layers.size();
    std::vector<ad::Var> next;
    next.reserve(layer.bias.size());
    for (std::size_t o = 0; o < layer.bias.size(); ++o) {
      ad::Var pre = ad::affine(layer.weights[o], features, layer.bias[o]);
      next.push_back(last ? ad::sigmoid(pre) : ad::tanh(pre));
    }
    features = std::move(next);
  }
  return features.front();
}

ad::Var GladNetwork::rho(ad::Var theta, ad::Var s, ad::Var z) const {
  return run(rho_, {theta, s, z});
}

ad::Var GladNetwork::lambda(ad::Var gap, ad::Var lambda_prev) const {
  return run(lambda_, {gap, lambda_prev});
}

std::vector<double> GladNetwork::gradient() const {
  std::vector<double> g;
  g.reserve(leaves_.size());
  for (const ad::Var& v : leaves_) g.push_back(tape_->grad(v)[0]);
  return g;
}

ad::Var record_sqrt_spd(ad::Var a) {
  ad::Tape& tape = a.tape();
  const Matrix& av = a.value();
  check_square_input(av, "record_sqrt_spd");
  const std::size_t n = av.rows();
  const double scale = frobenius_norm(av);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::NotPositiveDefinite, "record_sqrt_spd: zero or non-finite input");
  }
  // The scale is treated as a constant: at convergence the root does not
  // depend on it.
  const ad::Var scaled = ad::scale(1.0 / scale, a);
  const Matrix& scaled_value = scaled.value();
  const double scaled_norm = frobenius_norm(scaled_value);
  const ad::Var three_halves = tape.constant(Matrix::identity(n) * 1.5);

  ad::Var y = scaled;
  ad::Var z;
  bool passed = false;
  bool converged = false;
  for (int it = 0; it < kNewtonSchulzMaxIter; ++it) {
    const ad::Var zy = it == 0 ? y : ad::matmul(z, y);
    const ad::Var t = ad::add(three_halves, ad::scale(-0.5, zy));
    y = ad::matmul(y, t);
    z = it == 0 ? t : ad::matmul(t, z);
    if (passed) {
      converged = true;
      break;
    }
    const Matrix& yv = y.value();
    const double resid = frobenius_norm(uglad::matmul(yv, yv) - scaled_value) / scaled_norm;
    if (!std::isfinite(resid)) break;
    passed = resid < kNewtonSchulzTol;
  }
  if (converged || passed) return ad::symmetrize(ad::scale(std::sqrt(scale), y));
  return ad::sqrt_spd_eig(a);
}

RecordedState record_theta_init(const GladNetwork& net, ad::Var s, double lambda_init) {
  ad::Tape& tape = net.tape();
  const std::size_t d = s.value().rows();
  const ad::Var eye = tape.constant(Matrix::identity(d));
  const ad::Var shifted = ad::add(s, ad::scalar_multiply(net.theta_offset(), eye));
  const ad::Var theta = ad::inverse_spd(shifted);
  return RecordedState{theta, theta, tape.constant(lambda_init)};
}

RecordedState record_glad_cell(const GladNetwork& net, ad::Var s, const RecordedState& state,
                               const UnrollConfig& cfg) {
  ad::Tape& tape = net.tape();
  const std::size_t d = s.value().rows();
  const ad::Var eye = tape.constant(Matrix::identity(d));

  ad::Var lam = state.lambda;
  if (cfg.pinned_lambda) lam = tape.constant(*cfg.pinned_lambda);
  if (!(lam.value()[0] >= kLambdaFloor)) lam = tape.constant(kLambdaFloor);

  // Theta step: stationarity of -log det + tr(S Theta) + lam/2 ||Z - Theta||^2.
  const ad::Var y = ad::subtract(s, ad::scalar_multiply(lam, state.z));
  const ad::Var disc = ad::add(ad::matmul(y, y), ad::scalar_multiply(ad::scale(4.0, lam), eye));
  const ad::Var root = record_sqrt_spd(disc);
  const ad::Var half_inv_lam = ad::scale(0.5, ad::reciprocal(lam));
  const ad::Var theta = ad::symmetrize(ad::scalar_multiply(half_inv_lam, ad::subtract(root, y)));

  // Z step: entrywise soft threshold at rho_nn / lambda.
  ad::Var rho = cfg.pinned_rho ? tape.constant(Matrix(d, d, *cfg.pinned_rho))
                               : net.rho(theta, s, state.z);
  if (cfg.rho_shift != 0.0) rho = ad::add(rho, tape.constant(Matrix(d, d, cfg.rho_shift)));
  const ad::Var tau = ad::scalar_multiply(ad::reciprocal(lam), rho);
  const ad::Var z = ad::soft_threshold(theta, tau);

  // Penalty step.
  ad::Var next_lambda;
  if (cfg.pinned_lambda) {
    next_lambda = tape.constant(*cfg.pinned_lambda);
  } else {
    const double inv_d2 = 1.0 / static_cast<double>(d * d);
    const ad::Var gap = ad::scale(inv_d2, ad::frobenius_sq(ad::subtract(z, theta)));
    next_lambda = net.lambda(gap, state.lambda);
  }
  return RecordedState{theta, z, next_lambda};
}

RecordedState record_glad_forward(const GladNetwork& net, ad::Var s, const UnrollConfig& cfg,
                                  std::vector<GladState>* trajectory) {
  if (cfg.depth < 1) throw Error(ErrorCode::InvalidArgument, "unroll depth must be >= 1");
  check_square_input(s.value(), "glad_forward");
  RecordedState state = record_theta_init(net, s, cfg.lambda_init);
  for (int k = 1; k <= cfg.depth; ++k) {
    state = record_glad_cell(net, s, state, cfg);
    if (trajectory) {
      trajectory->push_back(
          GladState{state.theta.value(), state.z.value(), state.lambda.value()[0], k});
    }
  }
  return state;
}

ad::Var record_uglad_loss(ad::Var s_eval, ad::Var theta) {
  return ad::subtract(ad::trace_product(s_eval, theta), ad::log_det_spd(theta));
}

ad::Var record_mean(std::span<const ad::Var> terms) {
  if (terms.empty()) throw Error(ErrorCode::LengthMismatch, "mean of zero terms");
  ad::Var total = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) total = ad::add(total, terms[k]);
  return ad::scale(1.0 / static_cast<double>(terms.size()), total);
}

// --- plain API ---------------------------------------------------------------

GladState theta_init(const Matrix& s, double t, double lambda_init) {
  check_square_input(s, "theta_init");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta_init: offset must be > 0");
  Matrix shifted = s;
  for (std::size_t i = 0; i < s.rows(); ++i) shifted(i, i) += t;
  Matrix theta = spd_inverse(shifted);
  return GladState{theta, theta, lambda_init, 0};
}

GladState glad_cell(const Matrix& s, const GladState& state, const GladParams& params,
                    const UnrollConfig& cfg) {
  check_square_input(s, "glad_cell");
  if (!(state.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "glad_cell: lambda must be > 0");
  ad::Tape tape;
  const GladNetwork net(tape, params);
  const RecordedState in{tape.constant(state.theta), tape.constant(state.z),
                         tape.constant(state.lambda)};
  const RecordedState out = record_glad_cell(net, tape.constant(s), in, cfg);
  return GladState{out.theta.value(), out.z.value(), out.lambda.value()[0], state.iteration + 1};
}

GladTrace glad_forward(const Matrix& s, const GladParams& params, const UnrollConfig& cfg,
                       bool keep_trajectory) {
  ad::Tape tape;
  const GladNetwork net(tape, params);
  GladTrace trace;
  const RecordedState out = record_glad_forward(net, tape.constant(s), cfg,
                                                keep_trajectory ? &trace.trajectory : nullptr);
  trace.final_state = GladState{out.theta.value(), out.z.value(), out.lambda.value()[0], cfg.depth};
  return trace;
}

double uglad_loss(const Matrix& s_eval, const Matrix& theta) {
  if (!s_eval.same_shape(theta)) throw Error(ErrorCode::ShapeMismatch, "uglad_loss: shapes differ");
  double tr = 0.0;
  for (std::size_t i = 0; i < s_eval.rows(); ++i)
    for (std::size_t j = 0; j < s_eval.cols(); ++j) tr += s_eval(i, j) * theta(j, i);
  return tr - log_det_spd(theta);
}

double multitask_loss(std::span<const Matrix> covariances, std::span<const Matrix> thetas) {
  if (covariances.size() != thetas.size() || thetas.empty()) {
    throw Error(ErrorCode::LengthMismatch, "multitask_loss: need equal, non-empty lists");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < thetas.size(); ++k) total += uglad_loss(covariances[k], thetas[k]);
  return total / static_cast<double>(thetas.size());
}

double meta_loss(const Matrix& s_full, std::span<const Matrix> thetas) {
  if (thetas.empty()) throw Error(ErrorCode::LengthMismatch, "meta_loss: no precision matrices");
  double total = 0.0;
  for (const Matrix& theta : thetas) total += uglad_loss(s_full, theta);
  return total / static_cast<double>(thetas.size());
}

}  // namespace uglad
