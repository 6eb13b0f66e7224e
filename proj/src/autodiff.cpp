#include "uglad/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uglad/errors.hpp"
#include "uglad/linalg.hpp"

namespace uglad::ad {

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw Error(ErrorCode::InvalidArgument, "operands live on different tapes");
  }
  return a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

void require_scalar(const Matrix& m, const char* what) {
  if (m.rows() != 1 || m.cols() != 1) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected a 1x1 operand");
  }
}

template <class F>
Matrix map(const Matrix& x, F f) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f(x[k]);
  return y;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* to_string(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Subtract: return "subtract";
    case Op::Scale: return "scale";
    case Op::ScalarMultiply: return "scalar-multiply";
    case Op::Hadamard: return "elementwise-multiply";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Abs: return "abs";
    case Op::TraceProduct: return "trace-product";
    case Op::LogDetSpd: return "log-det-spd";
    case Op::SoftThreshold: return "soft-threshold";
    case Op::Sum: return "sum";
    case Op::FrobeniusSq: return "frobenius-norm-squared";
    case Op::Reciprocal: return "reciprocal";
    case Op::Affine: return "affine-map";
    case Op::InverseSpd: return "inverse-spd";
    case Op::SqrtSpdEig: return "sqrt-spd-eig";
    case Op::Symmetrize: return "symmetrize";
  }
  return "unknown";
}

const Matrix& Var::value() const { return tape_->value(*this); }

Var Tape::variable(Matrix value) {
  return push(Node{Op::Leaf, true, {}, std::move(value), {}, 0.0, {}, {}});
}

Var Tape::constant(Matrix value) {
  return push(Node{Op::Constant, false, {}, std::move(value), {}, 0.0, {}, {}});
}

const Matrix& Tape::value(Var v) const { return nodes_.at(v.index()).value; }

Op Tape::op(Var v) const { return nodes_.at(v.index()).op; }

Var Tape::record(Op op, std::vector<std::uint32_t> parents, Matrix value, double coefficient,
                 Matrix aux, Matrix aux2) {
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_[p].needs_grad;
  return push(Node{op, needs, std::move(parents), std::move(value), {}, coefficient,
                   std::move(aux), std::move(aux2)});
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Matrix& Tape::grad_slot(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.index());
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error(ErrorCode::InvalidArgument, "loss from another tape");
  require_scalar(value(loss), "backward");
  for (Node& n : nodes_) n.grad = Matrix();
  grad_slot(loss.index())[0] = 1.0;
  for (std::int64_t i = loss.index(); i >= 0; --i) {
    const auto idx = static_cast<std::uint32_t>(i);
    if (nodes_[idx].needs_grad && !nodes_[idx].grad.empty()) propagate(idx);
  }
}

void Tape::propagate(std::uint32_t index) {
  // Copy what we need: grad_slot() may reallocate nothing, but parents' slots
  // are distinct from this node's.
  const Node& n = nodes_[index];
  const Matrix& g = n.grad;
  const auto& ps = n.parents;
  auto wants = [&](std::size_t k) { return nodes_[ps[k]].needs_grad; };
  auto val = [&](std::size_t k) -> const Matrix& { return nodes_[ps[k]].value; };

  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      break;
    case Op::MatMul:
      if (wants(0)) grad_slot(ps[0]) += matmul_nt(g, val(1));
      if (wants(1)) grad_slot(ps[1]) += matmul_tn(val(0), g);
      break;
    case Op::Add:
      if (wants(0)) grad_slot(ps[0]) += g;
      if (wants(1)) grad_slot(ps[1]) += g;
      break;
    case Op::Subtract:
      if (wants(0)) grad_slot(ps[0]) += g;
      if (wants(1)) grad_slot(ps[1]) -= g;
      break;
    case Op::Scale:
      if (wants(0)) grad_slot(ps[0]) += g * n.coefficient;
      break;
    case Op::ScalarMultiply:
      if (wants(0)) grad_slot(ps[0])[0] += inner(g, val(1));
      if (wants(1)) grad_slot(ps[1]) += g * val(0)[0];
      break;
    case Op::Hadamard:
      if (wants(0)) grad_slot(ps[0]) += hadamard(g, val(1));
      if (wants(1)) grad_slot(ps[1]) += hadamard(g, val(0));
      break;
    case Op::Tanh: {
      Matrix& dst = grad_slot(ps[0]);
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k] * (1.0 - n.value[k] * n.value[k]);
      break;
    }
    case Op::Sigmoid: {
      Matrix& dst = grad_slot(ps[0]);
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k] * n.value[k] * (1.0 - n.value[k]);
      break;
    }
    case Op::Abs: {
      Matrix& dst = grad_slot(ps[0]);
      const Matrix& x = val(0);
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k] * sign(x[k]);
      break;
    }
    case Op::TraceProduct: {
      const double s = g[0];
      if (wants(0)) grad_slot(ps[0]) += transpose(val(1)) * s;
      if (wants(1)) grad_slot(ps[1]) += transpose(val(0)) * s;
      break;
    }
    case Op::LogDetSpd:
      grad_slot(ps[0]) += spd_inverse(val(0)) * g[0];
      break;
    case Op::SoftThreshold: {
      const Matrix& x = val(0);
      const Matrix& tau = val(1);
      const bool broadcast = tau.size() == 1;
      const bool want_x = wants(0);
      const bool want_tau = wants(1);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = broadcast ? tau[0] : tau[k];
        if (!(std::abs(x[k]) > t)) continue;
        if (want_x) grad_slot(ps[0])[k] += g[k];
        if (want_tau) grad_slot(ps[1])[broadcast ? 0 : k] -= g[k] * sign(x[k]);
      }
      break;
    }
    case Op::Sum: {
      Matrix& dst = grad_slot(ps[0]);
      for (double& v : dst.values()) v += g[0];
      break;
    }
    case Op::FrobeniusSq:
      grad_slot(ps[0]) += val(0) * (2.0 * g[0]);
      break;
    case Op::Reciprocal: {
      Matrix& dst = grad_slot(ps[0]);
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] -= g[k] * n.value[k] * n.value[k];
      break;
    }
    case Op::Affine: {
      const auto count = static_cast<std::size_t>(n.coefficient);
      for (std::size_t i = 0; i < count; ++i) {
        if (wants(i)) grad_slot(ps[i])[0] += inner(g, val(count + i));
        if (wants(count + i)) grad_slot(ps[count + i]) += g * val(i)[0];
      }
      if (wants(2 * count)) grad_slot(ps[2 * count])[0] += uglad::sum(g);
      break;
    }
    case Op::InverseSpd: {
      // d(A^-1) = -A^-1 dA A^-1, so dA = -Y^T G Y^T with Y symmetric.
      const Matrix& y = n.value;
      grad_slot(ps[0]) -= matmul(matmul(y, g), y);
      break;
    }
    case Op::SqrtSpdEig: {
      // aux: eigenvectors V, aux2: diagonal of sqrt eigenvalues (1 x n).
      const Matrix& v = n.aux;
      const Matrix& root = n.aux2;
      Matrix m = matmul(matmul_tn(v, g), v);
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) /= root[i] + root[j];
      grad_slot(ps[0]) += matmul_nt(matmul(v, m), v);
      break;
    }
    case Op::Symmetrize: {
      Matrix& dst = grad_slot(ps[0]);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) dst(i, j) += 0.5 * (g(i, j) + g(j, i));
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(Op::MatMul, {a.index(), b.index()}, uglad::matmul(a.value(), b.value()));
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record(Op::Add, {a.index(), b.index()}, a.value() + b.value());
}

Var subtract(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "subtract");
  return t.record(Op::Subtract, {a.index(), b.index()}, a.value() - b.value());
}

Var scale(double factor, Var x) {
  return x.tape().record(Op::Scale, {x.index()}, x.value() * factor, factor);
}

Var scalar_multiply(Var s, Var x) {
  Tape& t = same_tape(s, x);
  require_scalar(s.value(), "scalar_multiply");
  return t.record(Op::ScalarMultiply, {s.index(), x.index()}, x.value() * s.value()[0]);
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(Op::Hadamard, {a.index(), b.index()}, uglad::hadamard(a.value(), b.value()));
}

Var tanh(Var x) {
  return x.tape().record(Op::Tanh, {x.index()}, map(x.value(), [](double v) { return std::tanh(v); }));
}

Var sigmoid(Var x) {
  return x.tape().record(Op::Sigmoid, {x.index()}, map(x.value(), [](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }));
}

Var abs(Var x) {
  return x.tape().record(Op::Abs, {x.index()}, map(x.value(), [](double v) { return std::abs(v); }));
}

Var trace_product(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows() || av.rows() != bv.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "trace_product: shapes do not compose to a square");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) s += av(i, j) * bv(j, i);
  return t.record(Op::TraceProduct, {a.index(), b.index()}, Matrix::scalar(s));
}

Var log_det_spd(Var a) {
  return a.tape().record(Op::LogDetSpd, {a.index()}, Matrix::scalar(uglad::log_det_spd(a.value())));
}

Var soft_threshold(Var x, Var tau) {
  Tape& t = same_tape(x, tau);
  const Matrix& xv = x.value();
  const Matrix& tv = tau.value();
  const bool broadcast = tv.size() == 1;
  if (!broadcast) require_same_shape(xv, tv, "soft_threshold");
  Matrix y(xv.rows(), xv.cols());
  for (std::size_t k = 0; k < xv.size(); ++k) {
    const double th = broadcast ? tv[0] : tv[k];
    const double mag = std::abs(xv[k]) - th;
    y[k] = mag > 0.0 ? sign(xv[k]) * mag : 0.0;
  }
  return t.record(Op::SoftThreshold, {x.index(), tau.index()}, std::move(y));
}

Var sum(Var x) {
  return x.tape().record(Op::Sum, {x.index()}, Matrix::scalar(uglad::sum(x.value())));
}

Var frobenius_sq(Var x) {
  const double n = frobenius_norm(x.value());
  return x.tape().record(Op::FrobeniusSq, {x.index()}, Matrix::scalar(n * n));
}

Var reciprocal(Var x) {
  return x.tape().record(Op::Reciprocal, {x.index()}, map(x.value(), [](double v) { return 1.0 / v; }));
}

Var affine(std::span<const Var> weights, std::span<const Var> inputs, Var bias) {
  if (weights.size() != inputs.size() || inputs.empty()) {
    throw Error(ErrorCode::LengthMismatch, "affine: weights and inputs differ in length");
  }
  Tape& t = bias.tape();
  require_scalar(bias.value(), "affine bias");
  const Matrix& first = inputs[0].value();
  Matrix out(first.rows(), first.cols(), bias.value()[0]);
  std::vector<std::uint32_t> parents;
  parents.reserve(2 * inputs.size() + 1);
  for (const Var& w : weights) {
    same_tape(w, bias);
    require_scalar(w.value(), "affine weight");
    parents.push_back(w.index());
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    same_tape(inputs[i], bias);
    const Matrix& x = inputs[i].value();
    require_same_shape(first, x, "affine input");
    const double w = weights[i].value()[0];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * x[k];
    parents.push_back(inputs[i].index());
  }
  parents.push_back(bias.index());
  return t.record(Op::Affine, std::move(parents), std::move(out),
                  static_cast<double>(inputs.size()));
}

Var inverse_spd(Var a) {
  return a.tape().record(Op::InverseSpd, {a.index()}, spd_inverse(a.value()));
}

Var sqrt_spd_eig(Var a) {
  const SymEig eig = sym_eig(a.value());
  const std::size_t n = eig.values.size();
  Matrix root(1, n);
  Matrix scaled = eig.vectors;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(eig.values[k] > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite, "sqrt_spd_eig: non-positive eigenvalue");
    }
    root[k] = std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= root[k];
  }
  Matrix value = symmetrize(matmul_nt(scaled, eig.vectors));
  return a.tape().record(Op::SqrtSpdEig, {a.index()}, std::move(value), 0.0, eig.vectors,
                         std::move(root));
}

Var symmetrize(Var x) {
  return x.tape().record(Op::Symmetrize, {x.index()}, uglad::symmetrize(x.value()));
}

double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> params,
                               std::span<const double> gradient, double h) {
  if (params.size() != gradient.size()) {
    throw Error(ErrorCode::LengthMismatch, "finite_difference_check: gradient length");
  }
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite_difference_check: h <= 0");
  double gmax = 0.0;
  for (double g : gradient) gmax = std::max(gmax, std::abs(g));
  const double floor = gmax > 0.0 ? 1e-3 * gmax : 1e-12;

  std::vector<double> p(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double fp = f(p);
    p[i] = orig - h;
    const double fm = f(p);
    p[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(gradient[i]), floor});
    worst = std::max(worst, std::abs(fd - gradient[i]) / denom);
  }
  return worst;
}

}  // namespace uglad::ad
