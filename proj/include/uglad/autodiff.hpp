#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "uglad/matrix.hpp"

namespace uglad::ad {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Subtract,
  Scale,          // constant factor times a node
  ScalarMultiply, // 1x1 node times a node
  Hadamard,
  Tanh,
  Sigmoid,
  Abs,
  TraceProduct,   // tr(A * B)
  LogDetSpd,
  SoftThreshold,
  Sum,
  FrobeniusSq,
  Reciprocal,
  Affine,         // sum_i w_i * X_i + b, with 1x1 weights and bias
  InverseSpd,
  SqrtSpdEig,
  Symmetrize,     // (X + X^T) / 2
};

const char* to_string(Op op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Tape& tape() const { return *tape_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

/// Append-only record of a computation. Nodes are created in topological
/// order, so the backward sweep is a reverse scan.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var variable(Matrix value);
  Var variable(double value) { return variable(Matrix::scalar(value)); }
  /// Non-differentiable input.
  Var constant(Matrix value);
  Var constant(double value) { return constant(Matrix::scalar(value)); }

  const Matrix& value(Var v) const;
  Op op(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 node. Gradients of earlier sweeps are cleared.
  void backward(Var loss);

  /// Gradient of the last backward() with respect to `v`; zeros when `v` was
  /// not reached.
  Matrix grad(Var v) const;

  // Recording primitives. Prefer the free functions below.
  Var record(Op op, std::vector<std::uint32_t> parents, Matrix value,
             double coefficient = 0.0, Matrix aux = {}, Matrix aux2 = {});

 private:
  struct Node {
    Op op;
    bool needs_grad;
    std::vector<std::uint32_t> parents;
    Matrix value;
    Matrix grad;
    double coefficient;
    Matrix aux;
    Matrix aux2;
  };

  Var push(Node node);
  Matrix& grad_slot(std::uint32_t index);
  void propagate(std::uint32_t index);

  std::deque<Node> nodes_;  // stable addresses: value() references survive growth
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var scale(double factor, Var x);
/// `s` must be 1x1.
Var scalar_multiply(Var s, Var x);
Var hadamard(Var a, Var b);
Var tanh(Var x);
Var sigmoid(Var x);
/// |x| with derivative sign(x), zero at the origin.
Var abs(Var x);
/// tr(A * B). The adjoint with respect to B is A^T.
Var trace_product(Var a, Var b);
/// log det of an SPD matrix; adjoint A^-T (symmetrized).
Var log_det_spd(Var a);
/// sign(x) * max(|x| - tau, 0) entrywise. `tau` is either the shape of `x` or
/// 1x1. At |x| == tau the derivative is the thresholded side's (zero).
Var soft_threshold(Var x, Var tau);
Var sum(Var x);
Var frobenius_sq(Var x);
/// Entrywise 1/x.
Var reciprocal(Var x);
/// sum_i weights[i] * inputs[i] + bias; weights and bias are 1x1 nodes.
Var affine(std::span<const Var> weights, std::span<const Var> inputs, Var bias);
Var inverse_spd(Var a);
/// Principal square root via eigendecomposition; backward solves the
/// Sylvester equation B X + X B = G in the eigenbasis.
Var sqrt_spd_eig(Var a);
Var symmetrize(Var x);

/// Central-difference check of a gradient. `f` maps a parameter vector to a
/// scalar; `gradient` is the analytic gradient at `params`. Per coordinate the
/// discrepancy is |fd - g| / max(|fd|, |g|, floor) with floor =
/// 1e-3 * max_i |g_i| (or 1e-12 when the gradient vanishes). Returns the
/// worst coordinate.
double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> params,
                               std::span<const double> gradient, double h);

}  // namespace uglad::ad
