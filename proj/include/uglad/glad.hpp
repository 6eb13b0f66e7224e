#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uglad/autodiff.hpp"
#include "uglad/matrix.hpp"

namespace uglad {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs
};

/// Fully connected network: tanh on hidden layers, sigmoid on the single
/// output unit.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp zeros(std::span<const std::size_t> widths);
  std::size_t parameter_count() const;
  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::vector<std::size_t> widths() const;
};

double mlp_forward(const Mlp& net, std::span<const double> input);

/// Threshold network: inputs (theta_ij, s_ij, z_ij), four linear layers.
inline constexpr std::array<std::size_t, 5> kRhoWidths{3, 3, 3, 3, 1};
/// Penalty network: inputs (||Z - Theta||_F^2 / d^2, lambda_k), two layers.
inline constexpr std::array<std::size_t, 3> kLambdaWidths{2, 3, 1};

inline constexpr double kDefaultThetaOffset = 1.0;
inline constexpr double kMinThetaOffset = 1e-3;
inline constexpr double kLambdaFloor = 1e-6;

/// Learnable parameters of the unrolled network.
struct GladParams {
  Mlp rho;
  Mlp lambda;
  double theta_offset = kDefaultThetaOffset;

  /// Zero weights and biases, offset 1.
  static GladParams zeros();
  /// Weights uniform in [-0.1, 0.1] from `seed`, zero biases, offset 1.
  static GladParams initialize(std::uint64_t seed);

  std::size_t size() const;
  /// rho layers (weights then bias per layer), lambda layers, then the offset.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct UnrollConfig {
  int depth = 30;
  double lambda_init = 1.0;

  // Diagnostic overrides. When set, the threshold network output (before the
  // division by lambda) or the penalty sequence is replaced by a constant.
  std::optional<double> pinned_rho;
  std::optional<double> pinned_lambda;
  /// Added to every threshold network output before the division by lambda.
  double rho_shift = 0.0;
};

struct GladState {
  Matrix theta;
  Matrix z;
  double lambda = 1.0;
  int iteration = 0;
};

struct GladTrace {
  GladState final_state;
  std::vector<GladState> trajectory;  // states 1..L when requested
};

double soft_threshold(double x, double tau);

/// Theta_0 = (S + tI)^-1, Z_0 = Theta_0, lambda_0 = lambda_init.
GladState theta_init(const Matrix& s, double t, double lambda_init = 1.0);

/// One alternating-minimization step with learned threshold and penalty.
GladState glad_cell(const Matrix& s, const GladState& state, const GladParams& params,
                    const UnrollConfig& cfg = {});

/// theta_init followed by cfg.depth cells.
GladTrace glad_forward(const Matrix& s, const GladParams& params, const UnrollConfig& cfg,
                       bool keep_trajectory = false);

/// -log det Theta + tr(S Theta)
double uglad_loss(const Matrix& s_eval, const Matrix& theta);
/// Mean of uglad_loss over paired (S_k, Theta_k).
double multitask_loss(std::span<const Matrix> covariances, std::span<const Matrix> thetas);
/// Mean of uglad_loss(S_full, Theta_k).
double meta_loss(const Matrix& s_full, std::span<const Matrix> thetas);

// ---------------------------------------------------------------------------
// Recorded (differentiable) counterparts.

/// GladParams bound to a tape as 1x1 leaves, in flatten() order.
class GladNetwork {
 public:
  GladNetwork(ad::Tape& tape, const GladParams& params);

  ad::Tape& tape() const { return *tape_; }
  const std::vector<ad::Var>& parameters() const { return leaves_; }
  ad::Var theta_offset() const { return leaves_.back(); }

  /// Entrywise threshold network on same-shape features.
  ad::Var rho(ad::Var theta, ad::Var s, ad::Var z) const;
  /// Penalty network on 1x1 features.
  ad::Var lambda(ad::Var gap, ad::Var lambda_prev) const;

  /// Gradient of the last backward() in flatten() order.
  std::vector<double> gradient() const;

 private:
  struct LayerVars {
    std::vector<std::vector<ad::Var>> weights;  // [output][input]
    std::vector<ad::Var> bias;
  };
  ad::Var run(const std::vector<LayerVars>& layers, std::vector<ad::Var> features) const;

  ad::Tape* tape_;
  std::vector<ad::Var> leaves_;
  std::vector<LayerVars> rho_;
  std::vector<LayerVars> lambda_;
};

struct RecordedState {
  ad::Var theta;
  ad::Var z;
  ad::Var lambda;
};

/// Square root of an SPD node: Newton-Schulz unrolled on the tape, or the
/// eigendecomposition primitive when the iteration does not converge.
ad::Var record_sqrt_spd(ad::Var a);

RecordedState record_theta_init(const GladNetwork& net, ad::Var s, double lambda_init);
RecordedState record_glad_cell(const GladNetwork& net, ad::Var s, const RecordedState& state,
                               const UnrollConfig& cfg);
RecordedState record_glad_forward(const GladNetwork& net, ad::Var s, const UnrollConfig& cfg,
                                  std::vector<GladState>* trajectory = nullptr);
ad::Var record_uglad_loss(ad::Var s_eval, ad::Var theta);
ad::Var record_mean(std::span<const ad::Var> terms);

}  // namespace uglad
