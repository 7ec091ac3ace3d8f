#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "moglow/autodiff.hpp"
#include "moglow/lstm.hpp"

namespace moglow::flow {

/// normalise maps data toward the Gaussian latent; generate is its inverse.
enum class Direction { normalise, generate };

/// Result of one sub-step applied to a block of rows.
///
/// For actnorm and the linear map `logdet` is the per-row (per-frame)
/// contribution as a 1×1 node. For the coupling it is a rows×1 column.
struct FlowOutput {
  ad::Var y;
  ad::Var logdet;
};

/// Plain-tensor result for callers outside a graph.
struct Applied {
  Tensor y;
  Real logdet = 0.0;  // per frame (row); summed over rows for coupling results
};

// ---------------------------------------------------------------------------
// Activation normalisation: y = exp(log_scale) ⊙ x + bias.

struct ActNorm {
  Tensor log_scale;  // 1×D
  Tensor bias;       // 1×D
  bool initialized = false;

  static ActNorm identity(std::size_t dims, bool initialized = false);
  std::size_t dims() const { return log_scale.cols(); }

  /// Sets scale and bias so that `batch` (rows × D, at least 2 rows) maps to
  /// per-channel zero mean and unit variance. Throws DegenerateDataError on a
  /// zero-variance channel.
  void initialize(const Tensor& batch);
};

FlowOutput apply(ad::Binding& bind, const ActNorm& layer, ad::Var x, Direction direction);
Applied apply(const ActNorm& layer, const Tensor& x, Direction direction);

// ---------------------------------------------------------------------------
// Invertible linear map W = P·L·U.
//
// L is unit lower triangular, U upper triangular with diagonal
// sign ⊙ exp(log_u). Signs and the row permutation P are fixed at
// construction; only the free triangle entries and log_u are trained.

struct LinearLU {
  std::vector<std::size_t> permutation;  // row i of W is row permutation[i] of L·U
  Tensor sign;   // 1×D of ±1
  Tensor lower;  // D×D, strictly lower part used
  Tensor upper;  // D×D, strictly upper part used
  Tensor log_u;  // 1×D

  static LinearLU identity(std::size_t dims);
  /// LU factorisation (partial pivoting) of a random rotation.
  static LinearLU random_rotation(std::size_t dims, std::mt19937_64& rng);
  /// From explicit factors; U must have a non-zero diagonal, P = I.
  static LinearLU from_factors(const Tensor& l, const Tensor& u);

  std::size_t dims() const { return sign.cols(); }
  Tensor lower_matrix() const;
  Tensor upper_matrix() const;
  /// Dense W, assembled without the graph.
  Tensor weight() const;
  Real log_abs_det() const;
};

/// Normalising: y = W·x per row. Generating: two triangular solves (no gradient).
FlowOutput apply(ad::Binding& bind, const LinearLU& layer, ad::Var x, Direction direction);
Applied apply(const LinearLU& layer, const Tensor& x, Direction direction);

// ---------------------------------------------------------------------------
// Conditional affine coupling.

/// Network A computing (s′, t′) from the passed-through half and the
/// conditioning vector, with a two-layer LSTM carrying state across frames.
struct CouplingNet {
  std::size_t lo_dims = 0;
  std::size_t hi_dims = 0;
  std::size_t cond_dims = 0;
  std::size_t hidden = 0;
  Real scale_floor = 0.05;  // ε: s′ ∈ (ε, 1 + ε)

  ad::LstmCellParams layer1;  // (lo + cond) → hidden
  ad::LstmCellParams layer2;  // hidden → hidden
  Tensor w_shift;             // hidden × hi
  Tensor b_shift;             // 1 × hi
  Tensor w_scale;             // hidden × hi
  Tensor b_scale;             // 1 × hi

  /// Random LSTM weights, zero output heads, scale bias logit(1 − ε) so the
  /// coupling starts as the exact identity.
  static CouplingNet create(std::size_t lo_dims, std::size_t hi_dims, std::size_t cond_dims,
                            std::size_t hidden, Real scale_floor, std::mt19937_64& rng);
  void validate() const;
};

/// Recurrent state of both LSTM layers, one row per stream.
struct CouplingState {
  Tensor h1, c1, h2, c2;

  static CouplingState zeros(std::size_t streams, std::size_t hidden);
  std::size_t streams() const { return h1.rows(); }
};

struct CouplingParams {
  ad::Var scale;  // s′
  ad::Var shift;  // t′
};

/// Evaluates A over `frames` consecutive frames of `streams` parallel
/// sequences. Rows of `lo` and `cond` are frame-major (row = f·streams + s).
/// The LSTMs step once per frame; `state` is advanced in place.
CouplingParams coupling_net_eval(ad::Binding& bind, const CouplingNet& net, ad::Var lo,
                                 ad::Var cond, std::size_t frames, CouplingState& state);

/// Normalising: z = [b_lo, (b_hi + t′) ⊙ s′]. Generating: b_hi = z_hi ⊘ s′ − t′.
/// `logdet` is the per-row Σ log s′ (negated when generating).
FlowOutput coupling_apply(ad::Binding& bind, const CouplingNet& net, ad::Var input, ad::Var cond,
                          std::size_t frames, CouplingState& state, Direction direction);

struct CouplingApplied {
  Tensor y;
  Tensor logdet_rows;  // rows × 1
};
CouplingApplied coupling_apply(const CouplingNet& net, const Tensor& input, const Tensor& cond,
                               std::size_t frames, CouplingState& state, Direction direction);

}  // namespace moglow::flow
