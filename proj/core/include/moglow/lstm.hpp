#pragma once

#include <random>

#include "moglow/autodiff.hpp"

namespace moglow::ad {

/// Weights of one LSTM layer. Gate blocks are laid out [input, forget, cell, output]
/// along the 4·hidden columns.
struct LstmCellParams {
  Tensor w_input;      // input_dim × 4H
  Tensor w_recurrent;  // H × 4H
  Tensor bias;         // 1 × 4H

  static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Uniform(−1/√H, 1/√H) weights and zero biases.
  static LstmCellParams random(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng);

  std::size_t input_dim() const { return w_input.rows(); }
  std::size_t hidden_dim() const { return w_recurrent.rows(); }
  /// Throws DimensionError when the three tensors disagree.
  void validate() const;
};

struct LstmState {
  Var h;
  Var c;
};

/// One step of a standard LSTM: i, f, o gates through sigmoid, candidate through tanh,
/// c' = f⊙c + i⊙g, h' = o⊙tanh(c'). x, h, c hold one row per sequence.
LstmState lstm_cell(Binding& bind, Var x, Var h, Var c, const LstmCellParams& params);

/// Same cell when x·W_input + bias has already been computed (rows × 4H).
LstmState lstm_cell_projected(Binding& bind, Var input_gates, Var h, Var c,
                              const LstmCellParams& params);

}  // namespace moglow::ad
