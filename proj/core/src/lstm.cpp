#include "moglow/lstm.hpp"

#include <cmath>

#include "moglow/error.hpp"
#include "moglow/ops.hpp"

namespace moglow::ad {

LstmCellParams LstmCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  return {Tensor::zeros(input_dim, 4 * hidden_dim), Tensor::zeros(hidden_dim, 4 * hidden_dim),
          Tensor::zeros(1, 4 * hidden_dim)};
}

LstmCellParams LstmCellParams::random(std::size_t input_dim, std::size_t hidden_dim,
                                      std::mt19937_64& rng) {
  LstmCellParams p = zeros(input_dim, hidden_dim);
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(hidden_dim));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  for (Real& v : p.w_input.data()) v = dist(rng);
  for (Real& v : p.w_recurrent.data()) v = dist(rng);
  return p;
}

void LstmCellParams::validate() const {
  const std::size_t h = w_recurrent.rows();
  if (w_recurrent.cols() != 4 * h || w_input.cols() != 4 * h || bias.rows() != 1 ||
      bias.cols() != 4 * h) {
    throw DimensionError("LSTM parameter shapes disagree: input " +
                         shape_string(w_input.shape()) + ", recurrent " +
                         shape_string(w_recurrent.shape()) + ", bias " +
                         shape_string(bias.shape()));
  }
}

LstmState lstm_cell_projected(Binding& bind, Var input_gates, Var h, Var c,
                              const LstmCellParams& params) {
  const std::size_t hidden = params.hidden_dim();
  if (input_gates.cols() != 4 * hidden || h.cols() != hidden || c.cols() != hidden ||
      h.rows() != input_gates.rows() || c.rows() != input_gates.rows()) {
    throw DimensionError("lstm_cell: state/gate shapes do not match hidden size " +
                         std::to_string(hidden));
  }
  Var gates = add(input_gates, matmul(h, bind(params.w_recurrent)));
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, 2 * hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, 3 * hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
  Var c_next = add(mul(f, c), mul(i, g));
  Var h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

LstmState lstm_cell(Binding& bind, Var x, Var h, Var c, const LstmCellParams& params) {
  params.validate();
  if (x.cols() != params.input_dim()) {
    throw DimensionError("lstm_cell: input has " + std::to_string(x.cols()) +
                         " columns, cell expects " + std::to_string(params.input_dim()));
  }
  Var projected = add_row(matmul(x, bind(params.w_input)), bind(params.bias));
  return lstm_cell_projected(bind, projected, h, c, params);
}

}  // namespace moglow::ad
