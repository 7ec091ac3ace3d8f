#include "moglow/flow_steps.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "moglow/error.hpp"
#include "moglow/ops.hpp"

namespace moglow::flow {

using ad::Var;

// ---------------------------------------------------------------------------
// ActNorm

ActNorm ActNorm::identity(std::size_t dims, bool initialized) {
  return {Tensor::zeros(1, dims), Tensor::zeros(1, dims), initialized};
}

void ActNorm::initialize(const Tensor& batch) {
  const std::size_t rows = batch.rows();
  const std::size_t d = batch.cols();
  if (rows < 2) throw ContractError("actnorm initialisation needs at least 2 rows");
  if (d != dims()) {
    throw DimensionError("actnorm initialisation: batch has " + std::to_string(d) +
                         " channels, layer has " + std::to_string(dims()));
  }
  for (std::size_t j = 0; j < d; ++j) {
    Real mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += batch(i, j);
    mean /= static_cast<Real>(rows);
    Real var = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const Real dev = batch(i, j) - mean;
      var += dev * dev;
    }
    var /= static_cast<Real>(rows);
    if (!(var > 0.0)) {
      throw DegenerateDataError("actnorm initialisation: channel " + std::to_string(j) +
                                " has zero variance");
    }
    const Real stddev = std::sqrt(var);
    log_scale[j] = -std::log(stddev);
    bias[j] = -mean / stddev;
  }
  initialized = true;
}

FlowOutput apply(ad::Binding& bind, const ActNorm& layer, Var x, Direction direction) {
  if (!layer.initialized) throw ContractError("actnorm used before initialisation");
  if (x.cols() != layer.dims()) {
    throw DimensionError("actnorm: input has " + std::to_string(x.cols()) + " channels, layer has " +
                         std::to_string(layer.dims()));
  }
  Var log_s = bind(layer.log_scale);
  Var t = bind(layer.bias);
  Var logdet = ad::sum(log_s);
  if (direction == Direction::normalise) {
    return {ad::add_row(ad::mul_row(x, ad::exp(log_s)), t), logdet};
  }
  return {ad::mul_row(ad::add_row(x, ad::neg(t)), ad::exp(ad::neg(log_s))), ad::neg(logdet)};
}

Applied apply(const ActNorm& layer, const Tensor& x, Direction direction) {
  ad::Graph graph(false);
  ad::Binding bind(graph, false);
  FlowOutput out = apply(bind, layer, graph.constant(x), direction);
  return {out.y.value(), out.logdet.value().item()};
}

// ---------------------------------------------------------------------------
// LinearLU

namespace {

Tensor strict_lower_mask(std::size_t d) {
  Tensor m = Tensor::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = 1.0;
  return m;
}

Tensor strict_upper_mask(std::size_t d) {
  Tensor m = Tensor::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) m(i, j) = 1.0;
  return m;
}

bool is_identity_permutation(const std::vector<std::size_t>& p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != i) return false;
  return true;
}

}  // namespace

LinearLU LinearLU::identity(std::size_t dims) {
  LinearLU layer;
  layer.permutation.resize(dims);
  std::iota(layer.permutation.begin(), layer.permutation.end(), std::size_t{0});
  layer.sign = Tensor::filled({1, dims}, 1.0);
  layer.lower = Tensor::zeros(dims, dims);
  layer.upper = Tensor::zeros(dims, dims);
  layer.log_u = Tensor::zeros(1, dims);
  return layer;
}

LinearLU LinearLU::from_factors(const Tensor& l, const Tensor& u) {
  const std::size_t d = l.rows();
  if (l.cols() != d || u.rows() != d || u.cols() != d) {
    throw DimensionError("LU factors must be square and of equal size");
  }
  LinearLU layer = identity(d);
  for (std::size_t i = 0; i < d; ++i) {
    const Real diag = u(i, i);
    if (diag == 0.0) throw NumericError("LU factor U has a zero diagonal entry");
    layer.sign[i] = diag > 0.0 ? 1.0 : -1.0;
    layer.log_u[i] = std::log(std::abs(diag));
    for (std::size_t j = 0; j < i; ++j) layer.lower(i, j) = l(i, j);
    for (std::size_t j = i + 1; j < d; ++j) layer.upper(i, j) = u(i, j);
  }
  return layer;
}

LinearLU LinearLU::random_rotation(std::size_t dims, std::mt19937_64& rng) {
  std::normal_distribution<Real> normal(0.0, 1.0);
  // Modified Gram-Schmidt on a Gaussian matrix (columns).
  Tensor q = Tensor::zeros(dims, dims);
  for (Real& v : q.data()) v = normal(rng);
  for (std::size_t j = 0; j < dims; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      Real dot = 0.0;
      for (std::size_t i = 0; i < dims; ++i) dot += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < dims; ++i) q(i, j) -= dot * q(i, k);
    }
    Real norm = 0.0;
    for (std::size_t i = 0; i < dims; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dims; ++i) q(i, j) /= norm;
  }

  // Doolittle LU with partial pivoting: rows[piv[i]] of q form row i of P·q.
  Tensor a = q;
  std::vector<std::size_t> piv(dims);
  std::iota(piv.begin(), piv.end(), std::size_t{0});
  for (std::size_t k = 0; k < dims; ++k) {
    std::size_t best = k;
    for (std::size_t i = k + 1; i < dims; ++i)
      if (std::abs(a(i, k)) > std::abs(a(best, k))) best = i;
    if (best != k) {
      for (std::size_t j = 0; j < dims; ++j) std::swap(a(k, j), a(best, j));
      std::swap(piv[k], piv[best]);
    }
    for (std::size_t i = k + 1; i < dims; ++i) {
      a(i, k) /= a(k, k);
      for (std::size_t j = k + 1; j < dims; ++j) a(i, j) -= a(i, k) * a(k, j);
    }
  }
  Tensor l = Tensor::identity(dims);
  Tensor u = Tensor::zeros(dims, dims);
  for (std::size_t i = 0; i < dims; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      if (j < i) l(i, j) = a(i, j);
      else u(i, j) = a(i, j);
    }
  }
  LinearLU layer = from_factors(l, u);
  // q row piv[i] equals (L·U) row i, so W row r comes from L·U row i with piv[i] == r.
  for (std::size_t i = 0; i < dims; ++i) layer.permutation[piv[i]] = i;
  return layer;
}

Tensor LinearLU::lower_matrix() const {
  const std::size_t d = dims();
  Tensor l = Tensor::identity(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) l(i, j) = lower(i, j);
  return l;
}

Tensor LinearLU::upper_matrix() const {
  const std::size_t d = dims();
  Tensor u = Tensor::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    u(i, i) = sign[i] * std::exp(log_u[i]);
    for (std::size_t j = i + 1; j < d; ++j) u(i, j) = upper(i, j);
  }
  return u;
}

Tensor LinearLU::weight() const {
  const Tensor lu = matmul(lower_matrix(), upper_matrix());
  const std::size_t d = dims();
  Tensor w = Tensor::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = lu(permutation[i], j);
  return w;
}

Real LinearLU::log_abs_det() const {
  Real total = 0.0;
  for (Real v : log_u.data()) total += v;
  return total;
}

FlowOutput apply(ad::Binding& bind, const LinearLU& layer, Var x, Direction direction) {
  const std::size_t d = layer.dims();
  if (x.cols() != d) {
    throw DimensionError("linear: input has " + std::to_string(x.cols()) + " channels, layer has " +
                         std::to_string(d));
  }
  ad::Graph& g = bind.graph();
  Var log_u = bind(layer.log_u);
  Var logdet = ad::sum(log_u);

  if (direction == Direction::generate) {
    const Tensor l = layer.lower_matrix();
    const Tensor u = layer.upper_matrix();
    const Tensor& in = x.value();
    Tensor out = Tensor::zeros(in.rows(), d);
    std::vector<Real> v(d);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      for (std::size_t i = 0; i < d; ++i) v[layer.permutation[i]] = in(r, i);
      for (std::size_t i = 0; i < d; ++i) {
        Real s = v[i];
        for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * v[j];
        v[i] = s;
      }
      for (std::size_t i = d; i-- > 0;) {
        Real s = v[i];
        for (std::size_t j = i + 1; j < d; ++j) s -= u(i, j) * v[j];
        v[i] = s / u(i, i);
      }
      for (std::size_t i = 0; i < d; ++i) out(r, i) = v[i];
    }
    return {g.constant(std::move(out)), ad::neg(logdet)};
  }

  Var l = ad::add(g.constant(Tensor::identity(d)),
                  ad::mul(bind(layer.lower), g.constant(strict_lower_mask(d))));
  Var diag = ad::diag_embed(ad::mul(g.constant(layer.sign), ad::exp(log_u)));
  Var u = ad::add(ad::mul(bind(layer.upper), g.constant(strict_upper_mask(d))), diag);
  Var w = ad::matmul(l, u);
  if (!is_identity_permutation(layer.permutation)) {
    Tensor p = Tensor::zeros(d, d);
    for (std::size_t i = 0; i < d; ++i) p(i, layer.permutation[i]) = 1.0;
    w = ad::matmul(g.constant(std::move(p)), w);
  }
  return {ad::matmul(x, ad::transpose(w)), logdet};
}

Applied apply(const LinearLU& layer, const Tensor& x, Direction direction) {
  ad::Graph graph(false);
  ad::Binding bind(graph, false);
  FlowOutput out = apply(bind, layer, graph.constant(x), direction);
  return {out.y.value(), out.logdet.value().item()};
}

// ---------------------------------------------------------------------------
// Coupling

CouplingNet CouplingNet::create(std::size_t lo_dims, std::size_t hi_dims, std::size_t cond_dims,
                                std::size_t hidden, Real scale_floor, std::mt19937_64& rng) {
  if (!(scale_floor > 0.0 && scale_floor < 1.0)) {
    throw ContractError("coupling scale floor must lie in (0, 1)");
  }
  CouplingNet net;
  net.lo_dims = lo_dims;
  net.hi_dims = hi_dims;
  net.cond_dims = cond_dims;
  net.hidden = hidden;
  net.scale_floor = scale_floor;
  net.layer1 = ad::LstmCellParams::random(lo_dims + cond_dims, hidden, rng);
  net.layer2 = ad::LstmCellParams::random(hidden, hidden, rng);
  net.w_shift = Tensor::zeros(hidden, hi_dims);
  net.b_shift = Tensor::zeros(1, hi_dims);
  net.w_scale = Tensor::zeros(hidden, hi_dims);
  net.b_scale = Tensor::filled({1, hi_dims}, std::log((1.0 - scale_floor) / scale_floor));
  return net;
}

void CouplingNet::validate() const {
  layer1.validate();
  layer2.validate();
  if (layer1.input_dim() != lo_dims + cond_dims || layer1.hidden_dim() != hidden ||
      layer2.input_dim() != hidden || layer2.hidden_dim() != hidden ||
      w_shift.rows() != hidden || w_shift.cols() != hi_dims || b_shift.cols() != hi_dims ||
      w_scale.rows() != hidden || w_scale.cols() != hi_dims || b_scale.cols() != hi_dims) {
    throw DimensionError("coupling network parameter shapes disagree with its dimensions");
  }
}

CouplingState CouplingState::zeros(std::size_t streams, std::size_t hidden) {
  return {Tensor::zeros(streams, hidden), Tensor::zeros(streams, hidden),
          Tensor::zeros(streams, hidden), Tensor::zeros(streams, hidden)};
}

namespace {

Var run_lstm_layer(ad::Binding& bind, const ad::LstmCellParams& params, Var inputs,
                   std::size_t frames, std::size_t streams, Tensor& h_state, Tensor& c_state) {
  ad::Graph& g = bind.graph();
  Var projected = ad::add_row(ad::matmul(inputs, bind(params.w_input)), bind(params.bias));
  Var h = g.constant(h_state);
  Var c = g.constant(c_state);
  std::vector<Var> outputs;
  outputs.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    Var gates = frames == 1 ? projected : ad::slice_rows(projected, f * streams, (f + 1) * streams);
    ad::LstmState next = ad::lstm_cell_projected(bind, gates, h, c, params);
    h = next.h;
    c = next.c;
    outputs.push_back(h);
  }
  h_state = h.value();
  c_state = c.value();
  return frames == 1 ? outputs.front() : ad::concat_rows(outputs);
}

}  // namespace

CouplingParams coupling_net_eval(ad::Binding& bind, const CouplingNet& net, Var lo, Var cond,
                                 std::size_t frames, CouplingState& state) {
  const std::size_t streams = state.streams();
  if (lo.cols() != net.lo_dims || cond.cols() != net.cond_dims) {
    throw DimensionError("coupling net: expected lo/cond widths " + std::to_string(net.lo_dims) +
                         "/" + std::to_string(net.cond_dims) + ", got " +
                         std::to_string(lo.cols()) + "/" + std::to_string(cond.cols()));
  }
  if (lo.rows() != frames * streams || cond.rows() != frames * streams) {
    throw DimensionError("coupling net: row count must equal frames x streams");
  }
  if (state.h1.cols() != net.hidden || state.h2.cols() != net.hidden) {
    throw DimensionError("coupling state width does not match the network");
  }
  Var inputs = net.lo_dims == 0 ? cond : ad::concat_cols({lo, cond});
  Var h1 = run_lstm_layer(bind, net.layer1, inputs, frames, streams, state.h1, state.c1);
  Var h2 = run_lstm_layer(bind, net.layer2, h1, frames, streams, state.h2, state.c2);
  Var shift = ad::add_row(ad::matmul(h2, bind(net.w_shift)), bind(net.b_shift));
  Var pre = ad::add_row(ad::matmul(h2, bind(net.w_scale)), bind(net.b_scale));
  Var scale = ad::add_scalar(ad::sigmoid(pre), net.scale_floor);
  return {scale, shift};
}

FlowOutput coupling_apply(ad::Binding& bind, const CouplingNet& net, Var input, Var cond,
                          std::size_t frames, CouplingState& state, Direction direction) {
  const std::size_t d = net.lo_dims + net.hi_dims;
  if (input.cols() != d) {
    throw DimensionError("coupling: input has " + std::to_string(input.cols()) +
                         " channels, expected " + std::to_string(d));
  }
  Var lo = ad::slice_cols(input, 0, net.lo_dims);
  Var hi = ad::slice_cols(input, net.lo_dims, d);
  CouplingParams p = coupling_net_eval(bind, net, lo, cond, frames, state);
  Var log_scale_rows = ad::row_sums(ad::log(p.scale));
  if (direction == Direction::normalise) {
    Var out_hi = ad::mul(ad::add(hi, p.shift), p.scale);
    return {net.lo_dims == 0 ? out_hi : ad::concat_cols({lo, out_hi}), log_scale_rows};
  }
  Var out_hi = ad::sub(ad::div(hi, p.scale), p.shift);
  return {net.lo_dims == 0 ? out_hi : ad::concat_cols({lo, out_hi}), ad::neg(log_scale_rows)};
}

CouplingApplied coupling_apply(const CouplingNet& net, const Tensor& input, const Tensor& cond,
                               std::size_t frames, CouplingState& state, Direction direction) {
  ad::Graph graph(false);
  ad::Binding bind(graph, false);
  FlowOutput out = coupling_apply(bind, net, graph.constant(input), graph.constant(cond), frames,
                                  state, direction);
  return {out.y.value(), out.logdet.value()};
}

}  // namespace moglow::flow
