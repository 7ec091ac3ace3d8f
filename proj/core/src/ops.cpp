#include "moglow/ops.hpp"

#include <cmath>
#include <string>

#include "moglow/error.hpp"

namespace moglow::ad {

namespace {

Graph& graph_of(Var a) { return *a.graph; }

Real stable_sigmoid(Real x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

const char* op_name(Elementwise op) {
  switch (op) {
    case Elementwise::add: return "add";
    case Elementwise::sub: return "sub";
    case Elementwise::mul: return "mul";
    case Elementwise::div: return "div";
    case Elementwise::log: return "log";
    case Elementwise::exp: return "exp";
    case Elementwise::sigmoid: return "sigmoid";
    case Elementwise::tanh: return "tanh";
    case Elementwise::neg: return "neg";
  }
  return "?";
}

// Index helpers for scalar ⊗ tensor broadcasting.
struct Broadcast {
  std::size_t a_stride;
  std::size_t b_stride;
  Tensor::Shape shape;
  std::size_t n;
};

Broadcast broadcast_of(Elementwise op, const Tensor& a, const Tensor& b) {
  if (a.size() == b.size() && same_shape(a, b)) return {1, 1, a.shape(), a.size()};
  if (a.size() == 1) return {0, 1, b.shape(), b.size()};
  if (b.size() == 1) return {1, 0, a.shape(), a.size()};
  throw DimensionError(std::string(op_name(op)) + ": shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()) + " are not broadcast-compatible");
}

}  // namespace

Var elementwise(Elementwise op, Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast bc = broadcast_of(op, av, bv);
  Tensor out = Tensor::zeros(bc.shape);
  const Real* pa = av.ptr();
  const Real* pb = bv.ptr();
  Real* po = out.ptr();
  switch (op) {
    case Elementwise::add:
      for (std::size_t i = 0; i < bc.n; ++i) po[i] = pa[i * bc.a_stride] + pb[i * bc.b_stride];
      break;
    case Elementwise::sub:
      for (std::size_t i = 0; i < bc.n; ++i) po[i] = pa[i * bc.a_stride] - pb[i * bc.b_stride];
      break;
    case Elementwise::mul:
      for (std::size_t i = 0; i < bc.n; ++i) po[i] = pa[i * bc.a_stride] * pb[i * bc.b_stride];
      break;
    case Elementwise::div:
      for (std::size_t i = 0; i < bc.n; ++i) {
        const Real d = pb[i * bc.b_stride];
        if (d == 0.0) throw NumericError("div: division by zero");
        po[i] = pa[i * bc.a_stride] / d;
      }
      break;
    default:
      throw ContractError(std::string(op_name(op)) + " is not a binary operation");
  }
  const std::uint32_t ia = a.id;
  const std::uint32_t ib = b.id;
  const bool grad_a = g.requires_grad(a);
  const bool grad_b = g.requires_grad(b);
  return g.push(std::move(out), {a, b}, [op, bc, ia, ib, grad_a, grad_b](Graph& gr,
                                                                          std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    const Real* pg = go.ptr();
    const Real* xa = gr.value(ia).ptr();
    const Real* xb = gr.value(ib).ptr();
    if (grad_a) {
      Real* da = gr.adjoint(ia).ptr();
      switch (op) {
        case Elementwise::add:
        case Elementwise::sub:
          for (std::size_t i = 0; i < bc.n; ++i) da[i * bc.a_stride] += pg[i];
          break;
        case Elementwise::mul:
          for (std::size_t i = 0; i < bc.n; ++i) da[i * bc.a_stride] += pg[i] * xb[i * bc.b_stride];
          break;
        case Elementwise::div:
          for (std::size_t i = 0; i < bc.n; ++i) da[i * bc.a_stride] += pg[i] / xb[i * bc.b_stride];
          break;
        default:
          break;
      }
    }
    if (!grad_b) return;
    Real* db = gr.adjoint(ib).ptr();
    switch (op) {
      case Elementwise::add:
        for (std::size_t i = 0; i < bc.n; ++i) db[i * bc.b_stride] += pg[i];
        break;
      case Elementwise::sub:
        for (std::size_t i = 0; i < bc.n; ++i) db[i * bc.b_stride] -= pg[i];
        break;
      case Elementwise::mul:
        for (std::size_t i = 0; i < bc.n; ++i) db[i * bc.b_stride] += pg[i] * xa[i * bc.a_stride];
        break;
      case Elementwise::div:
        for (std::size_t i = 0; i < bc.n; ++i) {
          const Real d = xb[i * bc.b_stride];
          db[i * bc.b_stride] -= pg[i] * xa[i * bc.a_stride] / (d * d);
        }
        break;
      default:
        break;
    }
  });
}

Var elementwise(Elementwise op, Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros(av.shape());
  const Real* pa = av.ptr();
  Real* po = out.ptr();
  const std::size_t n = av.size();
  switch (op) {
    case Elementwise::log:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(pa[i] > 0.0)) {
          throw NumericError("log: non-positive operand " + std::to_string(pa[i]));
        }
        po[i] = std::log(pa[i]);
      }
      break;
    case Elementwise::exp:
      for (std::size_t i = 0; i < n; ++i) po[i] = std::exp(pa[i]);
      break;
    case Elementwise::sigmoid:
      for (std::size_t i = 0; i < n; ++i) po[i] = stable_sigmoid(pa[i]);
      break;
    case Elementwise::tanh:
      for (std::size_t i = 0; i < n; ++i) po[i] = std::tanh(pa[i]);
      break;
    case Elementwise::neg:
      for (std::size_t i = 0; i < n; ++i) po[i] = -pa[i];
      break;
    default:
      throw ContractError(std::string(op_name(op)) + " is not a unary operation");
  }
  const std::uint32_t ia = a.id;
  return g.push(std::move(out), {a}, [op, n, ia](Graph& gr, std::uint32_t self) {
    const Real* pg = gr.adjoint(self).ptr();
    const Real* x = gr.value(ia).ptr();
    const Real* y = gr.value(self).ptr();
    Real* da = gr.adjoint(ia).ptr();
    switch (op) {
      case Elementwise::log:
        for (std::size_t i = 0; i < n; ++i) da[i] += pg[i] / x[i];
        break;
      case Elementwise::exp:
        for (std::size_t i = 0; i < n; ++i) da[i] += pg[i] * y[i];
        break;
      case Elementwise::sigmoid:
        for (std::size_t i = 0; i < n; ++i) da[i] += pg[i] * y[i] * (1.0 - y[i]);
        break;
      case Elementwise::tanh:
        for (std::size_t i = 0; i < n; ++i) da[i] += pg[i] * (1.0 - y[i] * y[i]);
        break;
      case Elementwise::neg:
        for (std::size_t i = 0; i < n; ++i) da[i] -= pg[i];
        break;
      default:
        break;
    }
  });
}

Var scale(Var a, Real factor) {
  Tensor out = a.value();
  for (Real& v : out.data()) v *= factor;
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia, factor](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i] * factor;
  });
}

Var add_scalar(Var a, Real offset) {
  Tensor out = a.value();
  for (Real& v : out.data()) v += offset;
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i];
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = moglow::matmul(av, bv);
  const std::uint32_t ia = a.id;
  const std::uint32_t ib = b.id;
  Graph& g = graph_of(a);
  const bool grad_a = g.requires_grad(a);
  const bool grad_b = g.requires_grad(b);
  return g.push(std::move(out), {a, b}, [ia, ib, grad_a, grad_b](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    const Tensor& x = gr.value(ia);
    const Tensor& w = gr.value(ib);
    const std::size_t m = x.rows();
    const std::size_t k = x.cols();
    const std::size_t n = w.cols();
    if (grad_a) {
      const Tensor wt = moglow::transpose(w);
      gemm_accumulate(go.ptr(), wt.ptr(), gr.adjoint(ia).ptr(), m, n, k);
    }
    if (grad_b) gemm_tn_accumulate(x.ptr(), go.ptr(), gr.adjoint(ib).ptr(), m, k, n);
  });
}

Var transpose(Var a) {
  Tensor out = moglow::transpose(a.value());
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    const std::size_t r = da.rows();
    const std::size_t c = da.cols();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) da(i, j) += go(j, i);
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row: row " + shape_string(rv.shape()) + " vs matrix " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  for (std::size_t i = 0; i < m; ++i) {
    Real* o = out.ptr() + i * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += rv[j];
  }
  const std::uint32_t ia = a.id;
  const std::uint32_t ir = row.id;
  return graph_of(a).push(std::move(out), {a, row}, [ia, ir, m, n](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < m * n; ++i) da[i] += go[i];
    Tensor& dr = gr.adjoint(ir);
    for (std::size_t i = 0; i < m; ++i) {
      const Real* g = go.ptr() + i * n;
      for (std::size_t j = 0; j < n; ++j) dr[j] += g[j];
    }
  });
}

Var mul_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("mul_row: row " + shape_string(rv.shape()) + " vs matrix " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  for (std::size_t i = 0; i < m; ++i) {
    Real* o = out.ptr() + i * n;
    for (std::size_t j = 0; j < n; ++j) o[j] *= rv[j];
  }
  const std::uint32_t ia = a.id;
  const std::uint32_t ir = row.id;
  return graph_of(a).push(std::move(out), {a, row}, [ia, ir, m, n](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    const Tensor& x = gr.value(ia);
    const Tensor& r = gr.value(ir);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) da[i * n + j] += go[i * n + j] * r[j];
    }
    Tensor& dr = gr.adjoint(ir);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) dr[j] += go[i * n + j] * x[i * n + j];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + std::to_string(n) + " columns");
  }
  const std::size_t w = end - begin;
  Tensor out = Tensor::zeros(m, w);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(av.ptr() + i * n + begin, w, out.ptr() + i * w);
  }
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia, m, n, w, begin](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < m; ++i) {
      Real* d = da.ptr() + i * n + begin;
      const Real* g = go.ptr() + i * w;
      for (std::size_t j = 0; j < w; ++j) d[j] += g[j];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (begin > end || end > m) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + std::to_string(m) + " rows");
  }
  Tensor out(Tensor::Shape{end - begin, n},
             std::vector<Real>(av.ptr() + begin * n, av.ptr() + end * n));
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia, n, begin](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Real* d = gr.adjoint(ia).ptr() + begin * n;
    for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    n += p.cols();
  }
  Tensor out = Tensor::zeros(m, n);
  std::vector<std::pair<std::uint32_t, std::size_t>> layout;  // (node, column offset)
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = pv.cols();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(pv.ptr() + i * w, w, out.ptr() + i * n + offset);
    layout.emplace_back(p.id, offset);
    offset += w;
  }
  return parts.front().graph->push(
      std::move(out), parts, [layout, m, n](Graph& gr, std::uint32_t self) {
        const Tensor& go = gr.adjoint(self);
        for (const auto& [id, off] : layout) {
          Tensor& d = gr.adjoint(id);
          const std::size_t w = d.cols();
          for (std::size_t i = 0; i < m; ++i) {
            const Real* g = go.ptr() + i * n + off;
            Real* dd = d.ptr() + i * w;
            for (std::size_t j = 0; j < w; ++j) dd[j] += g[j];
          }
        }
      });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const Var& p : parts) {
    if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
    m += p.rows();
  }
  std::vector<Real> data;
  data.reserve(m * n);
  std::vector<std::pair<std::uint32_t, std::size_t>> layout;  // (node, element offset)
  for (const Var& p : parts) {
    layout.emplace_back(p.id, data.size());
    const Tensor& pv = p.value();
    data.insert(data.end(), pv.ptr(), pv.ptr() + pv.size());
  }
  return parts.front().graph->push(Tensor(Tensor::Shape{m, n}, std::move(data)), parts,
                                   [layout](Graph& gr, std::uint32_t self) {
                                     const Tensor& go = gr.adjoint(self);
                                     for (const auto& [id, off] : layout) {
                                       Tensor& d = gr.adjoint(id);
                                       const Real* g = go.ptr() + off;
                                       for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
                                     }
                                   });
}

Var sum(Var a) {
  Real total = 0.0;
  for (Real v : a.value().data()) total += v;
  const std::uint32_t ia = a.id;
  return graph_of(a).push(Tensor::scalar(total), {a}, [ia](Graph& gr, std::uint32_t self) {
    const Real g = gr.adjoint(self)[0];
    for (Real& d : gr.adjoint(ia).data()) d += g;
  });
}

Var row_sums(Var a) {
  const Tensor& av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Tensor out = Tensor::zeros(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    Real s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += av[i * n + j];
    out[i] = s;
  }
  const std::uint32_t ia = a.id;
  return graph_of(a).push(std::move(out), {a}, [ia, m, n](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) da[i * n + j] += go[i];
    }
  });
}

Var sum_squares(Var a) {
  Real total = 0.0;
  for (Real v : a.value().data()) total += v * v;
  const std::uint32_t ia = a.id;
  return graph_of(a).push(Tensor::scalar(total), {a}, [ia](Graph& gr, std::uint32_t self) {
    const Real g = gr.adjoint(self)[0];
    const Tensor& x = gr.value(ia);
    Tensor& da = gr.adjoint(ia);
    for (std::size_t i = 0; i < x.size(); ++i) da[i] += 2.0 * g * x[i];
  });
}

Var diag_embed(Var row) {
  const Tensor& rv = row.value();
  if (rv.rows() != 1) throw DimensionError("diag_embed expects a row vector");
  const std::size_t n = rv.cols();
  Tensor out = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = rv[i];
  const std::uint32_t ir = row.id;
  return graph_of(row).push(std::move(out), {row}, [ir, n](Graph& gr, std::uint32_t self) {
    const Tensor& go = gr.adjoint(self);
    Tensor& dr = gr.adjoint(ir);
    for (std::size_t i = 0; i < n; ++i) dr[i] += go(i, i);
  });
}

}  // namespace moglow::ad
