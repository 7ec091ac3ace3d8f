#pragma once

#include <vector>

#include "moglow/autodiff.hpp"

namespace moglow::ad {

enum class Elementwise { add, sub, mul, div, log, exp, sigmoid, tanh, neg };

/// Binary ops need equal shapes, or one operand holding a single value
/// (scalar ⊗ tensor). No other broadcasting is performed.
Var elementwise(Elementwise op, Var a, Var b);
Var elementwise(Elementwise op, Var a);

inline Var add(Var a, Var b) { return elementwise(Elementwise::add, a, b); }
inline Var sub(Var a, Var b) { return elementwise(Elementwise::sub, a, b); }
inline Var mul(Var a, Var b) { return elementwise(Elementwise::mul, a, b); }
/// Throws NumericError when any divisor is zero.
inline Var div(Var a, Var b) { return elementwise(Elementwise::div, a, b); }
/// Throws NumericError when any operand is ≤ 0.
inline Var log(Var a) { return elementwise(Elementwise::log, a); }
inline Var exp(Var a) { return elementwise(Elementwise::exp, a); }
inline Var sigmoid(Var a) { return elementwise(Elementwise::sigmoid, a); }
inline Var tanh(Var a) { return elementwise(Elementwise::tanh, a); }
inline Var neg(Var a) { return elementwise(Elementwise::neg, a); }

Var scale(Var a, Real factor);
Var add_scalar(Var a, Real offset);

Var matmul(Var a, Var b);
Var transpose(Var a);

/// a[m×n] + row[1×n] on every row (explicit bias broadcast).
Var add_row(Var a, Var row);
/// a[m×n] ⊙ row[1×n] on every row.
Var mul_row(Var a, Var row);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);

/// Sum of all elements (1×1).
Var sum(Var a);
/// Per-row sums (m×1).
Var row_sums(Var a);
/// Σ a² (1×1).
Var sum_squares(Var a);
/// row[1×n] → n×n diagonal matrix.
Var diag_embed(Var row);

}  // namespace moglow::ad
