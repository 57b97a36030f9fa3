#pragma once

#include "animgan/ndl/tape.hpp"

#include <memory>
#include <random>

namespace animgan::ndl {

inline constexpr double kLeakySlope = 0.01;

Var matmul(Var a, Var b);
/// Constant sparse left factor, e.g. a normalized adjacency or a pooling operator.
Var sparse_matmul(std::shared_ptr<const SparseMatrix> left, Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var add_scalar(Var a, double shift);
/// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope = kLeakySlope);
Var abs(Var a);
Var log(Var a);
Var square(Var a);
/// Values outside [lo, hi] are clamped and pass no gradient.
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Row-major reinterpretation: element order is row by row.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Elementwise product with a constant mask.
Var mask_mul(Var a, Matrix mask);
/// Inverted dropout: keeps each entry with probability 1 - rate and rescales by 1 / (1 - rate).
/// Identity when training is false.
Var dropout(Var a, double rate, std::mt19937_64& rng, bool training);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace animgan::ndl
