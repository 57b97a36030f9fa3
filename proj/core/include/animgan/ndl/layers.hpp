#pragma once

#include "animgan/ndl/ops.hpp"
#include "animgan/random.hpp"

namespace animgan::ndl {

/// Fully connected layer: x * W + b, with x holding one sample per row.
struct Dense {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  Dense() = default;
  Dense(std::string name, Eigen::Index in, Eigen::Index out);

  Eigen::Index in_width() const { return weight.value.rows(); }
  Eigen::Index out_width() const { return weight.value.cols(); }

  void init_xavier(Rng& rng);
  Var forward(Tape& tape, Var x);
  ParameterList parameters();
};

/// LSTM with gate blocks ordered (input, forget, cell, output) along the 4H axis.
/// Zero initial hidden and cell state.
struct Lstm {
  Parameter input_weight;      // d x 4H
  Parameter recurrent_weight;  // H x 4H
  Parameter bias;              // 1 x 4H

  Lstm() = default;
  Lstm(std::string name, Eigen::Index input_width, Eigen::Index hidden_width);

  Eigen::Index input_width() const { return input_weight.value.rows(); }
  Eigen::Index hidden_width() const { return recurrent_weight.value.rows(); }

  void init_xavier(Rng& rng);
  /// x is k x d (one time step per row); returns k x H. With reverse, the
  /// recurrence runs from the last row to the first and outputs stay row-aligned.
  Var forward(Tape& tape, Var x, bool reverse = false);
  ParameterList parameters();
};

/// Forward and backward LSTMs over the same input, concatenated per step: k x 2H.
struct BiLstm {
  Lstm forward_cell;
  Lstm backward_cell;

  BiLstm() = default;
  BiLstm(std::string name, Eigen::Index input_width, Eigen::Index hidden_width);

  void init_xavier(Rng& rng);
  Var forward(Tape& tape, Var x);
  ParameterList parameters();
};

/// Graph convolution: A_norm * F * W + b.
struct GraphConv {
  Parameter weight;  // C x C'
  Parameter bias;    // 1 x C'

  GraphConv() = default;
  GraphConv(std::string name, Eigen::Index in, Eigen::Index out);

  void init_xavier(Rng& rng);
  Var forward(Tape& tape, Var features, std::shared_ptr<const SparseMatrix> adjacency);
  ParameterList parameters();
};

// Tape-free evaluations.
Matrix lstm_forward(const Lstm& lstm, const Matrix& inputs);
Matrix bilstm_forward(const BiLstm& bilstm, const Matrix& inputs);
Matrix graph_conv(const Matrix& features, const SparseMatrix& norm_adjacency,
                  const Matrix& weights);

void append(ParameterList& to, const ParameterList& from);

}  // namespace animgan::ndl
