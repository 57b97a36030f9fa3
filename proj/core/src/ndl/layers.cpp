#include "animgan/ndl/layers.hpp"

#include "animgan/error.hpp"

#include <cmath>

namespace animgan::ndl {

namespace {

void xavier(Matrix& m, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = dist(rng);
    }
  }
}

}  // namespace

void append(ParameterList& to, const ParameterList& from) {
  to.insert(to.end(), from.begin(), from.end());
}

Dense::Dense(std::string name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", Matrix::Zero(in, out)), bias(name + ".bias", Matrix::Zero(1, out)) {}

void Dense::init_xavier(Rng& rng) {
  xavier(weight.value, in_width(), out_width(), rng);
  bias.value.setZero();
}

Var Dense::forward(Tape& tape, Var x) {
  require(x.cols() == in_width(), ErrorKind::Usage,
          weight.name + ": expected input width " + std::to_string(in_width()) + ", got " +
              std::to_string(x.cols()));
  return add_row(matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

ParameterList Dense::parameters() { return {&weight, &bias}; }

Lstm::Lstm(std::string name, Eigen::Index input_width, Eigen::Index hidden_width)
    : input_weight(name + ".input_weight", Matrix::Zero(input_width, 4 * hidden_width)),
      recurrent_weight(name + ".recurrent_weight", Matrix::Zero(hidden_width, 4 * hidden_width)),
      bias(name + ".bias", Matrix::Zero(1, 4 * hidden_width)) {}

void Lstm::init_xavier(Rng& rng) {
  const Eigen::Index h = hidden_width();
  xavier(input_weight.value, input_width(), h, rng);
  xavier(recurrent_weight.value, h, h, rng);
  bias.value.setZero();
  bias.value.middleCols(h, h).setOnes();  // forget gate
}

Var Lstm::forward(Tape& tape, Var x, bool reverse) {
  require(x.cols() == input_width(), ErrorKind::Usage,
          input_weight.name + ": expected input width " + std::to_string(input_width()) +
              ", got " + std::to_string(x.cols()));
  require(x.rows() >= 1, ErrorKind::Usage, "LSTM needs at least one time step");
  const Eigen::Index k = x.rows();
  const Eigen::Index h = hidden_width();
  // Input contributions for all steps in one product.
  Var projected = add_row(matmul(x, tape.parameter(input_weight)), tape.parameter(bias));
  Var recurrent = tape.parameter(recurrent_weight);

  std::vector<Var> hidden(static_cast<std::size_t>(k));
  Var h_prev;
  Var c_prev;
  bool first = true;
  for (Eigen::Index s = 0; s < k; ++s) {
    const Eigen::Index t = reverse ? k - 1 - s : s;
    Var gates = slice_rows(projected, t, 1);
    if (!first) {
      gates = add(gates, matmul(h_prev, recurrent));
    }
    Var i_gate = sigmoid(slice_cols(gates, 0, h));
    Var f_gate = sigmoid(slice_cols(gates, h, h));
    Var g_gate = tanh(slice_cols(gates, 2 * h, h));
    Var o_gate = sigmoid(slice_cols(gates, 3 * h, h));
    Var c = mul(i_gate, g_gate);
    if (!first) {
      c = add(c, mul(f_gate, c_prev));
    }
    Var hs = mul(o_gate, tanh(c));
    hidden[static_cast<std::size_t>(t)] = hs;
    h_prev = hs;
    c_prev = c;
    first = false;
  }
  return concat_rows(hidden);
}

ParameterList Lstm::parameters() { return {&input_weight, &recurrent_weight, &bias}; }

BiLstm::BiLstm(std::string name, Eigen::Index input_width, Eigen::Index hidden_width)
    : forward_cell(name + ".fwd", input_width, hidden_width),
      backward_cell(name + ".bwd", input_width, hidden_width) {}

void BiLstm::init_xavier(Rng& rng) {
  forward_cell.init_xavier(rng);
  backward_cell.init_xavier(rng);
}

Var BiLstm::forward(Tape& tape, Var x) {
  const std::array<Var, 2> halves = {forward_cell.forward(tape, x, false),
                                     backward_cell.forward(tape, x, true)};
  return concat_cols(halves);
}

ParameterList BiLstm::parameters() {
  ParameterList out = forward_cell.parameters();
  append(out, backward_cell.parameters());
  return out;
}

GraphConv::GraphConv(std::string name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", Matrix::Zero(in, out)), bias(name + ".bias", Matrix::Zero(1, out)) {}

void GraphConv::init_xavier(Rng& rng) {
  xavier(weight.value, weight.value.rows(), weight.value.cols(), rng);
  bias.value.setZero();
}

Var GraphConv::forward(Tape& tape, Var features, std::shared_ptr<const SparseMatrix> adjacency) {
  require(features.cols() == weight.value.rows(), ErrorKind::Usage,
          weight.name + ": channel mismatch");
  require(adjacency->rows() == features.rows(), ErrorKind::Usage,
          weight.name + ": adjacency does not match node count");
  Var mixed = sparse_matmul(std::move(adjacency), features);
  return add_row(matmul(mixed, tape.parameter(weight)), tape.parameter(bias));
}

ParameterList GraphConv::parameters() { return {&weight, &bias}; }

Matrix lstm_forward(const Lstm& lstm, const Matrix& inputs) {
  Tape tape;
  Lstm copy = lstm;
  return copy.forward(tape, tape.constant(inputs)).value();
}

Matrix bilstm_forward(const BiLstm& bilstm, const Matrix& inputs) {
  Tape tape;
  BiLstm copy = bilstm;
  return copy.forward(tape, tape.constant(inputs)).value();
}

Matrix graph_conv(const Matrix& features, const SparseMatrix& norm_adjacency,
                  const Matrix& weights) {
  require(features.rows() == norm_adjacency.cols() && norm_adjacency.rows() == norm_adjacency.cols(),
          ErrorKind::Usage, "graph_conv: adjacency does not match node count");
  require(features.cols() == weights.rows(), ErrorKind::Usage, "graph_conv: channel mismatch");
  return norm_adjacency * features * weights;
}

}  // namespace animgan::ndl
