#include "animgan/error.hpp"
#include "animgan/ndl/gradcheck.hpp"
#include "animgan/ndl/layers.hpp"
#include "animgan/ndl/optim.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace animgan;
using namespace animgan::ndl;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Keeps entries at least `gap` away from zero so kinks at the origin are not straddled.
Matrix away_from_zero(Matrix m, double gap = 0.05) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double& v = m.data()[i];
    if (std::abs(v) < gap) v = v < 0 ? -gap : gap;
  }
  return m;
}

void expect_gradients(const LossBuilder& loss, std::vector<Parameter*> params) {
  const auto report = gradient_check(loss, params, 1e-6);
  EXPECT_LT(report.max_relative_error, 1e-6)
      << report.worst_parameter << "[" << report.worst_index << "] analytic " << report.analytic
      << " numeric " << report.numeric;
}

std::shared_ptr<const SparseMatrix> path_adjacency() {
  // D^-1/2 (A + I) D^-1/2 on the path 0 - 1 - 2.
  const double d0 = 2, d1 = 3;
  std::vector<Eigen::Triplet<double>> t{
      {0, 0, 1 / d0},
      {0, 1, 1 / std::sqrt(d0 * d1)},
      {1, 0, 1 / std::sqrt(d0 * d1)},
      {1, 1, 1 / d1},
      {1, 2, 1 / std::sqrt(d0 * d1)},
      {2, 1, 1 / std::sqrt(d0 * d1)},
      {2, 2, 1 / d0}};
  auto m = std::make_shared<SparseMatrix>(3, 3);
  m->setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

TEST(Tape, ElementwiseOpGradients) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter a("a", away_from_zero(random_matrix(rng, 3, 4)));
    Parameter b("b", away_from_zero(random_matrix(rng, 3, 4)));
    Parameter row("row", random_matrix(rng, 1, 4));
    const Matrix mask = random_matrix(rng, 3, 4);
    auto loss = [&](Tape& t) {
      Var x = t.parameter(a);
      Var y = t.parameter(b);
      Var terms[] = {
          sum(mul(x, y)),
          sum(sigmoid(sub(x, y))),
          mean(tanh(add(x, y))),
          sum(leaky_relu(x)),
          sum(abs(y)),
          sum(log(add_scalar(square(x), 0.5))),
          sum(clamp(scale(x, 0.5), -0.9, 0.9)),
          sum(add_row(x, t.parameter(row))),
          sum(mask_mul(y, mask)),
      };
      Var total = terms[0];
      for (std::size_t i = 1; i < std::size(terms); ++i) total = total + terms[i];
      return total;
    };
    expect_gradients(loss, {&a, &b, &row});
  }
}

TEST(Tape, StructuralOpGradients) {
  Rng rng(2);
  Parameter a("a", random_matrix(rng, 4, 3));
  Parameter b("b", random_matrix(rng, 3, 5));
  Parameter c("c", random_matrix(rng, 2, 3));
  auto adjacency = path_adjacency();
  const Matrix weights = random_matrix(rng, 5, 6);
  auto loss = [&](Tape& t) {
    Var x = t.parameter(a);
    Var prod = matmul(x, t.parameter(b));                                 // 4 x 5
    Var rows = slice_rows(prod, 1, 3);                                    // 3 x 5
    Var smoothed = sparse_matmul(adjacency, rows);                        // 3 x 5
    const Var parts[] = {slice_cols(x, 0, 3), t.parameter(c)};
    Var stacked = concat_rows(parts);                                     // 6 x 3
    const Var side[] = {smoothed, reshape(stacked, 3, 6)};
    Var wide = concat_cols(side);                                         // 3 x 11
    return sum(square(matmul(slice_cols(wide, 0, 5), t.constant(weights)))) +
           mean(square(slice_cols(wide, 5, 6)));
  };
  expect_gradients(loss, {&a, &b, &c});
}

TEST(Tape, ReshapeIsRowMajor) {
  Tape t;
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Matrix r = reshape(t.constant(m), 3, 2).value();
  Matrix expected(3, 2);
  expected << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(r, expected);
}

TEST(Tape, GradientsAccumulateAcrossUses) {
  Parameter p("p", Matrix::Constant(1, 1, 3.0));
  Tape t;
  Var x = t.parameter(p);
  t.backward(sum(mul(x, x)) + scale(x, 2.0));
  EXPECT_DOUBLE_EQ(p.grad(0, 0), 8.0);
}

TEST(Tape, DropoutIsInvertedAndDeterministic) {
  Tape t;
  const Matrix ones = Matrix::Ones(50, 40);
  Rng r1(5), r2(5);
  const Matrix a = dropout(t.constant(ones), 0.5, r1, true).value();
  const Matrix b = dropout(t.constant(ones), 0.5, r2, true).value();
  EXPECT_EQ(a, b);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a.data()[i] == 0.0 || a.data()[i] == 2.0);
  }
  EXPECT_NEAR(a.mean(), 1.0, 0.1);
  Rng r3(5);
  EXPECT_EQ(dropout(t.constant(ones), 0.5, r3, false).value(), ones);
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
  Lstm cell("z", 3, 4);
  Rng rng(3);
  const Matrix h = lstm_forward(cell, random_matrix(rng, 5, 3));
  EXPECT_EQ(h, Matrix::Zero(5, 4));
}

TEST(Lstm, SingleStepMatchesHandEvaluation) {
  Lstm cell("one", 1, 1);
  oracle::ScalarLstm ref;
  ref.w = {0.3, -0.2, 0.7, 0.5};
  ref.u = {0.1, 0.4, -0.6, 0.2};
  ref.b = {0.05, 1.0, -0.1, 0.0};
  for (int g = 0; g < 4; ++g) {
    cell.input_weight.value(0, g) = ref.w[static_cast<std::size_t>(g)];
    cell.recurrent_weight.value(0, g) = ref.u[static_cast<std::size_t>(g)];
    cell.bias.value(0, g) = ref.b[static_cast<std::size_t>(g)];
  }
  Matrix x(3, 1);
  x << 0.8, -0.4, 1.5;
  const Matrix h = lstm_forward(cell, x);
  double hs = 0, cs = 0;
  for (int t = 0; t < 3; ++t) {
    std::tie(hs, cs) = ref.step(x(t, 0), hs, cs);
    EXPECT_NEAR(h(t, 0), hs, 1e-15);
  }
  Tape tape;
  EXPECT_NEAR((cell.forward(tape, tape.constant(x)).value() - h).norm(), 0.0, 1e-15);
}

TEST(Lstm, ConstantInputWithoutRecurrence) {
  Rng rng(4);
  Lstm cell("c", 2, 3);
  cell.init_xavier(rng);
  cell.recurrent_weight.value.setZero();
  // Forget gate closed so the cell state does not carry over either.
  cell.bias.value.middleCols(3, 3).setConstant(-1e3);
  Matrix x(3, 2);
  x.rowwise() = Eigen::RowVector2d(0.4, -0.7);
  const Matrix h = lstm_forward(cell, x);
  EXPECT_EQ(h.row(0), h.row(1));
  EXPECT_EQ(h.row(1), h.row(2));
}

TEST(BiLstm, PalindromeSymmetry) {
  Rng rng(5);
  BiLstm bi("b", 2, 3);
  bi.init_xavier(rng);
  bi.backward_cell.input_weight.value = bi.forward_cell.input_weight.value;
  bi.backward_cell.recurrent_weight.value = bi.forward_cell.recurrent_weight.value;
  bi.backward_cell.bias.value = bi.forward_cell.bias.value;
  Matrix x(5, 2);
  x << 1, 2, -1, 0.5, 0.3, 0.3, -1, 0.5, 1, 2;
  const Matrix out = bilstm_forward(bi, x);
  for (Eigen::Index t = 0; t < 5; ++t) {
    EXPECT_NEAR((out.row(t).head(3) - out.row(4 - t).tail(3)).norm(), 0.0, 1e-15);
  }
}

TEST(BiLstm, SingleFrameIsTwoIndependentSteps) {
  Rng rng(6);
  BiLstm bi("b", 2, 3);
  bi.init_xavier(rng);
  const Matrix x = random_matrix(rng, 1, 2);
  const Matrix out = bilstm_forward(bi, x);
  EXPECT_EQ(out.leftCols(3), lstm_forward(bi.forward_cell, x));
  EXPECT_EQ(out.rightCols(3), lstm_forward(bi.backward_cell, x));
  EXPECT_EQ(bilstm_forward(BiLstm("z", 2, 3), x), Matrix::Zero(1, 6));
}

TEST(Layers, RecurrentGradients) {
  Rng rng(7);
  BiLstm bi("bi", 3, 2);
  bi.init_xavier(rng);
  Dense head("head", 4, 1);
  head.init_xavier(rng);
  const Matrix x = random_matrix(rng, 4, 3);
  auto params = bi.parameters();
  append(params, head.parameters());
  auto loss = [&](Tape& t) { return sum(square(head.forward(t, bi.forward(t, t.constant(x))))); };
  expect_gradients(loss, params);
}

TEST(GraphConv, IdentityCases) {
  SparseMatrix eye(3, 3);
  eye.setIdentity();
  Rng rng(8);
  const Matrix f = random_matrix(rng, 3, 3);
  EXPECT_EQ(graph_conv(f, eye, Matrix::Identity(3, 3)), f);
  EXPECT_EQ(graph_conv(Matrix::Zero(3, 2), *path_adjacency(), random_matrix(rng, 2, 4)),
            Matrix::Zero(3, 4));
}

TEST(GraphConv, PathGraphSmoothing) {
  const Matrix out = graph_conv(Matrix::Ones(3, 1), *path_adjacency(), Matrix::Ones(1, 1));
  const double edge = 1 / std::sqrt(6.0);
  EXPECT_NEAR(out(0, 0), 0.5 + edge, 1e-15);
  EXPECT_NEAR(out(1, 0), 1.0 / 3.0 + 2 * edge, 1e-15);
  EXPECT_NEAR(out(2, 0), 0.5 + edge, 1e-15);
}

TEST(Optim, SgdSingleStep) {
  Parameter p("p", Matrix::Zero(1, 1));
  p.grad = Matrix::Ones(1, 1);
  auto state = make_sgd(0.01);
  Parameter* list[] = {&p};
  optimizer_step(state, list, 0);
  EXPECT_DOUBLE_EQ(p.value(0, 0), -0.01);
}

TEST(Optim, SgdDecaySchedule) {
  const auto state = make_sgd(0.01);
  EXPECT_EQ(learning_rate(state, 0), 0.01);
  EXPECT_EQ(learning_rate(state, 9), 0.01);
  EXPECT_EQ(learning_rate(state, 10), 0.009);
  EXPECT_EQ(learning_rate(state, 20), 0.0081);
  EXPECT_EQ(decimal_decay(0.01, 0.9, 3), 0.00729);
}

TEST(Optim, AdamFirstStepAndSequence) {
  Parameter p("p", Matrix::Zero(1, 1));
  auto state = make_constant_adam(0.1);
  Parameter* list[] = {&p};
  oracle::ScalarAdam ref{0.1, 0.9, 0.999, 1e-8};
  double expected = 0.0;
  const double grads[] = {1.0, -0.5, 2.0, 0.25, -3.0};
  for (double g : grads) {
    p.grad = Matrix::Constant(1, 1, g);
    optimizer_step(state, list);
    expected = ref.update(expected, g);
    EXPECT_NEAR(p.value(0, 0), expected, 1e-15);
  }
  Parameter q("q", Matrix::Zero(1, 1));
  q.grad = Matrix::Ones(1, 1);
  auto fresh = make_constant_adam(0.1);
  Parameter* one[] = {&q};
  optimizer_step(fresh, one);
  EXPECT_NEAR(q.value(0, 0), -0.1, 1e-8);
}

TEST(Optim, AdamLinearDecay) {
  const std::int64_t total = 500;
  auto state = make_adam(0.1, total);
  for (std::int64_t t = 0; t <= total; ++t) {
    state.step = t;
    const double expected = 0.1 * static_cast<double>(total - t) / static_cast<double>(total);
    ASSERT_NEAR(learning_rate(state, 0), expected, 1e-12);
  }
  state.step = total;
  EXPECT_EQ(learning_rate(state, 0), 0.0);
}

TEST(Optim, ZeroRateLeavesParameters) {
  Rng rng(9);
  Parameter p("p", random_matrix(rng, 3, 3));
  const Matrix before = p.value;
  p.grad = random_matrix(rng, 3, 3);
  auto sgd = make_constant_sgd(0.0);
  auto adam = make_constant_adam(0.0);
  Parameter* list[] = {&p};
  optimizer_step(sgd, list);
  optimizer_step(adam, list);
  EXPECT_EQ(p.value, before);
}

TEST(Optim, NonFiniteGradientRejected) {
  Parameter p("p", Matrix::Zero(2, 2));
  p.grad = Matrix::Zero(2, 2);
  p.grad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  auto state = make_constant_sgd(0.1);
  Parameter* list[] = {&p};
  try {
    optimizer_step(state, list);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
  EXPECT_EQ(p.value, Matrix::Zero(2, 2));
}

TEST(Optim, ClipGradNorm) {
  Parameter a("a", Matrix::Zero(1, 2));
  Parameter b("b", Matrix::Zero(1, 1));
  a.grad = (Matrix(1, 2) << 3, 0).finished();
  b.grad = (Matrix(1, 1) << 4).finished();
  Parameter* list[] = {&a, &b};
  EXPECT_DOUBLE_EQ(clip_grad_norm(list, 1.0), 5.0);
  EXPECT_NEAR(a.grad(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(b.grad(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(clip_grad_norm(list, 0.0), 1.0, 1e-15);
}

TEST(GradCheck, Quadratic) {
  Parameter p("p", Matrix::Constant(1, 1, 3.0));
  Parameter* list[] = {&p};
  const auto r = gradient_check([&](Tape& t) { return sum(square(t.parameter(p))); }, list);
  EXPECT_NEAR(r.analytic, 6.0, 1e-12);
  EXPECT_NEAR(r.numeric, 6.0, 1e-9);
  EXPECT_LT(r.max_relative_error, 1e-10);
  EXPECT_EQ(p.value(0, 0), 3.0);
}

TEST(GradCheck, ConstantLoss) {
  Parameter p("p", Matrix::Constant(2, 2, 1.5));
  Parameter* list[] = {&p};
  const auto r = gradient_check(
      [&](Tape& t) {
        t.parameter(p);
        return t.constant(Matrix::Constant(1, 1, 4.0));
      },
      list);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_EQ(r.numeric, 0.0);
  EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  Parameter p("p", Matrix::Constant(1, 3, 0.7));
  Parameter* list[] = {&p};
  // d/dp of sum(p^2) recorded with a wrong factor of 3.
  auto loss = [&](Tape& t) {
    Var x = t.parameter(p);
    return t.record(Matrix::Constant(1, 1, x.value().squaredNorm()), {x},
                    [x](Tape& tape, std::size_t self) {
                      tape.accumulate(x.id(), 3.0 * tape.grad(self)(0, 0) * x.value());
                    });
  };
  const double steps[] = {1e-5, 1e-7, 1e-3};
  EXPECT_GT(gradient_check(loss, list).max_relative_error, 0.3);
  EXPECT_GT(gradient_check_ladder(loss, list, steps, 1e-4).max_relative_error, 0.3);
}
