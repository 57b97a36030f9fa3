#include "animgan/ndl/ops.hpp"
#include "animgan/ndl/tape.hpp"

#include "animgan/error.hpp"

#include <cmath>
#include <cstdint>

namespace animgan::ndl {

Parameter::Parameter(std::string name_, Matrix value_)
    : name(std::move(name_)), value(std::move(value_)), grad(Matrix::Zero(value.rows(), value.cols())) {}

void Parameter::zero_grad() { grad.setZero(value.rows(), value.cols()); }

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    p->zero_grad();
  }
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
  require(rows() == 1 && cols() == 1, ErrorKind::Usage, "scalar() on a non 1x1 node");
  return value()(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    require(v.tape() == this, ErrorKind::Usage, "operand belongs to a different tape");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  Node node{std::move(value), {}, {}, nullptr, needs, false};
  if (needs) {
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.touched ? n.grad : empty_;
}

void Tape::backward(Var loss) {
  require(loss.tape() == this, ErrorKind::Usage, "loss belongs to a different tape");
  require(loss.rows() == 1 && loss.cols() == 1, ErrorKind::Usage, "backward() needs a 1x1 loss");
  for (Node& n : nodes_) {
    n.touched = false;
  }
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.touched) {
      continue;
    }
    if (n.backward) {
      n.backward(*this, i);
    }
    if (n.parameter != nullptr) {
      if (n.parameter->grad.rows() != n.value.rows() || n.parameter->grad.cols() != n.value.cols()) {
        n.parameter->zero_grad();
      }
      n.parameter->grad += n.grad;
    }
  }
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Usage,
          std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()));
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), ErrorKind::Usage,
          "matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
              std::to_string(b.rows()) + " differ");
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    if (tape.requires_grad(ia)) tape.accumulate(ia, g * tape.value(ib).transpose());
    if (tape.requires_grad(ib)) tape.accumulate(ib, tape.value(ia).transpose() * g);
  });
}

Var sparse_matmul(std::shared_ptr<const SparseMatrix> left, Var x) {
  require(left->cols() == x.rows(), ErrorKind::Usage, "sparse_matmul: shape mismatch");
  Tape& t = *x.tape();
  const std::size_t ix = x.id();
  Matrix out = (*left) * x.value();
  return t.record(std::move(out), {x}, [left, ix](Tape& tape, std::size_t self) {
    tape.accumulate(ix, Matrix(left->transpose() * tape.grad(self)));
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad(self));
    tape.accumulate(ib, tape.grad(self));
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad(self));
    tape.accumulate(ib, -tape.grad(self));
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b},
                          [ia, ib](Tape& tape, std::size_t self) {
                            const Matrix& g = tape.grad(self);
                            tape.accumulate(ia, g.cwiseProduct(tape.value(ib)));
                            tape.accumulate(ib, g.cwiseProduct(tape.value(ia)));
                          });
}

Var scale(Var a, double factor) {
  const std::size_t ia = a.id();
  return a.tape()->record(a.value() * factor, {a}, [ia, factor](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad(self) * factor);
  });
}

Var add_scalar(Var a, double shift) {
  const std::size_t ia = a.id();
  return a.tape()->record(a.value().array() + shift, {a}, [ia](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad(self));
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::Usage, "add_row: shape mismatch");
  const std::size_t ia = a.id();
  const std::size_t ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [ia, ir](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    tape.accumulate(ia, g);
    tape.accumulate(ir, g.colwise().sum());
  });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& tape, std::size_t self) {
    const auto y = tape.value(self).array();
    tape.accumulate(ia, (tape.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  const std::size_t ia = a.id();
  Matrix out = a.value().array().tanh().matrix();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& tape, std::size_t self) {
    const auto y = tape.value(self).array();
    tape.accumulate(ia, (tape.grad(self).array() * (1.0 - y.square())).matrix());
  });
}

Var leaky_relu(Var a, double slope) {
  const std::size_t ia = a.id();
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return a.tape()->record(std::move(out), {a}, [ia, slope](Tape& tape, std::size_t self) {
    const Matrix d = tape.value(ia).unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
    tape.accumulate(ia, tape.grad(self).cwiseProduct(d));
  });
}

Var abs(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record(a.value().cwiseAbs(), {a}, [ia](Tape& tape, std::size_t self) {
    const Matrix sign = tape.value(ia).unaryExpr(
        [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    tape.accumulate(ia, tape.grad(self).cwiseProduct(sign));
  });
}

Var log(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record(a.value().array().log().matrix(), {a},
                          [ia](Tape& tape, std::size_t self) {
                            tape.accumulate(ia, tape.grad(self).cwiseQuotient(tape.value(ia)));
                          });
}

Var square(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record(a.value().array().square().matrix(), {a},
                          [ia](Tape& tape, std::size_t self) {
                            tape.accumulate(ia, 2.0 * tape.grad(self).cwiseProduct(tape.value(ia)));
                          });
}

Var clamp(Var a, double lo, double hi) {
  const std::size_t ia = a.id();
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape()->record(std::move(out), {a}, [ia, lo, hi](Tape& tape, std::size_t self) {
    const Matrix pass =
        tape.value(ia).unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
    tape.accumulate(ia, tape.grad(self).cwiseProduct(pass));
  });
}

Var sum(Var a) {
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {a},
                          [ia, r, c](Tape& tape, std::size_t self) {
                            tape.accumulate(ia, Matrix::Constant(r, c, tape.grad(self)(0, 0)));
                          });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  require(n > 0, ErrorKind::Usage, "mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.rows(), ErrorKind::Usage,
          "slice_rows out of range");
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape()->record(a.value().middleRows(begin, count), {a},
                          [ia, begin, count, r, c](Tape& tape, std::size_t self) {
                            Matrix g = Matrix::Zero(r, c);
                            g.middleRows(begin, count) = tape.grad(self);
                            tape.accumulate(ia, g);
                          });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.cols(), ErrorKind::Usage,
          "slice_cols out of range");
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape()->record(a.value().middleCols(begin, count), {a},
                          [ia, begin, count, r, c](Tape& tape, std::size_t self) {
                            Matrix g = Matrix::Zero(r, c);
                            g.middleCols(begin, count) = tape.grad(self);
                            tape.accumulate(ia, g);
                          });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::Usage, "concat_rows of nothing");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, ErrorKind::Usage, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> pieces;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    pieces.emplace_back(p.id(), at);
    at += p.rows();
  }
  return parts[0].tape()->record(std::move(out), parts, [pieces](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    for (const auto& [id, offset] : pieces) {
      if (tape.requires_grad(id)) {
        tape.accumulate(id, g.middleRows(offset, tape.value(id).rows()));
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::Usage, "concat_cols of nothing");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, ErrorKind::Usage, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> pieces;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    pieces.emplace_back(p.id(), at);
    at += p.cols();
  }
  return parts[0].tape()->record(std::move(out), parts, [pieces](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    for (const auto& [id, offset] : pieces) {
      if (tape.requires_grad(id)) {
        tape.accumulate(id, g.middleCols(offset, tape.value(id).cols()));
      }
    }
  });
}

namespace {

Matrix row_major_reshape(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  const Eigen::Index src_cols = m.cols();
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    out(k / cols, k % cols) = m(k / src_cols, k % src_cols);
  }
  return out;
}

}  // namespace

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  require(rows * cols == a.value().size(), ErrorKind::Usage, "reshape changes element count");
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape()->record(row_major_reshape(a.value(), rows, cols), {a},
                          [ia, r, c](Tape& tape, std::size_t self) {
                            tape.accumulate(ia, row_major_reshape(tape.grad(self), r, c));
                          });
}

Var mask_mul(Var a, Matrix mask) {
  require(mask.rows() == a.rows() && mask.cols() == a.cols(), ErrorKind::Usage,
          "mask_mul: shape mismatch");
  const std::size_t ia = a.id();
  Matrix out = a.value().cwiseProduct(mask);
  return a.tape()->record(std::move(out), {a},
                          [ia, mask = std::move(mask)](Tape& tape, std::size_t self) {
                            tape.accumulate(ia, tape.grad(self).cwiseProduct(mask));
                          });
}

Var dropout(Var a, double rate, std::mt19937_64& rng, bool training) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::Usage, "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) {
    return a;
  }
  const double keep = 1.0 - rate;
  // A raw 64-bit draw below keep * 2^64 keeps the unit.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(keep, 64));
  const double kept = 1.0 / keep;
  Matrix mask(a.rows(), a.cols());
  double* m = mask.data();
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    m[i] = rng() < threshold ? kept : 0.0;
  }
  return mask_mul(a, std::move(mask));
}

}  // namespace animgan::ndl
