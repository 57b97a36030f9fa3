#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace animgan::ndl {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Trainable tensor (stored as a matrix; biases are 1 x n) with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name_, Matrix value_);

  void zero_grad();
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(std::span<Parameter* const> params);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode operation tape over dense matrices.
///
/// Nodes are appended in evaluation order, so a reverse sweep over node ids is a
/// valid topological order. Gradients reach Parameters on backward().
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf whose gradient is retained after backward().
  Var input(Matrix value);
  Var parameter(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates; loss must be 1 x 1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Op-implementation interface.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) {
      return;
    }
    if (!n.touched) {
      n.grad = g;
      n.touched = true;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* parameter = nullptr;
    bool requires_grad = false;
    bool touched = false;
  };

  std::vector<Node> nodes_;
  Matrix empty_;
};

}  // namespace animgan::ndl
