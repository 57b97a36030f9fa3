#pragma once

#include "animgan/ndl/tape.hpp"

#include <functional>
#include <string>

namespace animgan::ndl {

/// Builds a scalar loss on the given tape, reading the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
  double step = 0.0;              // step that produced the worst coordinate's numeric value
  std::size_t retried = 0;        // coordinates that needed a second step (ladder only)
  double first_step_error = 0.0;  // worst error using only the first step (ladder only)
};

/// Central differences (f(p + h) - f(p - h)) / 2h against the reverse-mode gradient,
/// coordinate by coordinate. Relative error uses max(|a|, |b|, 1e-8) as denominator.
/// Parameter values are restored afterwards; their grads hold the analytic gradient.
GradCheckReport gradient_check(const LossBuilder& loss, std::span<Parameter* const> params,
                               double h = 1e-5);

/// Same comparison, but a coordinate whose error at steps[0] reaches `tolerance` is
/// re-measured at the remaining steps and keeps its smallest error. A step that straddles
/// a kink (LeakyReLU, clamp) or drowns a tiny gradient in rounding is thereby replaced,
/// while a wrong analytic gradient disagrees at every step.
GradCheckReport gradient_check_ladder(const LossBuilder& loss, std::span<Parameter* const> params,
                                      std::span<const double> steps, double tolerance);

}  // namespace animgan::ndl
