#pragma once

#include "animgan/ndl/tape.hpp"

#include <cstdint>

namespace animgan::ndl {

enum class OptimizerKind { Sgd, Adam };

enum class ScheduleKind {
  Constant,
  StepDecay,  // base * factor^floor(epoch / every)
  Linear,     // base * (total - step) / total, reaching 0 at step == total
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double factor = 0.9;
  std::int64_t every = 10;
  std::int64_t total_steps = 0;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  double base_lr = 0.01;
  Schedule schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// Plain SGD, rate decayed by `factor` every `every` epochs.
OptimizerState make_sgd(double base_lr, double factor = 0.9, std::int64_t every = 10);
/// Constant-rate SGD.
OptimizerState make_constant_sgd(double base_lr);
/// Adam with a rate decaying linearly to zero over total_steps.
OptimizerState make_adam(double base_lr, std::int64_t total_steps, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);
/// Adam with a constant rate.
OptimizerState make_constant_adam(double base_lr, double beta1 = 0.9, double beta2 = 0.999,
                                  double epsilon = 1e-8);

/// base * factor^n computed in decimal arithmetic where both operands have short
/// decimal forms, so 0.01 * 0.9^1 is exactly the double nearest to 0.009.
double decimal_decay(double base, double factor, std::int64_t n);

/// Rate used by the next update: step-decay rules key on epoch, linear decay on step count.
double learning_rate(const OptimizerState& state, std::int64_t epoch);

/// Applies one update from each parameter's accumulated gradient.
/// Throws a Numeric error, leaving parameters untouched, when any gradient is non-finite.
/// Rescales all gradients so their joint L2 norm is at most max_norm; returns the norm
/// before clipping. A non-positive max_norm leaves the gradients untouched.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

void optimizer_step(OptimizerState& state, std::span<Parameter* const> params,
                    std::int64_t epoch = 0);

}  // namespace animgan::ndl
