#include "animgan/ndl/optim.hpp"

#include "animgan/error.hpp"

#include <charconv>
#include <cmath>
#include <optional>

namespace animgan::ndl {

namespace {

struct Decimal {
  std::int64_t mantissa;
  int exponent;
};

// Shortest round-trip decimal form of v, as mantissa * 10^exponent.
std::optional<Decimal> to_decimal(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  if (ec != std::errc()) {
    return std::nullopt;
  }
  const std::string_view text(buf, static_cast<std::size_t>(end - buf));
  const auto e = text.find('e');
  std::string digits;
  int fraction_digits = 0;
  bool after_point = false;
  for (char c : text.substr(0, e)) {
    if (c == '.') {
      after_point = true;
    } else {
      digits.push_back(c);
      fraction_digits += after_point ? 1 : 0;
    }
  }
  int exponent = 0;
  std::from_chars(text.data() + e + 1 + (text[e + 1] == '+' ? 1 : 0), text.data() + text.size(),
                  exponent);
  std::int64_t mantissa = 0;
  const auto [p, err] = std::from_chars(digits.data(), digits.data() + digits.size(), mantissa);
  if (err != std::errc()) {
    return std::nullopt;
  }
  return Decimal{mantissa, exponent - fraction_digits};
}

constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53

}  // namespace

double decimal_decay(double base, double factor, std::int64_t n) {
  if (n == 0) {
    return base;
  }
  const auto b = to_decimal(base);
  const auto f = to_decimal(factor);
  if (b && f && n > 0 && n < 32) {
    double mantissa = static_cast<double>(b->mantissa);
    bool exact = std::abs(mantissa) < kExactIntegerLimit;
    for (std::int64_t i = 0; i < n && exact; ++i) {
      mantissa *= static_cast<double>(f->mantissa);
      exact = std::abs(mantissa) < kExactIntegerLimit;
    }
    const std::int64_t exponent = b->exponent + n * f->exponent;
    if (exact && exponent <= 0 && exponent >= -22) {
      return mantissa / std::pow(10.0, static_cast<double>(-exponent));
    }
    if (exact && exponent > 0 && exponent <= 22) {
      return mantissa * std::pow(10.0, static_cast<double>(exponent));
    }
  }
  return base * std::pow(factor, static_cast<double>(n));
}

OptimizerState make_sgd(double base_lr, double factor, std::int64_t every) {
  require(base_lr >= 0.0, ErrorKind::Usage, "learning rate must be non-negative");
  require(every > 0, ErrorKind::Usage, "decay interval must be positive");
  OptimizerState s;
  s.kind = OptimizerKind::Sgd;
  s.base_lr = base_lr;
  s.schedule = Schedule{ScheduleKind::StepDecay, factor, every, 0};
  return s;
}

OptimizerState make_constant_sgd(double base_lr) {
  require(base_lr >= 0.0, ErrorKind::Usage, "learning rate must be non-negative");
  OptimizerState s;
  s.kind = OptimizerKind::Sgd;
  s.base_lr = base_lr;
  return s;
}

OptimizerState make_adam(double base_lr, std::int64_t total_steps, double beta1, double beta2,
                         double epsilon) {
  require(base_lr >= 0.0, ErrorKind::Usage, "learning rate must be non-negative");
  require(total_steps > 0, ErrorKind::Usage, "linear decay needs a positive step count");
  OptimizerState s = make_constant_adam(base_lr, beta1, beta2, epsilon);
  s.schedule = Schedule{ScheduleKind::Linear, 0.0, 0, total_steps};
  return s;
}

OptimizerState make_constant_adam(double base_lr, double beta1, double beta2, double epsilon) {
  require(base_lr >= 0.0, ErrorKind::Usage, "learning rate must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::Usage,
          "Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, ErrorKind::Usage, "Adam epsilon must be positive");
  OptimizerState s;
  s.kind = OptimizerKind::Adam;
  s.base_lr = base_lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

double learning_rate(const OptimizerState& state, std::int64_t epoch) {
  switch (state.schedule.kind) {
    case ScheduleKind::Constant:
      return state.base_lr;
    case ScheduleKind::StepDecay:
      return decimal_decay(state.base_lr, state.schedule.factor,
                           std::max<std::int64_t>(epoch, 0) / state.schedule.every);
    case ScheduleKind::Linear: {
      const auto total = static_cast<double>(state.schedule.total_steps);
      const double remaining = std::max(0.0, total - static_cast<double>(state.step));
      return state.base_lr * remaining / total;
    }
  }
  return state.base_lr;
}

void optimizer_step(OptimizerState& state, std::span<Parameter* const> params, std::int64_t epoch) {
  for (const Parameter* p : params) {
    require(p->grad.rows() == p->value.rows() && p->grad.cols() == p->value.cols(),
            ErrorKind::Usage, p->name + ": gradient shape differs from value");
    require(p->grad.allFinite(), ErrorKind::Numeric, p->name + ": non-finite gradient");
  }
  const double lr = learning_rate(state, epoch);
  if (state.kind == OptimizerKind::Sgd) {
    for (Parameter* p : params) {
      p->value -= lr * p->grad;
    }
    ++state.step;
    return;
  }

  if (state.first_moment.size() != params.size()) {
    require(state.first_moment.empty(), ErrorKind::Usage,
            "optimizer state was built for a different parameter set");
    for (const Parameter* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  const double t = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    require(m.rows() == p.value.rows() && m.cols() == p.value.cols(), ErrorKind::Usage,
            p.name + ": moment shape differs from parameter");
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + state.epsilon);
  }
  ++state.step;
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double square = 0.0;
  for (const Parameter* p : params) {
    square += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(square);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Parameter* p : params) {
      p->grad *= factor;
    }
  }
  return norm;
}

}  // namespace animgan::ndl
