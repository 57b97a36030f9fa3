#include "animgan/ndl/gradcheck.hpp"

#include "animgan/error.hpp"

#include <cmath>

namespace animgan::ndl {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  const double v = loss(tape).scalar();
  require(std::isfinite(v), ErrorKind::Numeric, "gradient check: non-finite loss");
  return v;
}

void analytic_gradients(const LossBuilder& loss, std::span<Parameter* const> params) {
  zero_grads(params);
  Tape tape;
  Var l = loss(tape);
  require(std::isfinite(l.scalar()), ErrorKind::Numeric, "gradient check: non-finite loss");
  tape.backward(l);
}

double central_difference(const LossBuilder& loss, double& coord, double h) {
  const double saved = coord;
  coord = saved + h;
  const double plus = evaluate(loss);
  coord = saved - h;
  const double minus = evaluate(loss);
  coord = saved;
  return (plus - minus) / (2.0 * h);
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

void record(GradCheckReport& report, const Parameter& p, Eigen::Index k, double err,
            double analytic, double numeric, double h) {
  ++report.coordinates;
  if (err > report.max_relative_error || report.worst_index < 0) {
    report.max_relative_error = err;
    report.worst_parameter = p.name;
    report.worst_index = k;
    report.analytic = analytic;
    report.numeric = numeric;
    report.step = h;
  }
}

}  // namespace

GradCheckReport gradient_check(const LossBuilder& loss, std::span<Parameter* const> params,
                               double h) {
  require(h > 0.0, ErrorKind::Usage, "gradient check step must be positive");
  analytic_gradients(loss, params);
  GradCheckReport report;
  for (Parameter* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const double numeric = central_difference(loss, p->value.data()[k], h);
      const double analytic = p->grad.data()[k];
      record(report, *p, k, relative_error(analytic, numeric), analytic, numeric, h);
    }
  }
  return report;
}

GradCheckReport gradient_check_ladder(const LossBuilder& loss, std::span<Parameter* const> params,
                                      std::span<const double> steps, double tolerance) {
  require(!steps.empty(), ErrorKind::Usage, "gradient check needs at least one step");
  for (double h : steps) {
    require(h > 0.0, ErrorKind::Usage, "gradient check step must be positive");
  }
  analytic_gradients(loss, params);
  GradCheckReport report;
  for (Parameter* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const double analytic = p->grad.data()[k];
      double h = steps[0];
      double numeric = central_difference(loss, p->value.data()[k], h);
      double err = relative_error(analytic, numeric);
      report.first_step_error = std::max(report.first_step_error, err);
      if (err >= tolerance) {
        ++report.retried;
        for (std::size_t s = 1; s < steps.size() && err >= tolerance; ++s) {
          const double n = central_difference(loss, p->value.data()[k], steps[s]);
          const double e = relative_error(analytic, n);
          if (e < err) {
            err = e;
            numeric = n;
            h = steps[s];
          }
        }
      }
      record(report, *p, k, err, analytic, numeric, h);
    }
  }
  return report;
}

}  // namespace animgan::ndl
