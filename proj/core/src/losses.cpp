#include "animgan/losses.hpp"

#include "animgan/error.hpp"

#include <cmath>

namespace animgan {

using ndl::Matrix;
using ndl::Var;

void LossConfig::validate() const {
  require(lambda1 >= 0.0 && lambda1 <= 1.0, ErrorKind::Usage, "lambda1 must lie in [0, 1]");
  require(lambda2 >= 0.0 && lambda2 <= 1.0, ErrorKind::Usage, "lambda2 must lie in [0, 1]");
  require(epsilon > 0.0, ErrorKind::Usage, "epsilon must be positive");
  require(batch_size >= 1, ErrorKind::Usage, "mini-batch size must be at least 1");
  require(delta > 0.0 && delta < 0.5, ErrorKind::Usage, "score clamp must lie in (0, 0.5)");
}

namespace {

void check_main(const MainJointSet& main, std::size_t joints) {
  require(!main.empty(), ErrorKind::Usage, "main joint set is empty");
  for (std::size_t j : main) {
    require(j < joints, ErrorKind::Usage, "main joint index " + std::to_string(j) + " out of range");
  }
}

void check_pair(const std::vector<JointPositions>& a, const std::vector<JointPositions>& b) {
  require(a.size() == b.size(), ErrorKind::Usage,
          "sequence lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  require(!a.empty(), ErrorKind::Usage, "sequences are empty");
}

Vec3 velocity(const std::vector<JointPositions>& s, std::size_t t, std::size_t j, double fps) {
  return t == 0 ? Vec3::Zero() : Vec3((s[t][j] - s[t - 1][j]) * fps);
}

double clamp_score(double s, const LossConfig& config, ScoreDiagnostics* diagnostics) {
  if (!(s > 0.0 && s < 1.0) && diagnostics != nullptr) {
    ++diagnostics->out_of_range;
  }
  require(!std::isnan(s), ErrorKind::Numeric, "discriminator score is NaN");
  return std::clamp(s, config.delta, 1.0 - config.delta);
}

// Columns of the main joints' (x, y, z) triples.
Var select_main(Var positions, const MainJointSet& main) {
  require(positions.cols() % 3 == 0, ErrorKind::Usage, "position width is not a multiple of 3");
  check_main(main, static_cast<std::size_t>(positions.cols() / 3));
  std::vector<Var> parts;
  parts.reserve(main.size());
  for (std::size_t j : main) {
    parts.push_back(ndl::slice_cols(positions, static_cast<Eigen::Index>(3 * j), 3));
  }
  return parts.size() == 1 ? parts.front() : ndl::concat_cols(parts);
}

// Backward difference scaled by fps, zero first row.
Matrix velocity_operator(Eigen::Index k, double fps) {
  Matrix d = Matrix::Zero(k, k);
  for (Eigen::Index t = 1; t < k; ++t) {
    d(t, t) = fps;
    d(t, t - 1) = -fps;
  }
  return d;
}

// (k - 1) x k forward difference between consecutive rows.
Matrix step_operator(Eigen::Index k) {
  Matrix d = Matrix::Zero(k - 1, k);
  for (Eigen::Index t = 1; t < k; ++t) {
    d(t - 1, t) = 1.0;
    d(t - 1, t - 1) = -1.0;
  }
  return d;
}

}  // namespace

double phi(const std::vector<JointPositions>& a, const std::vector<JointPositions>& b,
           const MainJointSet& main, double fps) {
  check_pair(a, b);
  check_main(main, std::min(a.front().size(), b.front().size()));
  double total = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j : main) {
      total += (a[t][j] - b[t][j]).squaredNorm();
      total += (velocity(a, t, j, fps) - velocity(b, t, j, fps)).squaredNorm();
    }
  }
  return total / static_cast<double>(a.size() * main.size());
}

double smoothness(const std::vector<JointPositions>& sequence, const MainJointSet& main,
                  double fps) {
  require(!sequence.empty(), ErrorKind::Usage, "sequence is empty");
  check_main(main, sequence.front().size());
  if (sequence.size() < 2) {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    for (std::size_t j : main) {
      total += (sequence[t][j] - sequence[t - 1][j]).squaredNorm();
      total += (velocity(sequence, t, j, fps) - velocity(sequence, t - 1, j, fps)).squaredNorm();
    }
  }
  return total / static_cast<double>((sequence.size() - 1) * main.size());
}

double st_loss(const std::vector<JointPositions>& input,
               const std::vector<JointPositions>& generated, const MainJointSet& main,
               double fps, const LossConfig& config) {
  config.validate();
  const double cond = config.lambda1 * phi(input, generated, main, fps);
  const double smooth = config.lambda2 * smoothness(generated, main, fps);
  return cond + smooth + config.epsilon;
}

double generator_loss(std::span<const double> fake_scores, std::span<const double> st_values,
                      const LossConfig& config, ScoreDiagnostics* diagnostics) {
  require(st_values.empty() || st_values.size() == fake_scores.size(), ErrorKind::Usage,
          "one L_ST value per batch item is required");
  double total = 0.0;
  for (double s : fake_scores) {
    total += std::log(1.0 - clamp_score(s, config, diagnostics));
  }
  for (double v : st_values) {
    total += v;
  }
  return total;
}

double discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                          double real_label, const LossConfig& config,
                          ScoreDiagnostics* diagnostics) {
  double total = 0.0;
  for (double s : real_scores) {
    total += real_label * std::log(clamp_score(s, config, diagnostics));
  }
  for (double s : fake_scores) {
    total += std::log(1.0 - clamp_score(s, config, diagnostics));
  }
  return -total;
}

Var phi(Var a, Var b, const MainJointSet& main, double fps) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Usage,
          "phi: position matrices differ in shape");
  require(a.rows() >= 1, ErrorKind::Usage, "phi: sequences are empty");
  ndl::Tape& tape = *a.tape();
  Var diff = ndl::sub(select_main(a, main), select_main(b, main));
  Var vel = ndl::matmul(tape.constant(velocity_operator(a.rows(), fps)), diff);
  Var total = ndl::add(ndl::sum(ndl::square(diff)), ndl::sum(ndl::square(vel)));
  return ndl::scale(total, 1.0 / static_cast<double>(a.rows() * static_cast<Eigen::Index>(main.size())));
}

Var smoothness(Var sequence, const MainJointSet& main, double fps) {
  ndl::Tape& tape = *sequence.tape();
  const Eigen::Index k = sequence.rows();
  Var selected = select_main(sequence, main);
  if (k < 2) {
    return tape.constant(Matrix::Zero(1, 1));
  }
  Var step = tape.constant(step_operator(k));
  Var vel = ndl::matmul(tape.constant(velocity_operator(k, fps)), selected);
  Var dpos = ndl::matmul(step, selected);
  Var dvel = ndl::matmul(step, vel);
  Var total = ndl::add(ndl::sum(ndl::square(dpos)), ndl::sum(ndl::square(dvel)));
  return ndl::scale(total, 1.0 / static_cast<double>((k - 1) * static_cast<Eigen::Index>(main.size())));
}

Var st_terms(Var input, Var generated, const MainJointSet& main, double fps,
             const LossConfig& config) {
  config.validate();
  return ndl::add(ndl::scale(phi(input, generated, main, fps), config.lambda1),
                  ndl::scale(smoothness(generated, main, fps), config.lambda2));
}

Var generator_loss(Var fake_scores, Var st_values, const LossConfig& config) {
  require(st_values.rows() == fake_scores.rows() && st_values.cols() == 1, ErrorKind::Usage,
          "one L_ST value per batch item is required");
  return ndl::add(generator_loss(fake_scores, config), ndl::sum(st_values));
}

Var generator_loss(Var fake_scores, const LossConfig& config) {
  Var clamped = ndl::clamp(fake_scores, config.delta, 1.0 - config.delta);
  return ndl::sum(ndl::log(ndl::add_scalar(ndl::scale(clamped, -1.0), 1.0)));
}

Var discriminator_loss(Var real_scores, Var fake_scores, double real_label,
                       const LossConfig& config) {
  Var real = ndl::log(ndl::clamp(real_scores, config.delta, 1.0 - config.delta));
  Var fake = ndl::log(
      ndl::add_scalar(ndl::scale(ndl::clamp(fake_scores, config.delta, 1.0 - config.delta), -1.0),
                      1.0));
  return ndl::scale(ndl::add(ndl::scale(ndl::sum(real), real_label), ndl::sum(fake)), -1.0);
}

}  // namespace animgan
