#pragma once

#include "animgan/ndl/ops.hpp"
#include "animgan/skeleton.hpp"

#include <span>

namespace animgan {

struct LossConfig {
  double lambda1 = 0.5;   // conditioning weight
  double lambda2 = 0.5;   // smoothness weight
  double epsilon = 1e-8;  // keeps logged L_ST strictly positive
  std::size_t batch_size = 16;
  double delta = 1e-6;    // score clamp

  void validate() const;
};

/// Mean over frames and main joints of squared position plus squared velocity
/// differences. Velocities are (p(t) - p(t-1)) * fps, zero on the first frame.
double phi(const std::vector<JointPositions>& a, const std::vector<JointPositions>& b,
           const MainJointSet& main, double fps);

/// Mean over consecutive frame pairs of the single-frame phi between frame t-1 and t.
/// Zero for one-frame sequences.
double smoothness(const std::vector<JointPositions>& sequence, const MainJointSet& main,
                  double fps);

/// lambda1 * phi(input, generated) + lambda2 * smoothness(generated) + epsilon.
double st_loss(const std::vector<JointPositions>& input,
               const std::vector<JointPositions>& generated, const MainJointSet& main,
               double fps, const LossConfig& config);

/// Count of scores that fell outside the open interval (0, 1) before clamping.
struct ScoreDiagnostics {
  std::size_t out_of_range = 0;
};

/// sum_i log(1 - D(fake_i)) + sum_i st_values_i.
double generator_loss(std::span<const double> fake_scores, std::span<const double> st_values,
                      const LossConfig& config, ScoreDiagnostics* diagnostics = nullptr);

/// -sum_i [real_label * log D(real_i) + log(1 - D(fake_i))].
double discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                          double real_label, const LossConfig& config,
                          ScoreDiagnostics* diagnostics = nullptr);

// Differentiable forms. Positions are k x 3J matrices (x, y, z per joint, one frame per row).
ndl::Var phi(ndl::Var a, ndl::Var b, const MainJointSet& main, double fps);
ndl::Var smoothness(ndl::Var sequence, const MainJointSet& main, double fps);
/// lambda1 * phi + lambda2 * smoothness, without epsilon.
ndl::Var st_terms(ndl::Var input, ndl::Var generated, const MainJointSet& main, double fps,
                  const LossConfig& config);
/// scores and st_values are column vectors (m x 1).
ndl::Var generator_loss(ndl::Var fake_scores, ndl::Var st_values, const LossConfig& config);
ndl::Var generator_loss(ndl::Var fake_scores, const LossConfig& config);
ndl::Var discriminator_loss(ndl::Var real_scores, ndl::Var fake_scores, double real_label,
                            const LossConfig& config);

}  // namespace animgan
