#pragma once

#include "animgan/motion.hpp"
#include "animgan/ndl/layers.hpp"
#include "animgan/pose_codec.hpp"

namespace animgan {

inline constexpr Eigen::Index kNoiseWidth = 30;
inline constexpr Eigen::Index kGeneratorInputWidth = kEmbeddingWidth + kNoiseWidth;

enum class NoiseSharing { PerSequence, PerFrame };

/// Standard Gaussian noise, k x 30. PerSequence repeats one draw on every row.
ndl::Matrix draw_noise(Eigen::Index frames, NoiseSharing sharing, Rng& rng);

/// Per-frame [embedding | noise] -> Dense(50, H) + LeakyReLU -> LSTM(H) -> BiLSTM(H)
/// -> dropout -> Dense(2H, 84) -> per-joint quaternion normalization.
struct GeneratorNet {
  ndl::Dense input;
  ndl::Lstm lstm;
  ndl::BiLstm bilstm;
  ndl::Dense output;
  double dropout = 0.5;

  GeneratorNet() : GeneratorNet(64) {}
  explicit GeneratorNet(Eigen::Index hidden, double dropout_rate = 0.5);

  Eigen::Index hidden_width() const { return lstm.hidden_width(); }
  ndl::ParameterList parameters();
};

/// Xavier-initialized network; output biases start at the identity quaternion.
GeneratorNet make_generator(std::uint64_t seed, Eigen::Index hidden = 64, double dropout = 0.5);

/// Raw k x 84 outputs before normalization.
ndl::Var generator_raw(ndl::Tape& tape, GeneratorNet& net, ndl::Var condition,
                       const ndl::Matrix& noise, bool training, Rng& dropout_rng);
/// Normalized k x 84 rotations (unit quaternions, w >= 0).
ndl::Var generator_forward(ndl::Tape& tape, GeneratorNet& net, ndl::Var condition,
                           const ndl::Matrix& noise, bool training, Rng& dropout_rng);

/// Rotation rows for a condition sequence (k x 20), no gradient bookkeeping kept.
ndl::Matrix generate_rotations(const GeneratorNet& net, const ndl::Matrix& condition,
                               const ndl::Matrix& noise, bool training, Rng& dropout_rng);

/// One output frame per condition frame on the canonical rig, source = generated.
MotionSequence generate(const GeneratorNet& net, const ndl::Matrix& condition,
                        const ndl::Matrix& noise, bool training, Rng& dropout_rng,
                        double fps = kTargetFps);

/// Rotations matrix (k x 84) as a canonical-rig sequence.
MotionSequence sequence_from_rotations(const ndl::Matrix& rotations, double fps,
                                       SequenceSource source);

}  // namespace animgan
