#include "animgan/generator.hpp"

#include "animgan/diff_kinematics.hpp"
#include "animgan/error.hpp"

namespace animgan {

using ndl::Matrix;
using ndl::Tape;
using ndl::Var;

Matrix draw_noise(Eigen::Index frames, NoiseSharing sharing, Rng& rng) {
  require(frames >= 1, ErrorKind::Usage, "noise needs at least one frame");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix noise(frames, kNoiseWidth);
  const Eigen::Index draws = sharing == NoiseSharing::PerFrame ? frames : 1;
  for (Eigen::Index r = 0; r < draws; ++r) {
    for (Eigen::Index c = 0; c < kNoiseWidth; ++c) {
      noise(r, c) = gauss(rng);
    }
  }
  for (Eigen::Index r = draws; r < frames; ++r) {
    noise.row(r) = noise.row(0);
  }
  return noise;
}

GeneratorNet::GeneratorNet(Eigen::Index hidden, double dropout_rate)
    : input("generator.input", kGeneratorInputWidth, hidden),
      lstm("generator.lstm", hidden, hidden),
      bilstm("generator.bilstm", hidden, hidden),
      output("generator.output", 2 * hidden, kPoseWidth),
      dropout(dropout_rate) {
  require(hidden >= 1, ErrorKind::Usage, "generator hidden width must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Usage,
          "dropout rate must lie in [0, 1)");
}

ndl::ParameterList GeneratorNet::parameters() {
  ndl::ParameterList out;
  ndl::append(out, input.parameters());
  ndl::append(out, lstm.parameters());
  ndl::append(out, bilstm.parameters());
  ndl::append(out, output.parameters());
  return out;
}

GeneratorNet make_generator(std::uint64_t seed, Eigen::Index hidden, double dropout) {
  GeneratorNet net(hidden, dropout);
  Rng rng = make_rng(seed, "generator-init");
  net.input.init_xavier(rng);
  net.lstm.init_xavier(rng);
  net.bilstm.init_xavier(rng);
  net.output.init_xavier(rng);
  for (Eigen::Index j = 0; j < kPoseWidth; j += 4) {
    net.output.bias.value(0, j) = 1.0;
  }
  return net;
}

Var generator_raw(Tape& tape, GeneratorNet& net, Var condition, const Matrix& noise,
                  bool training, Rng& dropout_rng) {
  require(condition.rows() >= 1, ErrorKind::Usage, "generator needs at least one frame");
  require(condition.cols() == kEmbeddingWidth, ErrorKind::Usage,
          "condition rows must be 20-value pose embeddings");
  require(noise.rows() == condition.rows() && noise.cols() == kNoiseWidth, ErrorKind::Usage,
          "noise must be k x 30");
  require(condition.value().allFinite(), ErrorKind::Numeric, "condition has non-finite values");
  const std::array<Var, 2> parts{condition, tape.constant(noise)};
  Var x = ndl::concat_cols(parts);
  Var h = ndl::leaky_relu(net.input.forward(tape, x));
  h = net.lstm.forward(tape, h);
  h = net.bilstm.forward(tape, h);
  h = ndl::dropout(h, net.dropout, dropout_rng, training);
  return net.output.forward(tape, h);
}

Var generator_forward(Tape& tape, GeneratorNet& net, Var condition, const Matrix& noise,
                      bool training, Rng& dropout_rng) {
  return quat_normalize(generator_raw(tape, net, condition, noise, training, dropout_rng));
}

Matrix generate_rotations(const GeneratorNet& net, const Matrix& condition, const Matrix& noise,
                          bool training, Rng& dropout_rng) {
  // Forward passes only read parameters; the tape needs a mutable handle.
  auto& mutable_net = const_cast<GeneratorNet&>(net);
  Tape tape;
  return generator_forward(tape, mutable_net, tape.constant(condition), noise, training,
                           dropout_rng)
      .value();
}

MotionSequence sequence_from_rotations(const Matrix& rotations, double fps,
                                       SequenceSource source) {
  require(rotations.cols() == kPoseWidth, ErrorKind::Usage, "rotation rows must have 84 values");
  MotionSequence seq;
  seq.skeleton = canonical::skeleton();
  seq.fps = fps;
  seq.source = source;
  for (Eigen::Index t = 0; t < rotations.rows(); ++t) {
    seq.frames.push_back(pose_from_row(rotations.row(t)));
    seq.root_translation.push_back(Vec3::Zero());
  }
  return seq;
}

MotionSequence generate(const GeneratorNet& net, const Matrix& condition, const Matrix& noise,
                        bool training, Rng& dropout_rng, double fps) {
  return sequence_from_rotations(generate_rotations(net, condition, noise, training, dropout_rng),
                                 fps, SequenceSource::Generated);
}

}  // namespace animgan
