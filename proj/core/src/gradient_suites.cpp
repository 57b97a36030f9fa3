#include "animgan/gradient_suites.hpp"

#include "animgan/diff_kinematics.hpp"
#include "animgan/discriminator.hpp"
#include "animgan/error.hpp"
#include "animgan/generator.hpp"
#include "animgan/losses.hpp"
#include "animgan/pose_codec.hpp"
#include "animgan/random.hpp"

#include <json.hpp>

#include <random>

namespace animgan {

namespace {

using ndl::Matrix;
using ndl::Parameter;
using ndl::Tape;
using ndl::Var;

constexpr std::size_t kGeneratorFrames = kMinDiscriminatorFrames;
constexpr Eigen::Index kCheckHidden = 6;
const DiscriminatorShape kCheckShape{{6, 8, 12}, 8};

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = n(rng);
  }
  return m;
}

// Unit quaternion rows with w > 0, tilted away from identity by about `spread`.
Matrix random_rotations(Eigen::Index frames, Rng& rng, double spread = 0.4) {
  Matrix r = gaussian(frames, kPoseWidth, rng, spread);
  for (Eigen::Index j = 0; j < kPoseWidth; j += 4) {
    r.col(j).array() += 1.0;
  }
  return quat_normalize(r);
}

Matrix random_positions(Eigen::Index frames, Rng& rng) {
  return forward_kinematics(*canonical::skeleton(), random_rotations(frames, rng));
}

Matrix random_scores(Eigen::Index count, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Matrix m(count, 1);
  for (Eigen::Index i = 0; i < count; ++i) {
    m(i) = u(rng);
  }
  return m;
}

// Fresh initializations leave biases at zero, which puts many preactivations exactly on a
// LeakyReLU kink. Every coordinate of a random point is moved off its initial value.
void jitter(const ndl::ParameterList& params, Rng& rng, double sigma = 0.05) {
  for (Parameter* p : params) {
    p->value += gaussian(p->value.rows(), p->value.cols(), rng, sigma);
  }
}

MainJointSet all_joints() {
  MainJointSet joints(canonical::kJointCount);
  for (std::size_t j = 0; j < joints.size(); ++j) {
    joints[j] = j;
  }
  return joints;
}

const MainJointSet kCheckJoints{4, 7, 8, 15, 18};
constexpr double kSteps[] = {1e-5, 1e-6, 1e-7, 1e-8, 1e-4, 1e-3};

ndl::GradCheckReport check(const ndl::LossBuilder& loss, const ndl::ParameterList& params,
                           double tolerance) {
  return ndl::gradient_check_ladder(loss, params, kSteps, tolerance);
}

GradientSuiteResult finish(std::string suite, std::size_t point, ndl::GradCheckReport report,
                           double tolerance) {
  GradientSuiteResult r;
  r.suite = std::move(suite);
  r.point = point;
  r.passed = report.max_relative_error < tolerance;
  r.report = std::move(report);
  return r;
}

GradientSuiteResult autoencoder_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-autoencoder", point);
  AutoencoderModel model = make_autoencoder(rng());
  const Matrix poses = random_rotations(5, rng);
  const std::uint64_t dropout_seed = rng();
  auto params = model.parameters();
  jitter(params, rng);
  auto loss = [&](Tape& tape) {
    Rng drop(dropout_seed);
    return autoencoder_loss(tape, model, poses, true, drop).total;
  };
  return finish("autoencoder", point, check(loss, params, tol), tol);
}

GradientSuiteResult generator_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-generator", point);
  GeneratorNet net = make_generator(rng(), kCheckHidden);
  DiscriminatorNet disc = make_discriminator(rng());
  const auto frames = static_cast<Eigen::Index>(kGeneratorFrames);
  const Matrix condition = gaussian(frames, kEmbeddingWidth, rng, 0.5);
  const Matrix noise = draw_noise(frames, NoiseSharing::PerFrame, rng);
  const Matrix input = random_positions(frames, rng);
  const GraphPyramid pyramid = build_graph_pyramid(*canonical::skeleton(), kGeneratorFrames);
  const std::uint64_t dropout_seed = rng();
  const LossConfig config;
  const MainJointSet joints = all_joints();
  auto params = net.parameters();
  jitter(params, rng);
  jitter(disc.parameters(), rng);
  auto loss = [&](Tape& tape) {
    Rng drop(dropout_seed);
    Var cond = tape.constant(condition);
    Var rotations = generator_forward(tape, net, cond, noise, true, drop);
    Var positions = forward_kinematics(*canonical::skeleton(), rotations);
    Var score = discriminate(tape, disc, positions, cond, pyramid, false, drop);
    Var st = st_terms(tape.constant(input), positions, joints, kTargetFps, config);
    return generator_loss(score, st, config);
  };
  return finish("generator", point, check(loss, params, tol), tol);
}

GradientSuiteResult discriminator_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-discriminator", point);
  DiscriminatorNet disc = make_discriminator(rng(), 0.5, canonical::skeleton(), kCheckShape);
  const std::size_t frames = kMinDiscriminatorFrames;
  const auto k = static_cast<Eigen::Index>(frames);
  const Matrix real = random_positions(k, rng);
  const Matrix fake = random_positions(k, rng);
  const Matrix condition = gaussian(k, kEmbeddingWidth, rng, 0.5);
  const GraphPyramid pyramid = build_graph_pyramid(*canonical::skeleton(), frames);
  const std::uint64_t dropout_seed = rng();
  const LossConfig config;
  auto params = disc.parameters();
  jitter(params, rng);
  auto loss = [&](Tape& tape) {
    Rng drop(dropout_seed);
    Var cond = tape.constant(condition);
    Var r = discriminate(tape, disc, tape.constant(real), cond, pyramid, true, drop);
    Var f = discriminate(tape, disc, tape.constant(fake), cond, pyramid, true, drop);
    return discriminator_loss(r, f, 0.9, config);
  };
  return finish("discriminator", point, check(loss, params, tol), tol);
}

GradientSuiteResult phi_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-phi", point);
  Parameter a("a", random_positions(4, rng));
  Parameter b("b", random_positions(4, rng));
  std::vector<Parameter*> params{&a, &b};
  auto loss = [&](Tape& tape) {
    return phi(tape.parameter(a), tape.parameter(b), kCheckJoints, kTargetFps);
  };
  return finish("loss_phi", point, check(loss, params, tol), tol);
}

GradientSuiteResult smoothness_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-smoothness", point);
  Parameter s("sequence", random_positions(5, rng));
  std::vector<Parameter*> params{&s};
  auto loss = [&](Tape& tape) {
    return smoothness(tape.parameter(s), kCheckJoints, kTargetFps);
  };
  return finish("loss_smoothness", point, check(loss, params, tol), tol);
}

GradientSuiteResult st_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-st", point);
  const Matrix input = random_positions(4, rng);
  Parameter g("generated", random_positions(4, rng));
  std::vector<Parameter*> params{&g};
  LossConfig config;
  config.lambda1 = 0.3 + 0.4 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  config.lambda2 = 1.0 - config.lambda1;
  auto loss = [&](Tape& tape) {
    return st_terms(tape.constant(input), tape.parameter(g), kCheckJoints, kTargetFps, config);
  };
  return finish("loss_st", point, check(loss, params, tol), tol);
}

GradientSuiteResult generator_loss_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-generator-loss", point);
  Parameter scores("scores", random_scores(4, rng));
  Parameter st("st", gaussian(4, 1, rng).cwiseAbs());
  std::vector<Parameter*> params{&scores, &st};
  const LossConfig config;
  auto loss = [&](Tape& tape) {
    return generator_loss(tape.parameter(scores), tape.parameter(st), config);
  };
  return finish("loss_generator", point, check(loss, params, tol), tol);
}

GradientSuiteResult discriminator_loss_suite(std::uint64_t seed, std::size_t point, double tol) {
  Rng rng = make_rng(seed, "gradcheck-discriminator-loss", point);
  Parameter real("real", random_scores(4, rng));
  Parameter fake("fake", random_scores(4, rng));
  std::vector<Parameter*> params{&real, &fake};
  const LossConfig config;
  auto loss = [&](Tape& tape) {
    return discriminator_loss(tape.parameter(real), tape.parameter(fake), 0.9, config);
  };
  return finish("loss_discriminator", point, check(loss, params, tol), tol);
}

}  // namespace

const std::vector<std::string>& gradient_suite_names() {
  static const std::vector<std::string> names{
      "autoencoder", "generator",       "discriminator",  "loss_phi",
      "loss_smoothness", "loss_st", "loss_generator", "loss_discriminator"};
  return names;
}

GradientSuiteResult run_gradient_suite(const std::string& suite, std::uint64_t seed,
                                       std::size_t point, double tolerance) {
  if (suite == "autoencoder") return autoencoder_suite(seed, point, tolerance);
  if (suite == "generator") return generator_suite(seed, point, tolerance);
  if (suite == "discriminator") return discriminator_suite(seed, point, tolerance);
  if (suite == "loss_phi") return phi_suite(seed, point, tolerance);
  if (suite == "loss_smoothness") return smoothness_suite(seed, point, tolerance);
  if (suite == "loss_st") return st_suite(seed, point, tolerance);
  if (suite == "loss_generator") return generator_loss_suite(seed, point, tolerance);
  if (suite == "loss_discriminator") return discriminator_loss_suite(seed, point, tolerance);
  fail(ErrorKind::Usage, "unknown gradient suite '" + suite + "'");
}

std::vector<GradientSuiteResult> run_gradient_suites(std::uint64_t seed, std::size_t points,
                                                     double tolerance) {
  std::vector<GradientSuiteResult> out;
  for (const auto& name : gradient_suite_names()) {
    for (std::size_t p = 0; p < points; ++p) {
      out.push_back(run_gradient_suite(name, seed, p, tolerance));
    }
  }
  return out;
}

std::string gradient_result_to_json(const GradientSuiteResult& result) {
  nlohmann::ordered_json doc;
  doc["suite"] = result.suite;
  doc["point"] = result.point;
  doc["passed"] = result.passed;
  doc["max_relative_error"] = result.report.max_relative_error;
  doc["coordinates"] = result.report.coordinates;
  doc["worst_parameter"] = result.report.worst_parameter;
  doc["worst_index"] = result.report.worst_index;
  doc["analytic"] = result.report.analytic;
  doc["numeric"] = result.report.numeric;
  doc["step"] = result.report.step;
  doc["retried"] = result.report.retried;
  doc["first_step_error"] = result.report.first_step_error;
  return doc.dump();
}

}  // namespace animgan
