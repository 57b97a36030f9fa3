#include "animgan/error.hpp"
#include "animgan/pose_codec.hpp"
#include "animgan/stnbnn.hpp"
#include "animgan/toy_corpus.hpp"
#include "generators.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace animgan;

namespace {

std::vector<LabeledSequence> labeled(const std::vector<MotionSequence>& seqs) {
  std::vector<LabeledSequence> out;
  for (const auto& s : seqs) out.push_back({&s, *s.label});
  return out;
}

double mass(const Eigen::VectorXd& v, std::size_t first, std::size_t last) {
  return v.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(last - first + 1)).sum();
}

const ClassWeights& class_named(const StnbnnModel& m, const std::string& label) {
  for (const auto& c : m.classes)
    if (c.label == label) return c;
  throw std::runtime_error("no class " + label);
}

}  // namespace

TEST(StageDescriptors, CountsAndShapes) {
  const auto corpus = make_toy_corpus(1, 1, 30, 1);
  const auto d = extract_stage_descriptors(corpus[0], 10);
  EXPECT_EQ(d.stages, 10u);
  EXPECT_EQ(d.points_per_stage, 3u);
  EXPECT_EQ(d.rows.rows(), 210);
  EXPECT_EQ(d.rows.cols(), 9);
}

TEST(StageDescriptors, StaticSequenceRepeatsPerJoint) {
  MotionSequence m = make_toy_corpus(1, 1, 30, 2)[0];
  for (auto& f : m.frames) f = m.frames[0];
  const auto d = extract_stage_descriptors(m, 10);
  for (std::size_t t = 1; t < 10; ++t)
    for (std::size_t j = 0; j < 21; ++j) ASSERT_EQ(d.at(t, j), d.at(0, j));
}

TEST(StageDescriptors, TooFewFrames) {
  const auto m = make_toy_corpus(1, 1, 9, 3)[0];
  EXPECT_THROW(extract_stage_descriptors(m, 10), Error);
}

TEST(Stnbnn, LeftArmOnlyDifference) {
  // Class "still" replays the waving clips with the left arm frozen at its first frame.
  auto wave = make_toy_corpus(1, 12, 30, 4);
  std::vector<MotionSequence> corpus = wave;
  for (auto m : wave) {
    for (auto& f : m.frames)
      for (std::size_t j : {canonical::LeftArm, canonical::LeftForeArm, canonical::LeftHand})
        f.rotations[j] = m.frames[0].rotations[j];
    m.label = "still";
    corpus.push_back(m);
  }
  const auto model = train_stnbnn(labeled(corpus), StnbnnConfig{});
  for (const auto& c : model.classes) {
    const double arm = c.spatial[canonical::LeftArm] + c.spatial[canonical::LeftForeArm] +
                       c.spatial[canonical::LeftHand];
    EXPECT_GT(arm, 0.5) << c.label;
    EXPECT_NEAR(c.spatial.sum(), 1.0, 1e-12);
    EXPECT_NEAR(c.temporal.sum(), 1.0, 1e-12);
  }
}

TEST(Stnbnn, MovingLimbGetsTheMass) {
  const auto corpus = make_toy_corpus(2, 20, 30, 5);
  const auto model = train_stnbnn(labeled(corpus), StnbnnConfig{});
  EXPECT_GT(mass(class_named(model, "left-arm-wave").spatial, canonical::LeftShoulder,
                 canonical::LeftHand),
            0.5);
  EXPECT_GT(mass(class_named(model, "leg-swing").spatial, canonical::LeftUpLeg,
                 canonical::RightToe),
            0.5);
  const auto arm_joints = main_joints(model, corpus[0]);
  EXPECT_TRUE(std::find(arm_joints.begin(), arm_joints.end(), canonical::LeftHand) !=
              arm_joints.end());
}

TEST(Stnbnn, IdenticalClassesStayNearUniform) {
  auto corpus = make_toy_corpus(1, 24, 30, 6);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].label = i % 2 ? "a" : "b";
  const auto model = train_stnbnn(labeled(corpus), StnbnnConfig{});
  for (const auto& c : model.classes)
    EXPECT_LT(c.spatial.maxCoeff() / c.spatial.minCoeff(), 2.0) << c.label;
}

TEST(Stnbnn, SingleClassRejected) {
  const auto corpus = make_toy_corpus(1, 4, 30, 7);
  EXPECT_THROW(train_stnbnn(labeled(corpus), StnbnnConfig{}), Error);
}

TEST(TopJoints, PeakTiesAndBoundary) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(21, 0.01);
  v[6] = v[7] = v[8] = 0.3;
  EXPECT_EQ(top_joints(v, 3), (MainJointSet{6, 7, 8}));
  EXPECT_EQ(top_joints(Eigen::VectorXd::Constant(21, 1.0 / 21), 2), (MainJointSet{0, 1}));
  EXPECT_EQ(top_joints(v, 21).size(), 21u);
  EXPECT_THROW(top_joints(v, 0), Error);
}

TEST(MotionEnergy, FallbackFindsMovingLimb) {
  const auto corpus = make_toy_corpus(2, 2, 30, 8);
  const auto arm = motion_energy_joints(corpus[0].positions(), 2);
  const auto leg = motion_energy_joints(corpus[2].positions(), 4);
  for (std::size_t j : arm) EXPECT_TRUE(j >= canonical::LeftShoulder && j <= canonical::LeftHand);
  for (std::size_t j : leg) EXPECT_TRUE(canonical::is_lower_body(j));
}

namespace {

std::vector<Pose> corpus_poses(std::size_t families, std::size_t per_family, std::uint64_t seed) {
  std::vector<Pose> poses;
  for (const auto& m : make_toy_corpus(families, per_family, 30, seed))
    poses.insert(poses.end(), m.frames.begin(), m.frames.end());
  return poses;
}

}  // namespace

TEST(Codec, DefaultsAndShape) {
  const CodecConfig c;
  EXPECT_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.dropout, 0.5);
  auto m = make_autoencoder(1);
  EXPECT_EQ(m.encoder_out.out_width(), 20);
  EXPECT_EQ(m.decoder_out.out_width(), 84);
  EXPECT_FALSE(m.trained);
}

TEST(Codec, UntrainedModelRejected) {
  const auto m = make_autoencoder(2);
  EXPECT_THROW(encode(m, Pose::identity(21)), Error);
  EXPECT_THROW(decode(m, PoseEmbedding::Zero(20)), Error);
}

TEST(Codec, MemorizesRepeatedPose) {
  Rng rng(3);
  const auto pose = gen::canonical_motion(rng, 1).frames[0];
  CodecConfig c;
  c.learning_rate = 1e-2;
  c.epochs = 200;
  c.seed = 3;
  const auto trained = train_autoencoder(std::vector<Pose>(32, pose), c);
  EXPECT_LT(trained.history.back().reconstruction, 1e-3);
  EXPECT_EQ(trained.history.size(), 200u);
}

TEST(Codec, SparsityPenaltyIncreasesInactiveUnits) {
  const auto poses = corpus_poses(2, 4, 4);
  CodecConfig c;
  c.learning_rate = 1e-2;
  c.epochs = 150;
  c.seed = 4;
  c.beta = 0.0;
  const auto dense = train_autoencoder(poses, c);
  c.beta = 1e-2;
  const auto sparse = train_autoencoder(poses, c);
  const auto rows = poses_to_rows(poses);
  EXPECT_GT(bottleneck_sparsity(sparse.model, rows), bottleneck_sparsity(dense.model, rows));
}

TEST(Codec, TrainedRoundTrips) {
  // Reconstruction quality is measured without dropout; at rate 0.5 the decoder regresses
  // the moving joints toward their mean.
  const auto poses = corpus_poses(2, 3, 5);
  CodecConfig c;
  c.learning_rate = 3e-3;
  c.epochs = 3000;
  c.dropout = 0.0;
  c.seed = 5;
  const auto trained = train_autoencoder(poses, c);
  const auto& model = trained.model;
  std::vector<double> errors;
  for (const Pose& p : poses) {
    const Pose back = decode(model, encode(model, p));
    for (std::size_t j = 0; j < 21; ++j) errors.push_back(geodesic_distance(back.rotations[j], p.rotations[j]));
  }
  std::sort(errors.begin(), errors.end());
  EXPECT_LT(errors[errors.size() * 95 / 100], 0.1);

  // Identical poses, identical embeddings; decoding zeros still gives unit quaternions.
  EXPECT_EQ(encode(model, poses[0]), encode(model, poses[0]));
  for (const Quat& q : decode(model, PoseEmbedding::Zero(20)).rotations) EXPECT_TRUE(is_unit(q));

  // encode(decode(e)) stays close to e for in-distribution embeddings.
  double drift = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < poses.size(); i += 7) {
    const PoseEmbedding e = encode(model, poses[i]);
    drift = std::max(drift, (encode(model, decode(model, e)) - e).norm());
    scale = std::max(scale, e.norm());
  }
  EXPECT_LT(drift, 0.1 * scale);

  const auto path = std::filesystem::temp_directory_path() / "animgan_codec_test.json";
  save_codec(path, model);
  const auto loaded = load_codec(path);
  std::filesystem::remove(path);
  EXPECT_EQ(encode(loaded, poses[3]), encode(model, poses[3]));
  EXPECT_EQ(codec_to_json(loaded), codec_to_json(model));
}
