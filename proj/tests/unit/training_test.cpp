#include "animgan/checkpoint.hpp"
#include "animgan/dataset.hpp"
#include "animgan/error.hpp"
#include "animgan/gradient_suites.hpp"
#include "animgan/toy_corpus.hpp"
#include "animgan/training.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace animgan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const std::vector<MotionSequence>& small_corpus() {
  static const auto corpus = make_toy_corpus(2, 4, 12, 41);
  return corpus;
}

const AutoencoderModel& small_codec() {
  static const AutoencoderModel codec = [] {
    std::vector<Pose> poses;
    for (const auto& m : small_corpus()) poses.insert(poses.end(), m.frames.begin(), m.frames.end());
    CodecConfig c;
    c.learning_rate = 1e-2;
    c.epochs = 20;
    c.seed = 41;
    return train_autoencoder(poses, c).model;
  }();
  return codec;
}

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.total_steps = 6;
  c.frames = 8;
  c.stages = 4;
  c.seed = 41;
  c.generator_hidden = 8;
  c.main_joint_mode = MainJointMode::MotionEnergy;
  return c;
}

std::vector<std::string> metric_lines(const std::vector<MetricsRecord>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(metrics_to_json(r));
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Usage;
}

}  // namespace

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.total_steps, 500);
  EXPECT_EQ(c.frames, 30u);
  EXPECT_EQ(c.dropout, 0.5);
  EXPECT_EQ(c.real_label, 0.9);
  EXPECT_EQ(c.generator.learning_rate, 0.1);
  EXPECT_EQ(c.discriminator.learning_rate, 0.01);
  EXPECT_EQ(c.discriminator.decay_factor, 0.9);
  EXPECT_EQ(c.discriminator.decay_every, 10);
  EXPECT_EQ(c.main_joints, 8u);
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, ValidationRejects) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Usage);
  c = TrainConfig{};
  c.real_label = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.generator.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.frames = 3;
  EXPECT_THROW(c.validate(), Error);
}

TEST(TrainConfig, JsonRoundTripAndDigest) {
  TrainConfig c = small_config();
  c.loss.lambda1 = 0.25;
  c.noise = NoiseSharing::PerFrame;
  const std::string text = config_to_json(c);
  const TrainConfig back = config_from_json(text);
  EXPECT_EQ(config_to_json(back), text);
  EXPECT_EQ(config_digest(back), config_digest(c));

  const TrainConfig partial = config_from_json(R"({"batch_size": 7})", c);
  EXPECT_EQ(partial.batch_size, 7u);
  EXPECT_EQ(partial.loss.lambda1, 0.25);
  EXPECT_NE(config_digest(partial), config_digest(c));

  EXPECT_THROW(config_from_json("{not json"), Error);
}

TEST(Schedules, EpochsAndDecay) {
  EXPECT_EQ(steps_per_epoch(100, 16), 7);
  EXPECT_EQ(steps_per_epoch(16, 16), 1);
  TrainConfig c = small_config();
  const TrainState state = init_training(c, small_codec(), std::nullopt);
  EXPECT_EQ(discriminator_learning_rate(state, 0), 0.01);
  EXPECT_EQ(discriminator_learning_rate(state, 9), 0.01);
  EXPECT_EQ(discriminator_learning_rate(state, 10), 0.009);
  EXPECT_EQ(discriminator_learning_rate(state, 20), 0.0081);
  EXPECT_DOUBLE_EQ(generator_learning_rate(state), 0.1);
}

TEST(Training, ZeroStepsWritesNoMetrics) {
  TrainConfig c = small_config();
  c.total_steps = 0;
  TrainState state = init_training(c, small_codec(), std::nullopt);
  std::size_t calls = 0;
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRecord&) { ++calls; };
  EXPECT_TRUE(train_gan(state, small_corpus(), hooks).empty());
  // Only the discriminator input normalization is fitted; a second call changes nothing.
  const std::string after = serialize_checkpoint(state);
  EXPECT_TRUE(train_gan(state, small_corpus(), hooks).empty());
  EXPECT_EQ(calls, 0u);
  EXPECT_EQ(state.metrics_rows, 0u);
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE(serialize_checkpoint(state) == after);
}

TEST(Training, UntrainedCodecRejected) {
  EXPECT_THROW(init_training(small_config(), make_autoencoder(1), std::nullopt), Error);
}

TEST(Training, ShortRunIsDeterministicAndResumable) {
  const TrainConfig c = small_config();
  TrainState a = init_training(c, small_codec(), std::nullopt);
  const auto full = metric_lines(train_gan(a, small_corpus()));
  ASSERT_EQ(full.size(), 6u);

  TrainState b = init_training(c, small_codec(), std::nullopt);
  EXPECT_EQ(metric_lines(train_gan(b, small_corpus())), full);
  EXPECT_TRUE(serialize_checkpoint(b) == serialize_checkpoint(a));

  TempDir dir("animgan_resume_test");
  TrainState first = init_training(c, small_codec(), std::nullopt);
  TrainHooks hooks;
  hooks.checkpoint_dir = dir.path;
  hooks.stop_at = 3;
  auto lines = metric_lines(train_gan(first, small_corpus(), hooks));
  ASSERT_EQ(lines.size(), 3u);
  ASSERT_TRUE(fs::exists(dir.path / "latest.ckpt"));
  TrainState resumed = load_checkpoint(dir.path / "latest.ckpt");
  EXPECT_EQ(resumed.step, 3);
  for (auto& l : metric_lines(train_gan(resumed, small_corpus()))) lines.push_back(l);
  EXPECT_EQ(lines, full);
  EXPECT_TRUE(serialize_checkpoint(resumed) == serialize_checkpoint(a));

  for (const auto& r : train_gan(a, small_corpus())) ADD_FAILURE() << "ran past total_steps at " << r.step;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  TrainState state = init_training(small_config(), small_codec(), std::nullopt);
  TrainHooks hooks;
  hooks.stop_at = 2;
  train_gan(state, small_corpus(), hooks);
  const std::string bytes = serialize_checkpoint(state);
  EXPECT_EQ(bytes.substr(0, 4), "AGCK");
  EXPECT_TRUE(serialize_checkpoint(deserialize_checkpoint(bytes)) == bytes);

  TempDir dir("animgan_ckpt_test");
  save_checkpoint(dir.path / "a.ckpt", state);
  EXPECT_TRUE(serialize_checkpoint(load_checkpoint(dir.path / "a.ckpt")) == bytes);

  const auto& input = small_corpus()[1];
  const auto g1 = generate_for(state, input, 5);
  const auto g2 = generate_for(load_checkpoint(dir.path / "a.ckpt"), input, 5);
  for (std::size_t t = 0; t < g1.frame_count(); ++t)
    for (std::size_t j = 0; j < g1.joint_count(); ++j)
      ASSERT_EQ(g1.frames[t].rotations[j].coeffs(), g2.frames[t].rotations[j].coeffs());
}

TEST(Checkpoint, CorruptionDetected) {
  const TrainState state = init_training(small_config(), small_codec(), std::nullopt);
  std::string bytes = serialize_checkpoint(state);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x20;
  EXPECT_EQ(kind_of([&] { deserialize_checkpoint(flipped); }), ErrorKind::Data);
  EXPECT_EQ(kind_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)); }), ErrorKind::Data);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad_magic), Error);
  EXPECT_THROW(load_checkpoint(fs::temp_directory_path() / "animgan_missing.ckpt"), Error);
}

TEST(Evaluate, IdentityGeneratorAlwaysWins) {
  const auto corpus = make_toy_corpus(2, 5, 12, 42);
  const auto report = evaluate(
      corpus, [](const MotionSequence& in, std::uint64_t) { return in; },
      [](const MotionSequence& in) { return motion_energy_joints(in.positions(), 8); }, 50, 1);
  EXPECT_EQ(report.trials, 50u);
  EXPECT_EQ(report.wins, 50u);
  EXPECT_EQ(report.win_rate, 1.0);
  EXPECT_EQ(report.mean_phi_generated, 0.0);
  EXPECT_GT(report.win_rate_low, 0.9);
  EXPECT_EQ(report.win_rate_high, 1.0);
}

TEST(Evaluate, ConditionBlindGeneratorIsChance) {
  // Returns a random real from a family other than the input's, like the comparison draw.
  const auto corpus = make_toy_corpus(2, 10, 12, 43);
  const auto blind = [&](const MotionSequence& in, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<const MotionSequence*> others;
    for (const auto& m : corpus)
      if (m.label != in.label) others.push_back(&m);
    return *others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)];
  };
  const auto report = evaluate(
      corpus, blind, [](const MotionSequence& in) { return motion_energy_joints(in.positions(), 8); },
      400, 2);
  EXPECT_GT(report.win_rate, 0.4);
  EXPECT_LT(report.win_rate, 0.6);
  EXPECT_LT(report.win_rate_low, report.win_rate);
  EXPECT_GT(report.win_rate_high, report.win_rate);
}

TEST(Evaluate, RequiresTwoLabels) {
  const auto corpus = make_toy_corpus(1, 4, 12, 44);
  EXPECT_THROW(evaluate(
                   corpus, [](const MotionSequence& in, std::uint64_t) { return in; },
                   [](const MotionSequence&) { return MainJointSet{0}; }, 10, 1),
               Error);
}

TEST(ToyCorpus, CountsLabelsAndDeterminism) {
  const auto a = make_toy_corpus(3, 4, 20, 9);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].frame_count(), 20u);
    EXPECT_EQ(a[i].fps, kTargetFps);
    EXPECT_EQ(*a[i].label, toy_family_label(i / 4));
    EXPECT_EQ(a[i].joint_count(), canonical::kJointCount);
  }
  const auto b = make_toy_corpus(3, 4, 20, 9);
  const auto c = make_toy_corpus(3, 4, 20, 10);
  EXPECT_EQ(a[5].frames[7].rotations[4].coeffs(), b[5].frames[7].rotations[4].coeffs());
  EXPECT_NE(a[5].frames[7].rotations[4].coeffs(), c[5].frames[7].rotations[4].coeffs());
}

TEST(Dataset, WriteLoadRoundTrip) {
  TempDir dir("animgan_dataset_test");
  Dataset ds = dataset_from_motions(make_toy_corpus(2, 2, 10, 45), "toy");
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds[0].id, "toy-00000");
  ds[3].op = "mirror";
  ds[3].parents = {ds[1].id};
  ds[3].seed = 17;
  ds[3].motion.source = SequenceSource::Augmented;
  write_dataset(dir.path, ds);
  ASSERT_TRUE(fs::exists(dir.path / kManifestName));

  const Dataset back = load_dataset(dir.path);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].id, ds[i].id);
    EXPECT_EQ(back[i].motion.label, ds[i].motion.label);
    EXPECT_EQ(back[i].motion.source, ds[i].motion.source);
    EXPECT_EQ(back[i].op, ds[i].op);
    EXPECT_EQ(back[i].parents, ds[i].parents);
    EXPECT_EQ(back[i].seed, ds[i].seed);
    ASSERT_EQ(back[i].motion.frame_count(), ds[i].motion.frame_count());
    for (std::size_t t = 0; t < ds[i].motion.frame_count(); ++t)
      for (std::size_t j = 0; j < canonical::kJointCount; ++j)
        ASSERT_LT(geodesic_distance(back[i].motion.frames[t].rotations[j],
                                    ds[i].motion.frames[t].rotations[j]),
                  1e-6);
  }

  fs::remove(dir.path / kManifestName);
  const Dataset bare = load_dataset(dir.path);
  ASSERT_EQ(bare.size(), 4u);
  EXPECT_FALSE(bare[0].motion.label.has_value());
  EXPECT_EQ(bare[0].id, "toy-00000");
}

TEST(Dataset, BrokenManifestIsDataError) {
  TempDir dir("animgan_dataset_bad");
  std::ofstream(dir.path / kManifestName) << "{\"entries\": [{\"file\": \"missing.bvh\"}]}";
  EXPECT_EQ(kind_of([&] { load_dataset(dir.path); }), ErrorKind::Data);
  EXPECT_THROW(load_dataset(dir.path / "nope"), Error);
}

TEST(GradientSuites, NamesAndQuickPass) {
  EXPECT_EQ(gradient_suite_names().size(), 8u);
  for (const char* suite : {"loss_phi", "loss_discriminator", "discriminator"}) {
    const auto r = run_gradient_suite(suite, 3, 0);
    EXPECT_TRUE(r.passed) << suite << " " << r.report.max_relative_error;
    EXPECT_EQ(r.suite, suite);
  }
  EXPECT_THROW(run_gradient_suite("nope", 3, 0), Error);
}
