#pragma once

#include "animgan/augmentation.hpp"
#include "animgan/discriminator.hpp"
#include "animgan/generator.hpp"
#include "animgan/losses.hpp"
#include "animgan/ndl/optim.hpp"
#include "animgan/pose_codec.hpp"
#include "animgan/stnbnn.hpp"

#include <filesystem>
#include <array>
#include <functional>
#include <iosfwd>
#include <optional>

namespace animgan {

enum class MainJointMode { Stnbnn, MotionEnergy };

struct GeneratorOptimizerConfig {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct DiscriminatorOptimizerConfig {
  double learning_rate = 0.01;
  double decay_factor = 0.9;
  std::int64_t decay_every = 10;  // epochs
  double clip_norm = 5.0;         // gradient L2 norm cap, 0 disables
};

struct TrainConfig {
  std::size_t batch_size = 16;
  std::int64_t total_steps = 500;
  std::size_t frames = 30;
  std::uint64_t seed = 0;
  double dropout = 0.5;
  double real_label = 0.9;
  Eigen::Index generator_hidden = 64;
  NoiseSharing noise = NoiseSharing::PerSequence;
  GeneratorOptimizerConfig generator;
  DiscriminatorOptimizerConfig discriminator;
  LossConfig loss;
  std::size_t hard_negative_every = 1;
  double hard_negative_fraction = 0.25;
  std::size_t generator_steps = 1;      // G updates per step
  std::size_t discriminator_steps = 1;  // D updates per step
  MainJointMode main_joint_mode = MainJointMode::Stnbnn;
  std::size_t stages = 10;
  std::size_t main_joints = 8;
  std::int64_t checkpoint_every = 0;  // 0 = only the final checkpoint

  void validate() const;
};

std::string config_to_json(const TrainConfig& config);
/// Fields absent from the document keep their current values in `base`.
TrainConfig config_from_json(std::string_view text, TrainConfig base = {});
std::string config_digest(const TrainConfig& config);

struct MetricsRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  double loss_st = 0.0;  // batch mean of lambda1 * phi + lambda2 * smooth, plus epsilon
  double d_accuracy_real = 0.0;
  double d_accuracy_fake = 0.0;
  double d_accuracy_hard = 0.0;  // last hard-negative batch
  double mean_phi = 0.0;
  double diversity = 0.0;  // mean pairwise distance of generated mean embeddings
  double lr_g = 0.0;
  double lr_d = 0.0;
};

std::string metrics_to_json(const MetricsRecord& record);

/// Everything needed to continue a run bit-exactly.
struct TrainState {
  TrainConfig config;
  AutoencoderModel codec;
  std::optional<StnbnnModel> stnbnn;
  GeneratorNet generator;
  DiscriminatorNet discriminator;
  ndl::OptimizerState generator_optimizer;
  ndl::OptimizerState discriminator_optimizer;
  std::int64_t step = 0;
  std::size_t metrics_rows = 0;
  double last_hard_accuracy = 0.0;
};

/// Fresh networks and optimizers from the config seed. The codec must be trained.
TrainState init_training(const TrainConfig& config, AutoencoderModel codec,
                         std::optional<StnbnnModel> stnbnn);

/// Fits the main-joint model on the labeled sequences of a dataset (first `frames` frames).
StnbnnModel fit_main_joint_model(const std::vector<MotionSequence>& dataset,
                                 const TrainConfig& config);

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  /// Directory for checkpoints ("step-<n>.ckpt" and "latest.ckpt"); empty disables writing.
  std::filesystem::path checkpoint_dir;
  /// Stop after this step even if total_steps is larger (used to split runs).
  std::optional<std::int64_t> stop_at;
};

/// Alternating D and G updates from state.step up to config.total_steps. A non-finite
/// loss aborts with a Numeric error naming the last good checkpoint.
std::vector<MetricsRecord> train_gan(TrainState& state, const std::vector<MotionSequence>& dataset,
                                     const TrainHooks& hooks = {});

/// Learning rates used by the update at a given step.
double generator_learning_rate(const TrainState& state);
double discriminator_learning_rate(const TrainState& state, std::int64_t epoch);
std::int64_t steps_per_epoch(std::size_t dataset_size, std::size_t batch_size);

/// Condition embeddings (k x 20) of a sequence.
ndl::Matrix condition_of(const AutoencoderModel& codec, const MotionSequence& motion);

/// Generated sequence for an input, inference mode, noise drawn from seed.
MotionSequence generate_for(const TrainState& state, const MotionSequence& input,
                            std::uint64_t seed);

/// Main joints of a sequence under the run's selector.
MainJointSet select_main_joints(const TrainState& state, const MotionSequence& motion);

struct DiscriminatorReport {
  double real_accuracy = 0.0;
  double hard_accuracy = 0.0;
  double accuracy = 0.0;  // balanced over the reals and one hard negative each
  std::array<double, 3> hard_by_kind{};  // reversal, big_noise, bounce
  std::size_t samples = 0;
};

/// Inference-mode accuracy at threshold 0.5 on reals and their hard negatives
/// (kinds cycle reversal, big_noise, bounce).
DiscriminatorReport discriminator_accuracy(const TrainState& state,
                                           const std::vector<MotionSequence>& reals,
                                           std::uint64_t seed);

using SequenceGenerator =
    std::function<MotionSequence(const MotionSequence& input, std::uint64_t trial_seed)>;
using MainJointSelector = std::function<MainJointSet(const MotionSequence& input)>;

struct EvaluationReport {
  std::size_t trials = 0;
  std::size_t wins = 0;
  double win_rate = 0.0;
  double win_rate_low = 0.0;   // 95% Wilson interval
  double win_rate_high = 0.0;
  double mean_phi_generated = 0.0;
  double mean_phi_cross = 0.0;
  double diversity = 0.0;  // mean per-joint distance (cm) between two noise draws
};

/// For trial i the input is eval[i mod n]; it wins when phi(input, generated) is below
/// phi(input, random real of another label). Sequences are compared over the input length.
EvaluationReport evaluate(const std::vector<MotionSequence>& eval_set, const SequenceGenerator& generator,
                          const MainJointSelector& main_joints, std::size_t trials,
                          std::uint64_t seed);
EvaluationReport evaluate(const TrainState& state, const std::vector<MotionSequence>& eval_set,
                          std::size_t trials, std::uint64_t seed);

std::string evaluation_to_json(const EvaluationReport& report);

struct LambdaScore {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double win_rate = 0.0;
};

/// Grid search of (lambda1, lambda2) scored by validation win rate; best first on ties
/// by grid order.
std::vector<LambdaScore> cross_validate_lambdas(const std::vector<MotionSequence>& train_set,
                                                const std::vector<MotionSequence>& validation_set,
                                                const TrainConfig& base, const AutoencoderModel& codec,
                                                const std::vector<double>& grid, std::size_t trials);

}  // namespace animgan
