#include "animgan/training.hpp"

#include "animgan/checkpoint.hpp"
#include "animgan/diff_kinematics.hpp"
#include "animgan/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace animgan {

using json = nlohmann::json;
using ndl::Matrix;
using ndl::Tape;
using ndl::Var;

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorKind::Usage, "batch_size must be at least 1");
  require(total_steps >= 0, ErrorKind::Usage, "total_steps must be non-negative");
  require(frames >= kMinDiscriminatorFrames, ErrorKind::Usage,
          "frames must be at least " + std::to_string(kMinDiscriminatorFrames));
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Usage, "dropout must lie in [0, 1)");
  require(real_label > 0.5 && real_label <= 1.0, ErrorKind::Usage, "real_label must lie in (0.5, 1]");
  require(generator_hidden >= 1, ErrorKind::Usage, "generator_hidden must be positive");
  require(generator.learning_rate >= 0.0, ErrorKind::Usage,
          "generator learning rate must be non-negative");
  require(discriminator.learning_rate >= 0.0, ErrorKind::Usage,
          "discriminator learning rate must be non-negative");
  require(discriminator.decay_every >= 1, ErrorKind::Usage, "decay_every must be at least 1");
  require(discriminator.decay_factor > 0.0, ErrorKind::Usage, "decay_factor must be positive");
  require(hard_negative_every >= 1, ErrorKind::Usage, "hard_negative_every must be at least 1");
  require(hard_negative_fraction >= 0.0 && hard_negative_fraction <= 1.0, ErrorKind::Usage,
          "hard_negative_fraction must lie in [0, 1]");
  require(generator_steps >= 1 && discriminator_steps >= 1, ErrorKind::Usage,
          "update ratios must be at least 1");
  require(main_joints >= 1 && main_joints <= canonical::kJointCount, ErrorKind::Usage,
          "main_joints must lie in [1, 21]");
  require(stages >= 1 && stages <= frames, ErrorKind::Usage, "stages must lie in [1, frames]");
  require(checkpoint_every >= 0, ErrorKind::Usage, "checkpoint_every must be non-negative");
  loss.validate();
}

std::string config_to_json(const TrainConfig& c) {
  json doc;
  doc["batch_size"] = c.batch_size;
  doc["total_steps"] = c.total_steps;
  doc["frames"] = c.frames;
  doc["seed"] = c.seed;
  doc["dropout"] = c.dropout;
  doc["real_label"] = c.real_label;
  doc["generator_hidden"] = c.generator_hidden;
  doc["noise"] = c.noise == NoiseSharing::PerFrame ? "per_frame" : "per_sequence";
  doc["generator"] = {{"optimizer", "adam"},
                      {"learning_rate", c.generator.learning_rate},
                      {"decay", "linear"},
                      {"beta1", c.generator.beta1},
                      {"beta2", c.generator.beta2},
                      {"epsilon", c.generator.epsilon}};
  doc["discriminator"] = {{"optimizer", "sgd"},
                          {"learning_rate", c.discriminator.learning_rate},
                          {"decay_factor", c.discriminator.decay_factor},
                          {"decay_every", c.discriminator.decay_every},
                          {"clip_norm", c.discriminator.clip_norm}};
  doc["loss"] = {{"lambda1", c.loss.lambda1},
                 {"lambda2", c.loss.lambda2},
                 {"epsilon", c.loss.epsilon},
                 {"delta", c.loss.delta}};
  doc["hard_negative_every"] = c.hard_negative_every;
  doc["hard_negative_fraction"] = c.hard_negative_fraction;
  doc["generator_steps"] = c.generator_steps;
  doc["discriminator_steps"] = c.discriminator_steps;
  doc["main_joint_mode"] = c.main_joint_mode == MainJointMode::Stnbnn ? "stnbnn" : "motion_energy";
  doc["stages"] = c.stages;
  doc["main_joints"] = c.main_joints;
  doc["checkpoint_every"] = c.checkpoint_every;
  return doc.dump();
}

TrainConfig config_from_json(std::string_view text, TrainConfig c) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, std::string("config: ") + e.what());
  }
  require(doc.is_object(), ErrorKind::Usage, "config must be a JSON object");
  try {
    auto get = [](const json& obj, const char* key, auto& field) {
      if (obj.contains(key)) {
        field = obj.at(key).get<std::decay_t<decltype(field)>>();
      }
    };
    get(doc, "batch_size", c.batch_size);
    get(doc, "total_steps", c.total_steps);
    get(doc, "frames", c.frames);
    get(doc, "seed", c.seed);
    get(doc, "dropout", c.dropout);
    get(doc, "real_label", c.real_label);
    get(doc, "generator_hidden", c.generator_hidden);
    if (doc.contains("noise")) {
      const auto v = doc.at("noise").get<std::string>();
      require(v == "per_frame" || v == "per_sequence", ErrorKind::Usage,
              "noise must be per_frame or per_sequence");
      c.noise = v == "per_frame" ? NoiseSharing::PerFrame : NoiseSharing::PerSequence;
    }
    if (doc.contains("generator")) {
      const json& g = doc.at("generator");
      if (g.contains("optimizer")) {
        require(g.at("optimizer") == "adam", ErrorKind::Usage, "generator optimizer must be adam");
      }
      get(g, "learning_rate", c.generator.learning_rate);
      get(g, "beta1", c.generator.beta1);
      get(g, "beta2", c.generator.beta2);
      get(g, "epsilon", c.generator.epsilon);
    }
    if (doc.contains("discriminator")) {
      const json& d = doc.at("discriminator");
      if (d.contains("optimizer")) {
        require(d.at("optimizer") == "sgd", ErrorKind::Usage, "discriminator optimizer must be sgd");
      }
      get(d, "learning_rate", c.discriminator.learning_rate);
      get(d, "decay_factor", c.discriminator.decay_factor);
      get(d, "decay_every", c.discriminator.decay_every);
      get(d, "clip_norm", c.discriminator.clip_norm);
    }
    if (doc.contains("loss")) {
      const json& l = doc.at("loss");
      get(l, "lambda1", c.loss.lambda1);
      get(l, "lambda2", c.loss.lambda2);
      get(l, "epsilon", c.loss.epsilon);
      get(l, "delta", c.loss.delta);
    }
    get(doc, "hard_negative_every", c.hard_negative_every);
    get(doc, "hard_negative_fraction", c.hard_negative_fraction);
    get(doc, "generator_steps", c.generator_steps);
    get(doc, "discriminator_steps", c.discriminator_steps);
    if (doc.contains("main_joint_mode")) {
      const auto v = doc.at("main_joint_mode").get<std::string>();
      require(v == "stnbnn" || v == "motion_energy", ErrorKind::Usage,
              "main_joint_mode must be stnbnn or motion_energy");
      c.main_joint_mode = v == "stnbnn" ? MainJointMode::Stnbnn : MainJointMode::MotionEnergy;
    }
    get(doc, "stages", c.stages);
    get(doc, "main_joints", c.main_joints);
    get(doc, "checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, std::string("config: ") + e.what());
  }
  c.loss.batch_size = c.batch_size;
  return c;
}

std::string config_digest(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : config_to_json(config)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string metrics_to_json(const MetricsRecord& r) {
  json row;
  row["step"] = r.step;
  row["epoch"] = r.epoch;
  row["loss_g"] = r.loss_g;
  row["loss_d"] = r.loss_d;
  row["loss_st"] = r.loss_st;
  row["d_accuracy_real"] = r.d_accuracy_real;
  row["d_accuracy_fake"] = r.d_accuracy_fake;
  row["d_accuracy_hard"] = r.d_accuracy_hard;
  row["mean_phi"] = r.mean_phi;
  row["diversity"] = r.diversity;
  row["lr_g"] = r.lr_g;
  row["lr_d"] = r.lr_d;
  return row.dump();
}

std::int64_t steps_per_epoch(std::size_t dataset_size, std::size_t batch_size) {
  require(dataset_size >= 1 && batch_size >= 1, ErrorKind::Usage, "empty dataset or batch");
  return static_cast<std::int64_t>((dataset_size + batch_size - 1) / batch_size);
}

Matrix condition_of(const AutoencoderModel& codec, const MotionSequence& motion) {
  require(codec.trained, ErrorKind::Usage, "pose codec has not been trained");
  return encode_rows(codec, pose_matrix(motion));
}

namespace {

MotionSequence crop(const MotionSequence& m, std::size_t frames) {
  return trim(m, frames);
}

std::vector<MotionSequence> training_view(const std::vector<MotionSequence>& dataset,
                                          std::size_t frames) {
  require(!dataset.empty(), ErrorKind::Data, "training dataset is empty");
  std::vector<MotionSequence> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const MotionSequence& m = dataset[i];
    require(canonical::is_canonical(*m.skeleton), ErrorKind::Data,
            "sequence " + std::to_string(i) + " does not use the canonical rig");
    require(std::abs(m.fps - kTargetFps) < 1e-9, ErrorKind::Data,
            "sequence " + std::to_string(i) + " is not at 5 fps; ingest it first");
    require(m.frame_count() <= kMaxFrames, ErrorKind::Data,
            "sequence " + std::to_string(i) + " exceeds 300 frames; ingest it first");
    require(m.frame_count() >= frames, ErrorKind::Data,
            "sequence " + std::to_string(i) + " has " + std::to_string(m.frame_count()) +
                " frames, training needs " + std::to_string(frames));
    out.push_back(crop(m, frames));
  }
  return out;
}

struct Prepared {
  std::vector<MotionSequence> sequences;
  std::vector<Matrix> positions;
  std::vector<Matrix> conditions;
  std::vector<MainJointSet> main;
  std::vector<std::vector<std::size_t>> partners;  // same label, excluding self
};

Prepared prepare(const TrainState& state, const std::vector<MotionSequence>& dataset) {
  Prepared p;
  p.sequences = training_view(dataset, state.config.frames);
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < p.sequences.size(); ++i) {
    const MotionSequence& m = p.sequences[i];
    p.positions.push_back(positions_matrix(m.positions()));
    p.conditions.push_back(condition_of(state.codec, m));
    p.main.push_back(select_main_joints(state, m));
    if (m.label) {
      by_label[*m.label].push_back(i);
    }
  }
  p.partners.resize(p.sequences.size());
  for (const auto& [label, ids] : by_label) {
    for (std::size_t i : ids) {
      for (std::size_t j : ids) {
        if (j != i) {
          p.partners[i].push_back(j);
        }
      }
    }
  }
  return p;
}

std::size_t pick_partner(const Prepared& p, std::size_t index, Rng& rng) {
  const auto& options = p.partners[index];
  if (options.empty()) {
    return index;
  }
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

std::vector<std::size_t> batch_indices(const TrainState& state, std::size_t n, std::int64_t step) {
  const std::size_t m = state.config.batch_size;
  const std::int64_t spe = steps_per_epoch(n, m);
  const std::int64_t epoch = step / spe;
  const auto position = static_cast<std::size_t>(step % spe);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(state.config.seed, "batching", static_cast<std::uint64_t>(epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = perm[(position * m + i) % n];
  }
  return out;
}

Var column(Tape& tape, std::vector<Var>& parts) {
  (void)tape;
  return parts.size() == 1 ? parts.front() : ndl::concat_rows(parts);
}

double mean_pairwise_distance(const std::vector<Eigen::VectorXd>& points) {
  if (points.size() < 2) {
    return 0.0;
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      total += (points[a] - points[b]).norm();
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::string checkpoint_name(std::int64_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "step-%06lld.ckpt", static_cast<long long>(step));
  return buf;
}

struct StepResult {
  MetricsRecord record;
};

MetricsRecord run_step(TrainState& state, const Prepared& data, const GraphPyramid& pyramid) {
  const TrainConfig& c = state.config;
  const std::int64_t step = state.step;
  const std::size_t n = data.sequences.size();
  const std::size_t m = c.batch_size;
  const std::int64_t epoch = step / steps_per_epoch(n, m);
  const std::vector<std::size_t> batch = batch_indices(state, n, step);
  const Skeleton& rig = *canonical::skeleton();
  const std::uint64_t seed = c.seed;

  MetricsRecord record;
  record.step = step + 1;
  record.epoch = epoch;
  record.lr_d = discriminator_learning_rate(state, epoch);
  record.lr_g = generator_learning_rate(state);

  ndl::ParameterList d_params = state.discriminator.parameters();
  ndl::ParameterList g_params = state.generator.parameters();

  Rng pairing = make_rng(seed, "pairing", static_cast<std::uint64_t>(step));
  std::vector<std::size_t> partner(m);
  for (std::size_t i = 0; i < m; ++i) {
    partner[i] = pick_partner(data, batch[i], pairing);
  }

  for (std::size_t r = 0; r < c.discriminator_steps; ++r) {
    const auto d_index = static_cast<std::uint64_t>(step) * c.discriminator_steps + r;
    Rng d_dropout = make_rng(seed, "d-dropout", d_index);
    Rng g_dropout = make_rng(seed, "g-dropout-d", d_index);
    Tape tape;
    std::vector<Var> real_scores;
    std::vector<Var> fake_scores;
    std::vector<Var> hard_scores;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t idx = batch[i];
      real_scores.push_back(discriminate(tape, state.discriminator, tape.constant(data.positions[idx]),
                                         tape.constant(data.conditions[partner[i]]), pyramid, true,
                                         d_dropout));
      Rng noise_rng = make_rng(seed, "noise-d", d_index * m + i);
      const Matrix noise = draw_noise(static_cast<Eigen::Index>(c.frames), c.noise, noise_rng);
      const Matrix rotations =
          generate_rotations(state.generator, data.conditions[idx], noise, true, g_dropout);
      fake_scores.push_back(discriminate(tape, state.discriminator,
                                         tape.constant(forward_kinematics(rig, rotations)),
                                         tape.constant(data.conditions[idx]), pyramid, true, d_dropout));
    }
    const bool hard_step = (d_index + 1) % c.hard_negative_every == 0 && c.hard_negative_fraction > 0.0;
    if (hard_step) {
      const auto count = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(c.hard_negative_fraction * static_cast<double>(m))));
      Rng kind_rng = make_rng(seed, "hard-negative", d_index);
      std::uniform_int_distribution<int> kind(0, 2);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = batch[i % m];
        const MotionSequence hn = synth_hard_negative(
            data.sequences[idx], static_cast<HardNegativeKind>(kind(kind_rng)),
            derive_seed(seed, "hard-negative-noise", d_index * m + i));
        hard_scores.push_back(discriminate(tape, state.discriminator,
                                           tape.constant(positions_matrix(hn.positions())),
                                           tape.constant(data.conditions[partner[i % m]]), pyramid,
                                           true, d_dropout));
      }
    }
    std::vector<Var> negatives = fake_scores;
    negatives.insert(negatives.end(), hard_scores.begin(), hard_scores.end());
    Var real = column(tape, real_scores);
    Var fake = column(tape, negatives);
    Var loss = discriminator_loss(real, fake, c.real_label, c.loss);
    require(std::isfinite(loss.scalar()), ErrorKind::Numeric,
            "discriminator loss became non-finite at step " + std::to_string(step + 1));
    ndl::zero_grads(d_params);
    tape.backward(loss);
    ndl::clip_grad_norm(d_params, c.discriminator.clip_norm);
    ndl::optimizer_step(state.discriminator_optimizer, d_params, epoch);

    record.loss_d = loss.scalar();
    record.d_accuracy_real =
        static_cast<double>((real.value().array() > 0.5).count()) / static_cast<double>(m);
    record.d_accuracy_fake = static_cast<double>((column(tape, fake_scores).value().array() < 0.5).count()) /
                             static_cast<double>(m);
    if (!hard_scores.empty()) {
      state.last_hard_accuracy =
          static_cast<double>((column(tape, hard_scores).value().array() < 0.5).count()) /
          static_cast<double>(hard_scores.size());
    }
  }
  record.d_accuracy_hard = state.last_hard_accuracy;

  for (std::size_t r = 0; r < c.generator_steps; ++r) {
    const auto g_index = static_cast<std::uint64_t>(step) * c.generator_steps + r;
    Rng g_dropout = make_rng(seed, "g-dropout", g_index);
    Rng d_fixed = make_rng(seed, "d-inference", g_index);
    Tape tape;
    std::vector<Var> scores;
    std::vector<Var> st_values;
    std::vector<Eigen::VectorXd> embeddings;
    double phi_total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t idx = batch[i];
      Rng noise_rng = make_rng(seed, "noise-g", g_index * m + i);
      const Matrix noise = draw_noise(static_cast<Eigen::Index>(c.frames), c.noise, noise_rng);
      Var cond = tape.constant(data.conditions[idx]);
      Var rotations = generator_forward(tape, state.generator, cond, noise, true, g_dropout);
      Var positions = forward_kinematics(rig, rotations);
      scores.push_back(discriminate(tape, state.discriminator, positions, cond, pyramid, false, d_fixed));
      Var input = tape.constant(data.positions[idx]);
      Var cond_term = phi(input, positions, data.main[idx], kTargetFps);
      Var smooth_term = smoothness(positions, data.main[idx], kTargetFps);
      phi_total += cond_term.scalar();
      st_values.push_back(ndl::add(ndl::scale(cond_term, c.loss.lambda1),
                                   ndl::scale(smooth_term, c.loss.lambda2)));
      embeddings.push_back(encode_rows(state.codec, rotations.value()).colwise().mean().transpose());
    }
    Var st = column(tape, st_values);
    Var loss = generator_loss(column(tape, scores), st, c.loss);
    require(std::isfinite(loss.scalar()), ErrorKind::Numeric,
            "generator loss became non-finite at step " + std::to_string(step + 1));
    ndl::zero_grads(g_params);
    tape.backward(loss);
    ndl::optimizer_step(state.generator_optimizer, g_params, epoch);

    record.loss_g = loss.scalar();
    record.loss_st = st.value().mean() + c.loss.epsilon;
    record.mean_phi = phi_total / static_cast<double>(m);
    record.diversity = mean_pairwise_distance(embeddings);
  }
  ndl::zero_grads(d_params);
  ++state.step;
  return record;
}

}  // namespace

double generator_learning_rate(const TrainState& state) {
  return ndl::learning_rate(state.generator_optimizer, 0);
}

double discriminator_learning_rate(const TrainState& state, std::int64_t epoch) {
  return ndl::learning_rate(state.discriminator_optimizer, epoch);
}

TrainState init_training(const TrainConfig& config, AutoencoderModel codec,
                         std::optional<StnbnnModel> stnbnn) {
  config.validate();
  require(codec.trained, ErrorKind::Usage, "GAN training needs a trained pose codec");
  if (config.main_joint_mode == MainJointMode::Stnbnn) {
    require(stnbnn.has_value() && stnbnn->trained, ErrorKind::Usage,
            "main_joint_mode stnbnn needs a trained main-joint model");
  }
  TrainState s;
  s.config = config;
  s.config.loss.batch_size = config.batch_size;
  s.codec = std::move(codec);
  s.stnbnn = std::move(stnbnn);
  s.generator = make_generator(derive_seed(config.seed, "generator"), config.generator_hidden,
                               config.dropout);
  s.discriminator = make_discriminator(derive_seed(config.seed, "discriminator"), config.dropout);
  const std::int64_t g_updates =
      std::max<std::int64_t>(1, config.total_steps * static_cast<std::int64_t>(config.generator_steps));
  s.generator_optimizer = ndl::make_adam(config.generator.learning_rate, g_updates,
                                         config.generator.beta1, config.generator.beta2,
                                         config.generator.epsilon);
  s.discriminator_optimizer = ndl::make_sgd(config.discriminator.learning_rate,
                                            config.discriminator.decay_factor,
                                            config.discriminator.decay_every);
  return s;
}

StnbnnModel fit_main_joint_model(const std::vector<MotionSequence>& dataset,
                                 const TrainConfig& config) {
  const std::vector<MotionSequence> view = training_view(dataset, config.frames);
  std::vector<LabeledSequence> labeled;
  for (const MotionSequence& m : view) {
    if (m.label) {
      labeled.push_back(LabeledSequence{&m, *m.label});
    }
  }
  StnbnnConfig sc;
  sc.stages = config.stages;
  sc.main_joints = config.main_joints;
  return train_stnbnn(labeled, sc);
}

MainJointSet select_main_joints(const TrainState& state, const MotionSequence& motion) {
  const std::vector<JointPositions> positions = motion.positions();
  if (state.config.main_joint_mode == MainJointMode::Stnbnn && state.stnbnn && state.stnbnn->trained) {
    return main_joints(*state.stnbnn, positions);
  }
  return motion_energy_joints(positions, state.config.main_joints);
}

std::vector<MetricsRecord> train_gan(TrainState& state, const std::vector<MotionSequence>& dataset,
                                     const TrainHooks& hooks) {
  state.config.validate();
  const Prepared data = prepare(state, dataset);
  if (state.step == 0) {
    fit_input_normalization(state.discriminator, data.positions);
  }
  const GraphPyramid pyramid = build_graph_pyramid(*canonical::skeleton(), state.config.frames);
  std::optional<std::filesystem::path> last_good;

  auto write = [&](std::int64_t step) {
    if (hooks.checkpoint_dir.empty()) {
      return;
    }
    std::filesystem::create_directories(hooks.checkpoint_dir);
    const auto path = hooks.checkpoint_dir / checkpoint_name(step);
    save_checkpoint(path, state);
    save_checkpoint(hooks.checkpoint_dir / "latest.ckpt", state);
    last_good = path;
  };

  if (state.step == 0) {
    write(0);
  }
  std::int64_t end = state.config.total_steps;
  if (hooks.stop_at) {
    end = std::min(end, *hooks.stop_at);
  }
  std::vector<MetricsRecord> records;
  while (state.step < end) {
    MetricsRecord record;
    try {
      record = run_step(state, data, pyramid);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Numeric) {
        fail(ErrorKind::Numeric, std::string(e.what()) + "; last good checkpoint: " +
                                     (last_good ? last_good->string() : std::string("none")));
      }
      throw;
    }
    ++state.metrics_rows;
    if (hooks.on_metrics) {
      hooks.on_metrics(record);
    }
    records.push_back(record);
    const bool interval = state.config.checkpoint_every > 0 &&
                          state.step % state.config.checkpoint_every == 0;
    if (interval || state.step == end) {
      write(state.step);
    }
  }
  return records;
}

MotionSequence generate_for(const TrainState& state, const MotionSequence& input,
                            std::uint64_t seed) {
  const Matrix cond = condition_of(state.codec, input);
  Rng noise_rng = make_rng(seed, "noise");
  const Matrix noise = draw_noise(cond.rows(), state.config.noise, noise_rng);
  Rng unused = make_rng(seed, "dropout");
  MotionSequence out = generate(state.generator, cond, noise, false, unused, input.fps);
  out.root_translation = input.root_translation;
  return out;
}

DiscriminatorReport discriminator_accuracy(const TrainState& state,
                                           const std::vector<MotionSequence>& reals,
                                           std::uint64_t seed) {
  require(!reals.empty(), ErrorKind::Data, "no sequences to score");
  std::map<std::size_t, GraphPyramid> pyramids;
  auto pyramid_for = [&](std::size_t k) -> const GraphPyramid& {
    auto it = pyramids.find(k);
    if (it == pyramids.end()) {
      it = pyramids.emplace(k, build_graph_pyramid(*state.discriminator.skeleton, k)).first;
    }
    return it->second;
  };
  DiscriminatorReport report;
  std::size_t real_ok = 0;
  std::size_t hard_ok = 0;
  std::array<std::size_t, 3> kind_ok{};
  std::array<std::size_t, 3> kind_total{};
  Rng unused = make_rng(seed, "unused");
  for (std::size_t i = 0; i < reals.size(); ++i) {
    const MotionSequence& r = reals[i];
    std::size_t partner = i;
    for (std::size_t step = 1; step < reals.size(); ++step) {
      const std::size_t j = (i + step) % reals.size();
      if (reals[j].label == r.label && reals[j].frame_count() == r.frame_count()) {
        partner = j;
        break;
      }
    }
    const Matrix cond = condition_of(state.codec, reals[partner]);
    const GraphPyramid& pyramid = pyramid_for(r.frame_count());
    const double real_score = discriminate(state.discriminator, positions_matrix(r.positions()), cond,
                                           pyramid, false, unused);
    const auto kind = static_cast<HardNegativeKind>(i % 3);
    const MotionSequence hn = synth_hard_negative(r, kind, derive_seed(seed, "eval-hard", i));
    const double hard_score = discriminate(state.discriminator, positions_matrix(hn.positions()),
                                           cond, pyramid, false, unused);
    real_ok += real_score > 0.5 ? 1 : 0;
    hard_ok += hard_score < 0.5 ? 1 : 0;
    kind_ok[i % 3] += hard_score < 0.5 ? 1 : 0;
    ++kind_total[i % 3];
  }
  const auto n = static_cast<double>(reals.size());
  report.samples = reals.size();
  report.real_accuracy = static_cast<double>(real_ok) / n;
  report.hard_accuracy = static_cast<double>(hard_ok) / n;
  report.accuracy = static_cast<double>(real_ok + hard_ok) / (2.0 * n);
  for (std::size_t k = 0; k < 3; ++k) {
    report.hard_by_kind[k] =
        kind_total[k] ? static_cast<double>(kind_ok[k]) / static_cast<double>(kind_total[k]) : 0.0;
  }
  return report;
}

EvaluationReport evaluate(const std::vector<MotionSequence>& eval_set,
                          const SequenceGenerator& generator, const MainJointSelector& main_joints,
                          std::size_t trials, std::uint64_t seed) {
  require(!eval_set.empty(), ErrorKind::Data, "evaluation set is empty");
  require(trials >= 1, ErrorKind::Usage, "at least one trial is required");
  EvaluationReport report;
  report.trials = trials;
  double phi_g = 0.0;
  double phi_c = 0.0;
  double diversity = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const MotionSequence& x = eval_set[trial % eval_set.size()];
    const std::size_t k = x.frame_count();
    std::vector<std::size_t> rivals;
    for (std::size_t j = 0; j < eval_set.size(); ++j) {
      const bool other = x.label ? eval_set[j].label != x.label : j != trial % eval_set.size();
      if (other && eval_set[j].frame_count() >= k) {
        rivals.push_back(j);
      }
    }
    require(!rivals.empty(), ErrorKind::Data,
            "evaluation needs a real sequence of another label for every input");
    Rng rng = make_rng(seed, "eval-cross", trial);
    std::uniform_int_distribution<std::size_t> pick(0, rivals.size() - 1);
    const MotionSequence& rival = eval_set[rivals[pick(rng)]];

    const MotionSequence y = generator(x, derive_seed(seed, "eval-trial", trial));
    require(y.frame_count() == k, ErrorKind::Data, "generated sequence length differs from input");
    const MotionSequence y2 = generator(x, derive_seed(seed, "eval-diversity", trial));
    const MainJointSet main = main_joints(x);
    const auto px = x.positions();
    const auto py = y.positions();
    const auto py2 = y2.positions();
    const auto pr = trim(rival, k).positions();
    const double g = phi(px, py, main, x.fps);
    const double r = phi(px, pr, main, x.fps);
    phi_g += g;
    phi_c += r;
    report.wins += g < r ? 1 : 0;
    double d = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t j = 0; j < py[t].size(); ++j) {
        d += (py[t][j] - py2[t][j]).norm();
      }
    }
    diversity += d / static_cast<double>(k * py.front().size());
  }
  const auto n = static_cast<double>(trials);
  report.win_rate = static_cast<double>(report.wins) / n;
  report.mean_phi_generated = phi_g / n;
  report.mean_phi_cross = phi_c / n;
  report.diversity = diversity / n;
  const double z = 1.959963984540054;
  const double p = report.win_rate;
  const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
  report.win_rate_low = centre - half;
  report.win_rate_high = centre + half;
  return report;
}

EvaluationReport evaluate(const TrainState& state, const std::vector<MotionSequence>& eval_set,
                          std::size_t trials, std::uint64_t seed) {
  return evaluate(
      eval_set,
      [&state](const MotionSequence& x, std::uint64_t s) { return generate_for(state, x, s); },
      [&state](const MotionSequence& x) { return select_main_joints(state, x); }, trials, seed);
}

std::string evaluation_to_json(const EvaluationReport& r) {
  json doc;
  doc["trials"] = r.trials;
  doc["wins"] = r.wins;
  doc["win_rate"] = r.win_rate;
  doc["win_rate_ci95"] = {r.win_rate_low, r.win_rate_high};
  doc["mean_phi_generated"] = r.mean_phi_generated;
  doc["mean_phi_cross"] = r.mean_phi_cross;
  doc["diversity"] = r.diversity;
  return doc.dump();
}

std::vector<LambdaScore> cross_validate_lambdas(const std::vector<MotionSequence>& train_set,
                                                const std::vector<MotionSequence>& validation_set,
                                                const TrainConfig& base, const AutoencoderModel& codec,
                                                const std::vector<double>& grid, std::size_t trials) {
  require(!grid.empty(), ErrorKind::Usage, "lambda grid is empty");
  std::optional<StnbnnModel> selector;
  if (base.main_joint_mode == MainJointMode::Stnbnn) {
    selector = fit_main_joint_model(train_set, base);
  }
  std::vector<LambdaScore> scores;
  for (double l1 : grid) {
    for (double l2 : grid) {
      TrainConfig config = base;
      config.loss.lambda1 = l1;
      config.loss.lambda2 = l2;
      TrainState state = init_training(config, codec, selector);
      train_gan(state, train_set);
      const EvaluationReport report = evaluate(state, validation_set, trials, config.seed);
      scores.push_back(LambdaScore{l1, l2, report.win_rate});
    }
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const LambdaScore& a, const LambdaScore& b) { return a.win_rate > b.win_rate; });
  return scores;
}

}  // namespace animgan
