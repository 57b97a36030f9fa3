#include "cli.hpp"

#include "animgan/augmentation.hpp"
#include "animgan/bvh.hpp"
#include "animgan/checkpoint.hpp"
#include "animgan/dataset.hpp"
#include "animgan/error.hpp"
#include "animgan/gradient_suites.hpp"
#include "animgan/pose_codec.hpp"
#include "animgan/toy_corpus.hpp"
#include "animgan/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace animgan::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Usage, "cannot read config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, path.string() + ": " + e.what());
  }
}

void check_known_keys(const json& defaults, const json& given, const std::string& where) {
  require(given.is_object(), ErrorKind::Usage, "config" + where + " must be a JSON object");
  for (const auto& [key, value] : given.items()) {
    require(defaults.contains(key), ErrorKind::Usage, "unknown config key '" + where + key + "'");
    if (defaults.at(key).is_object()) {
      check_known_keys(defaults.at(key), value, where + key + ".");
    }
  }
}

// Built-in defaults, then the config file, then explicit flags.
json resolve(json defaults, const std::string& config_path, const json& overrides) {
  if (!config_path.empty()) {
    const json file = read_json_file(config_path);
    check_known_keys(defaults, file, "");
    defaults.merge_patch(file);
  }
  defaults.merge_patch(overrides);
  return defaults;
}

template <typename T>
T get(const json& config, const char* key) {
  try {
    return config.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, std::string("config '") + key + "': " + e.what());
  }
}

void print_config(std::ostream& out, const std::string& command, const json& config,
                  const json& paths) {
  json doc;
  doc["command"] = command;
  doc["config"] = config;
  doc["paths"] = paths;
  out << doc.dump() << std::endl;
}

std::vector<fs::path> bvh_files(const fs::path& input) {
  require(fs::exists(input), ErrorKind::Data, "input not found: " + input.string());
  if (!fs::is_directory(input)) {
    return {input};
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".bvh") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorKind::Data, "no .bvh files in " + input.string());
  return files;
}

bool same_directory(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::exists(a) && fs::exists(b) && fs::equivalent(a, b, ec);
}

void require_distinct_output(const fs::path& out, const std::vector<fs::path>& inputs) {
  for (const auto& in : inputs) {
    const fs::path dir = fs::is_directory(in) ? in : in.parent_path();
    require(!same_directory(out, dir.empty() ? fs::path(".") : dir), ErrorKind::Usage,
            "output directory " + out.string() + " would overwrite inputs in " + dir.string());
  }
}

JointMap load_joint_map(const std::string& path) {
  if (path.empty()) {
    return canonical_identity_map();
  }
  JointMap map;
  const json doc = read_json_file(path);
  require(doc.is_object(), ErrorKind::Usage, "joint map must map source names to canonical names");
  for (const auto& [from, to] : doc.items()) {
    require(to.is_string(), ErrorKind::Usage, "joint map value for '" + from + "' is not a string");
    map[from] = to.get<std::string>();
  }
  return map;
}

MotionSequence to_canonical(const bvh::Document& doc, const JointMap& map) {
  if (canonical::is_canonical(*doc.skeleton)) {
    return doc.motion;
  }
  return retarget_to_canonical(*doc.skeleton, doc.motion, map);
}

std::vector<MotionSequence> load_motions(const fs::path& dir) {
  std::vector<MotionSequence> motions = motions_of(load_dataset(dir));
  require(!motions.empty(), ErrorKind::Data, "dataset " + dir.string() + " is empty");
  return motions;
}

json codec_config_json(const CodecConfig& c) {
  json doc;
  doc["learning_rate"] = c.learning_rate;
  doc["epochs"] = c.epochs;
  doc["batch_size"] = c.batch_size;
  doc["beta"] = c.beta;
  doc["dropout"] = c.dropout;
  doc["seed"] = c.seed;
  doc["max_poses"] = c.max_poses;
  return doc;
}

CodecConfig codec_config_from(const json& doc) {
  CodecConfig c;
  c.learning_rate = get<double>(doc, "learning_rate");
  c.epochs = get<std::size_t>(doc, "epochs");
  c.batch_size = get<std::size_t>(doc, "batch_size");
  c.beta = get<double>(doc, "beta");
  c.dropout = get<double>(doc, "dropout");
  c.seed = get<std::uint64_t>(doc, "seed");
  c.max_poses = get<std::size_t>(doc, "max_poses");
  return c;
}

json discriminator_report_json(const DiscriminatorReport& r) {
  json doc;
  doc["real_accuracy"] = r.real_accuracy;
  doc["hard_accuracy"] = r.hard_accuracy;
  doc["accuracy"] = r.accuracy;
  doc["hard_by_kind"] = {{"reversal", r.hard_by_kind[0]},
                         {"big_noise", r.hard_by_kind[1]},
                         {"bounce", r.hard_by_kind[2]}};
  doc["samples"] = r.samples;
  return doc;
}

// Keeps the first `rows` lines of a metrics log, so a resumed run appends exactly where
// its checkpoint left off.
void truncate_metrics(const fs::path& path, std::size_t rows) {
  std::vector<std::string> lines;
  if (fs::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (lines.size() < rows && std::getline(in, line)) {
      lines.push_back(line);
    }
  }
  require(lines.size() == rows, ErrorKind::Data,
          path.string() + " holds fewer metric rows than the checkpoint expects");
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : lines) {
    out << l << '\n';
  }
}

// Options collected while parsing; each command reads only its own.
struct Options {
  std::string config;
  std::vector<std::string> inputs;
  std::string input;
  std::string out;
  std::string data;
  std::string codec;
  std::string checkpoint;
  std::string resume;
  std::string joint_map;
  std::string history;
  std::string suite;
  std::int64_t stop_at = -1;
  json overrides = json::object();
};

template <typename T>
void setting(CLI::App* cmd, const std::string& flag, Options& o, const std::string& pointer,
             const std::string& help) {
  cmd->add_option_function<T>(
      flag, [&o, pointer](const T& v) { o.overrides[json::json_pointer(pointer)] = v; }, help);
}

void add_config(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file (flags take precedence)");
}

int cmd_toy_corpus(const Options& o, std::ostream& out) {
  const ToyCorpusConfig d;
  json defaults;
  defaults["families"] = d.families;
  defaults["per_family"] = d.per_family;
  defaults["frames"] = d.frames;
  defaults["seed"] = d.seed;
  defaults["jitter_degrees"] = d.jitter_degrees;
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "toy-corpus", cfg, {{"out", o.out}});

  ToyCorpusConfig c;
  c.families = get<std::size_t>(cfg, "families");
  c.per_family = get<std::size_t>(cfg, "per_family");
  c.frames = get<std::size_t>(cfg, "frames");
  c.seed = get<std::uint64_t>(cfg, "seed");
  c.jitter_degrees = get<double>(cfg, "jitter_degrees");
  const auto motions = make_toy_corpus(c);
  write_dataset(o.out, dataset_from_motions(motions, "toy"));
  out << json{{"sequences", motions.size()}, {"out", o.out}}.dump() << std::endl;
  return kOk;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  json defaults;
  defaults["fps"] = kTargetFps;
  defaults["max_frames"] = kMaxFrames;
  defaults["label"] = "";
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "ingest", cfg, {{"inputs", o.inputs}, {"out", o.out}, {"joint_map", o.joint_map}});

  const double fps = get<double>(cfg, "fps");
  const auto max_frames = get<std::size_t>(cfg, "max_frames");
  const auto label = get<std::string>(cfg, "label");
  require(fps > 0.0, ErrorKind::Usage, "fps must be positive");
  require(max_frames >= 1, ErrorKind::Usage, "max_frames must be at least 1");

  std::vector<fs::path> inputs(o.inputs.begin(), o.inputs.end());
  require_distinct_output(o.out, inputs);
  const JointMap map = load_joint_map(o.joint_map);

  Dataset dataset;
  for (const auto& input : inputs) {
    for (const auto& file : bvh_files(input)) {
      const bvh::Document doc = bvh::read_file(file);
      MotionSequence m = trim(resample(to_canonical(doc, map), fps), max_frames);
      if (!label.empty()) {
        m.label = label;
      }
      DatasetEntry e;
      e.id = file.stem().string();
      e.motion = std::move(m);
      e.parents = {file.string()};
      e.op = "ingest";
      dataset.push_back(std::move(e));
    }
  }
  write_dataset(o.out, dataset);
  json rows = json::array();
  for (const auto& e : dataset) {
    rows.push_back({{"id", e.id}, {"frames", e.motion.frame_count()}, {"fps", e.motion.fps}});
  }
  out << json{{"sequences", rows}}.dump() << std::endl;
  return kOk;
}

int cmd_train_codec(const Options& o, std::ostream& out) {
  const json cfg = resolve(codec_config_json(CodecConfig{}), o.config, o.overrides);
  print_config(out, "train-codec", cfg, {{"data", o.data}, {"out", o.out}, {"history", o.history}});
  const CodecConfig c = codec_config_from(cfg);

  std::vector<Pose> poses;
  for (const auto& m : load_motions(o.data)) {
    require(canonical::is_canonical(*m.skeleton), ErrorKind::Data, "codec training needs canonical-rig data");
    poses.insert(poses.end(), m.frames.begin(), m.frames.end());
  }
  const CodecTraining trained = train_autoencoder(poses, c);
  save_codec(o.out, trained.model);
  if (!o.history.empty()) {
    std::ofstream h(o.history);
    require(static_cast<bool>(h), ErrorKind::Data, "cannot write " + o.history);
    write_history_jsonl(h, trained.history);
  }
  const CodecEpoch& last = trained.history.back();
  out << json{{"epochs", trained.history.size()},
              {"loss", last.loss},
              {"reconstruction", last.reconstruction},
              {"sparsity", last.sparsity},
              {"out", o.out}}
             .dump()
      << std::endl;
  return kOk;
}

int cmd_train_gan(const Options& o, std::ostream& out) {
  const fs::path run_dir = o.out;
  const fs::path metrics_path = run_dir / "metrics.jsonl";
  TrainState state;
  std::vector<MotionSequence> motions;
  if (!o.resume.empty()) {
    require(o.config.empty() && o.overrides.empty(), ErrorKind::Usage,
            "a resumed run keeps its checkpointed config; drop --config and setting flags");
    state = load_checkpoint(o.resume);
    print_config(out, "train-gan", json::parse(config_to_json(state.config)),
                 {{"data", o.data}, {"out", o.out}, {"resume", o.resume}});
    motions = load_motions(o.data);
  } else {
    const json defaults = json::parse(config_to_json(TrainConfig{}));
    const json cfg = resolve(defaults, o.config, o.overrides);
    TrainConfig c = config_from_json(cfg.dump());
    c.validate();
    print_config(out, "train-gan", json::parse(config_to_json(c)),
                 {{"data", o.data}, {"codec", o.codec}, {"out", o.out}});
    require(!o.codec.empty(), ErrorKind::Usage, "--codec is required for a fresh run");
    AutoencoderModel codec = load_codec(o.codec);
    motions = load_motions(o.data);
    std::optional<StnbnnModel> selector;
    if (c.main_joint_mode == MainJointMode::Stnbnn) {
      selector = fit_main_joint_model(motions, c);
    }
    state = init_training(c, std::move(codec), std::move(selector));
  }
  fs::create_directories(run_dir);
  {
    std::ofstream cfg_out(run_dir / "config.json");
    cfg_out << config_to_json(state.config) << '\n';
  }
  truncate_metrics(metrics_path, state.metrics_rows);
  std::ofstream metrics(metrics_path, std::ios::app);
  require(static_cast<bool>(metrics), ErrorKind::Data, "cannot write " + metrics_path.string());

  TrainHooks hooks;
  hooks.checkpoint_dir = run_dir;
  if (o.stop_at >= 0) {
    hooks.stop_at = o.stop_at;
  }
  hooks.on_metrics = [&](const MetricsRecord& r) { metrics << metrics_to_json(r) << '\n' << std::flush; };
  const auto records = train_gan(state, motions, hooks);
  json summary;
  summary["step"] = state.step;
  summary["rows_written"] = records.size();
  summary["checkpoint"] = (run_dir / "latest.ckpt").string();
  if (!records.empty()) {
    summary["last"] = json::parse(metrics_to_json(records.back()));
  }
  out << summary.dump() << std::endl;
  return kOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  json defaults;
  defaults["seed"] = 0;
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "generate", cfg,
               {{"input", o.input}, {"out", o.out}, {"checkpoint", o.checkpoint}, {"joint_map", o.joint_map}});
  require(!same_directory(o.input, o.out), ErrorKind::Usage, "--out must differ from --input");

  const TrainState state = load_checkpoint(o.checkpoint);
  const bvh::Document doc = bvh::read_file(o.input);
  const MotionSequence input =
      trim(resample(to_canonical(doc, load_joint_map(o.joint_map)), kTargetFps), kMaxFrames);
  const MotionSequence generated = generate_for(state, input, get<std::uint64_t>(cfg, "seed"));
  bvh::write_file(o.out, *generated.skeleton, generated);
  out << json{{"frames", generated.frame_count()}, {"fps", generated.fps}, {"out", o.out}}.dump()
      << std::endl;
  return kOk;
}

int cmd_augment(const Options& o, std::ostream& out) {
  const ClusterSchedule schedule;
  json defaults;
  defaults["target_size"] = 0;
  defaults["seed"] = 0;
  defaults["clusters_start"] = schedule.start;
  defaults["clusters_increment"] = schedule.increment;
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "augment", cfg, {{"data", o.data}, {"codec", o.codec}, {"out", o.out}});
  require_distinct_output(o.out, {fs::path(o.data)});

  const Dataset source = load_dataset(o.data);
  require(!source.empty(), ErrorKind::Data, "dataset " + o.data + " is empty");
  const AutoencoderModel codec = load_codec(o.codec);
  ClusterSchedule s;
  s.start = get<std::size_t>(cfg, "clusters_start");
  s.increment = get<std::size_t>(cfg, "clusters_increment");
  const auto target = get<std::size_t>(cfg, "target_size");
  require(target >= source.size(), ErrorKind::Usage,
          "target_size must be at least the dataset size (" + std::to_string(source.size()) + ")");
  const BalanceResult result =
      balance_dataset(motions_of(source), codec, s, target, get<std::uint64_t>(cfg, "seed"));

  Dataset augmented = source;
  for (const auto& r : result.records) {
    DatasetEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "aug-%05zu", r.index);
    e.id = id;
    e.motion = result.dataset[r.index];
    e.op = to_string(r.op);
    for (std::size_t p : r.parents) {
      e.parents.push_back(augmented[p].id);
    }
    e.seed = r.seed;
    augmented.push_back(std::move(e));
  }
  write_dataset(o.out, augmented);
  out << json{{"original", source.size()}, {"synthesized", result.records.size()}, {"out", o.out}}.dump()
      << std::endl;
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  json defaults;
  defaults["trials"] = 100;
  defaults["seed"] = 0;
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "evaluate", cfg, {{"checkpoint", o.checkpoint}, {"data", o.data}});
  const TrainState state = load_checkpoint(o.checkpoint);
  const auto motions = load_motions(o.data);
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const EvaluationReport report = evaluate(state, motions, get<std::size_t>(cfg, "trials"), seed);
  json doc;
  doc["evaluation"] = json::parse(evaluation_to_json(report));
  doc["discriminator"] = discriminator_report_json(discriminator_accuracy(state, motions, seed));
  out << doc.dump() << std::endl;
  return kOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  json defaults;
  defaults["seed"] = 0;
  defaults["points"] = 3;
  defaults["tolerance"] = kGradientTolerance;
  const json cfg = resolve(defaults, o.config, o.overrides);
  print_config(out, "gradcheck", cfg, {{"suite", o.suite}});
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const auto points = get<std::size_t>(cfg, "points");
  const auto tolerance = get<double>(cfg, "tolerance");
  std::vector<std::string> suites = gradient_suite_names();
  if (!o.suite.empty()) {
    require(std::find(suites.begin(), suites.end(), o.suite) != suites.end(), ErrorKind::Usage,
            "unknown suite '" + o.suite + "'");
    suites = {o.suite};
  }
  std::size_t failed = 0;
  for (const auto& name : suites) {
    for (std::size_t p = 0; p < points; ++p) {
      const GradientSuiteResult r = run_gradient_suite(name, seed, p, tolerance);
      failed += r.passed ? 0 : 1;
      out << gradient_result_to_json(r) << std::endl;
    }
  }
  out << json{{"passed", failed == 0}, {"failed", failed}}.dump() << std::endl;
  require(failed == 0, ErrorKind::Numeric,
          std::to_string(failed) + " gradient check(s) exceeded the tolerance");
  return kOk;
}

void report_error(std::ostream& err, const std::string& command, const std::string& kind,
                  const std::string& message, int code) {
  json doc;
  doc["error"] = kind;
  doc["message"] = message;
  doc["command"] = command;
  doc["exit_code"] = code;
  err << doc.dump() << std::endl;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kUsage;
    case ErrorKind::Data: return kData;
    case ErrorKind::Numeric: return kNumeric;
  }
  return kData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditioned skeletal animation synthesis", "animgan"};
  app.require_subcommand(1);
  Options o;
  std::map<CLI::App*, std::function<int()>> actions;

  auto* toy = app.add_subcommand("toy-corpus", "Write the procedural labeled corpus");
  add_config(toy, o);
  toy->add_option("--out", o.out, "Output dataset directory")->required();
  setting<std::size_t>(toy, "--families", o, "/families", "Motion families");
  setting<std::size_t>(toy, "--per-family", o, "/per_family", "Sequences per family");
  setting<std::size_t>(toy, "--frames", o, "/frames", "Frames per sequence");
  setting<std::uint64_t>(toy, "--seed", o, "/seed", "Random seed");
  actions[toy] = [&] { return cmd_toy_corpus(o, out); };

  auto* ingest = app.add_subcommand("ingest", "Parse, retarget, resample to 5 fps and trim BVH files");
  add_config(ingest, o);
  ingest->add_option("--input", o.inputs, "BVH file or directory (repeatable)")->required();
  ingest->add_option("--out", o.out, "Output dataset directory")->required();
  ingest->add_option("--joint-map", o.joint_map, "JSON object mapping source to canonical joint names");
  setting<std::string>(ingest, "--label", o, "/label", "Label for every ingested sequence");
  setting<double>(ingest, "--fps", o, "/fps", "Target frame rate");
  setting<std::size_t>(ingest, "--max-frames", o, "/max_frames", "Frame cap");
  actions[ingest] = [&] { return cmd_ingest(o, out); };

  auto* codec = app.add_subcommand("train-codec", "Train the sparse pose autoencoder");
  add_config(codec, o);
  codec->add_option("--data", o.data, "Dataset directory")->required();
  codec->add_option("--out", o.out, "Output codec file (JSON)")->required();
  codec->add_option("--history", o.history, "Per-epoch history (JSONL)");
  setting<double>(codec, "--lr", o, "/learning_rate", "Learning rate");
  setting<std::size_t>(codec, "--epochs", o, "/epochs", "Epochs");
  setting<std::size_t>(codec, "--batch-size", o, "/batch_size", "Poses per batch");
  setting<double>(codec, "--beta", o, "/beta", "Bottleneck L1 weight");
  setting<std::uint64_t>(codec, "--seed", o, "/seed", "Random seed");
  setting<std::size_t>(codec, "--max-poses", o, "/max_poses", "Random pose subset (0 keeps all)");
  actions[codec] = [&] { return cmd_train_codec(o, out); };

  auto* gan = app.add_subcommand("train-gan", "Adversarial training with checkpoints and metrics");
  add_config(gan, o);
  gan->add_option("--data", o.data, "Dataset directory")->required();
  gan->add_option("--codec", o.codec, "Trained codec file");
  gan->add_option("--out", o.out, "Run directory")->required();
  gan->add_option("--resume", o.resume, "Checkpoint to continue from");
  gan->add_option("--stop-at", o.stop_at, "Stop after this step");
  setting<std::int64_t>(gan, "--steps", o, "/total_steps", "Total training steps");
  setting<std::size_t>(gan, "--batch-size", o, "/batch_size", "Sequences per batch");
  setting<std::size_t>(gan, "--frames", o, "/frames", "Frames per training sequence");
  setting<std::uint64_t>(gan, "--seed", o, "/seed", "Random seed");
  setting<double>(gan, "--lambda1", o, "/loss/lambda1", "Conditioning weight");
  setting<double>(gan, "--lambda2", o, "/loss/lambda2", "Smoothness weight");
  setting<std::int64_t>(gan, "--checkpoint-every", o, "/checkpoint_every", "Checkpoint interval (0 = end only)");
  setting<std::string>(gan, "--main-joint-mode", o, "/main_joint_mode", "stnbnn or motion_energy");
  actions[gan] = [&] { return cmd_train_gan(o, out); };

  auto* gen = app.add_subcommand("generate", "Generate an animation conditioned on a BVH file");
  add_config(gen, o);
  gen->add_option("--input", o.input, "Input BVH")->required();
  gen->add_option("--out", o.out, "Output BVH")->required();
  gen->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  gen->add_option("--joint-map", o.joint_map, "JSON object mapping source to canonical joint names");
  setting<std::uint64_t>(gen, "--seed", o, "/seed", "Noise seed");
  actions[gen] = [&] { return cmd_generate(o, out); };

  auto* aug = app.add_subcommand("augment", "Balance a dataset by clustering and synthesis");
  add_config(aug, o);
  aug->add_option("--data", o.data, "Dataset directory")->required();
  aug->add_option("--codec", o.codec, "Trained codec file")->required();
  aug->add_option("--out", o.out, "Output dataset directory")->required();
  setting<std::size_t>(aug, "--target", o, "/target_size", "Final dataset size");
  setting<std::uint64_t>(aug, "--seed", o, "/seed", "Random seed");
  setting<std::size_t>(aug, "--clusters-start", o, "/clusters_start", "Clusters in the first round");
  setting<std::size_t>(aug, "--clusters-increment", o, "/clusters_increment", "Clusters added per round");
  actions[aug] = [&] { return cmd_augment(o, out); };

  auto* eval = app.add_subcommand("evaluate", "Win-rate proxy and discriminator accuracy");
  add_config(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  eval->add_option("--data", o.data, "Evaluation dataset directory")->required();
  setting<std::size_t>(eval, "--trials", o, "/trials", "Evaluation trials");
  setting<std::uint64_t>(eval, "--seed", o, "/seed", "Random seed");
  actions[eval] = [&] { return cmd_evaluate(o, out); };

  auto* grad = app.add_subcommand("gradcheck", "Run the finite-difference gradient suites");
  add_config(grad, o);
  grad->add_option("--suite", o.suite, "Run a single suite");
  setting<std::uint64_t>(grad, "--seed", o, "/seed", "Random seed");
  setting<std::size_t>(grad, "--points", o, "/points", "Random parameter points per suite");
  actions[grad] = [&] { return cmd_gradcheck(o, out); };

  std::string command;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    CLI::App* chosen = app.get_subcommands().front();
    command = chosen->get_name();
    return actions.at(chosen)();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, command, "usage", e.what(), kUsage);
    return kUsage;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report_error(err, command, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(err, command, "data", e.what(), kData);
    return kData;
  } catch (const json::exception& e) {
    report_error(err, command, "usage", e.what(), kUsage);
    return kUsage;
  } catch (const std::exception& e) {
    report_error(err, command, "data", e.what(), kData);
    return kData;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run(args, out, err);
}

}  // namespace animgan::cli
