#include "animgan/checkpoint.hpp"

#include "animgan/error.hpp"

#include <boost/crc.hpp>
#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace animgan {

namespace {

constexpr std::array<char, 4> kMagic{'A', 'G', 'C', 'K'};
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 4;

struct MatrixBlob {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(rows, cols, data);
  }
};

MatrixBlob blob(const Eigen::MatrixXd& m) {
  MatrixBlob b;
  b.rows = m.rows();
  b.cols = m.cols();
  b.data.assign(m.data(), m.data() + m.size());
  return b;
}

Eigen::MatrixXd unblob(const MatrixBlob& b) {
  require(b.rows >= 0 && b.cols >= 0 &&
              static_cast<std::size_t>(b.rows * b.cols) == b.data.size(),
          ErrorKind::Data, "checkpoint: malformed matrix");
  Eigen::MatrixXd m(b.rows, b.cols);
  if (!b.data.empty()) {
    std::memcpy(m.data(), b.data.data(), b.data.size() * sizeof(double));
  }
  return m;
}

std::vector<MatrixBlob> blobs(const std::vector<Eigen::MatrixXd>& ms) {
  std::vector<MatrixBlob> out;
  for (const auto& m : ms) {
    out.push_back(blob(m));
  }
  return out;
}

std::vector<Eigen::MatrixXd> unblobs(const std::vector<MatrixBlob>& bs) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& b : bs) {
    out.push_back(unblob(b));
  }
  return out;
}

std::vector<MatrixBlob> parameter_blobs(const ndl::ParameterList& params) {
  std::vector<MatrixBlob> out;
  for (const ndl::Parameter* p : params) {
    out.push_back(blob(p->value));
  }
  return out;
}

void restore_parameters(const ndl::ParameterList& params, const std::vector<MatrixBlob>& values,
                        const char* what) {
  require(params.size() == values.size(), ErrorKind::Data,
          std::string("checkpoint: ") + what + " parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd m = unblob(values[i]);
    require(m.rows() == params[i]->value.rows() && m.cols() == params[i]->value.cols(),
            ErrorKind::Data, std::string("checkpoint: ") + what + " shape mismatch at " + params[i]->name);
    params[i]->value = std::move(m);
    params[i]->zero_grad();
  }
}

struct OptimizerBlob {
  std::int64_t step = 0;
  std::vector<MatrixBlob> first;
  std::vector<MatrixBlob> second;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(step, first, second);
  }
};

struct ClassBlob {
  std::string label;
  MatrixBlob spatial;
  MatrixBlob temporal;
  std::vector<MatrixBlob> store;
  std::vector<std::uint64_t> members;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(label, spatial, temporal, store, members);
  }
};

struct Payload {
  std::string config_json;
  double codec_beta = 0.0;
  double codec_dropout = 0.0;
  std::uint64_t codec_epochs = 0;
  double codec_final_loss = 0.0;
  std::vector<MatrixBlob> codec;
  bool has_stnbnn = false;
  std::uint64_t stages = 0;
  std::uint64_t main_joints = 0;
  std::uint64_t points_per_stage = 0;
  std::uint64_t joints = 0;
  MatrixBlob spatial;
  MatrixBlob temporal;
  std::vector<ClassBlob> classes;
  std::vector<MatrixBlob> generator;
  std::vector<MatrixBlob> discriminator;
  MatrixBlob input_mean;
  double input_scale = 0.0;
  OptimizerBlob generator_optimizer;
  OptimizerBlob discriminator_optimizer;
  std::int64_t step = 0;
  std::uint64_t metrics_rows = 0;
  double last_hard_accuracy = 0.0;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(config_json, codec_beta, codec_dropout, codec_epochs, codec_final_loss, codec);
    ar(has_stnbnn, stages, main_joints, points_per_stage, joints, spatial, temporal, classes);
    ar(generator, discriminator, input_mean, input_scale, generator_optimizer, discriminator_optimizer);
    ar(step, metrics_rows, last_hard_accuracy);
  }
};

OptimizerBlob optimizer_blob(const ndl::OptimizerState& s) {
  return OptimizerBlob{s.step, blobs(s.first_moment), blobs(s.second_moment)};
}

void restore_optimizer(ndl::OptimizerState& s, const OptimizerBlob& b) {
  s.step = b.step;
  s.first_moment = unblobs(b.first);
  s.second_moment = unblobs(b.second);
}

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

std::uint32_t crc32(const std::string& bytes, std::size_t offset) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data() + offset, bytes.size() - offset);
  return crc.checksum();
}

}  // namespace

std::string serialize_checkpoint(const TrainState& state) {
  TrainState& s = const_cast<TrainState&>(state);
  Payload p;
  p.config_json = config_to_json(state.config);
  p.codec_beta = state.codec.beta;
  p.codec_dropout = state.codec.dropout;
  p.codec_epochs = state.codec.epochs;
  p.codec_final_loss = state.codec.final_loss;
  p.codec = parameter_blobs(s.codec.parameters());
  if (state.stnbnn) {
    const StnbnnModel& m = *state.stnbnn;
    p.has_stnbnn = m.trained;
    p.stages = m.stages;
    p.main_joints = m.main_joints;
    p.points_per_stage = m.points_per_stage;
    p.joints = m.joints;
    p.spatial = blob(m.spatial);
    p.temporal = blob(m.temporal);
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
      ClassBlob cb;
      cb.label = m.classes[c].label;
      cb.spatial = blob(m.classes[c].spatial);
      cb.temporal = blob(m.classes[c].temporal);
      cb.store = blobs(m.store[c]);
      cb.members.assign(m.members[c].begin(), m.members[c].end());
      p.classes.push_back(std::move(cb));
    }
  }
  p.generator = parameter_blobs(s.generator.parameters());
  p.discriminator = parameter_blobs(s.discriminator.parameters());
  p.input_mean = blob(state.discriminator.input_mean);
  p.input_scale = state.discriminator.input_scale;
  p.generator_optimizer = optimizer_blob(state.generator_optimizer);
  p.discriminator_optimizer = optimizer_blob(state.discriminator_optimizer);
  p.step = state.step;
  p.metrics_rows = state.metrics_rows;
  p.last_hard_accuracy = state.last_hard_accuracy;

  std::ostringstream os(std::ios::binary);
  {
    cereal::PortableBinaryOutputArchive ar(os);
    ar(p);
  }
  const std::string payload = os.str();
  std::string out(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, payload.size());
  boost::crc_32_type crc;
  crc.process_bytes(payload.data(), payload.size());
  put<std::uint32_t>(out, crc.checksum());
  out += payload;
  return out;
}

TrainState deserialize_checkpoint(const std::string& bytes) {
  require(bytes.size() >= kHeaderSize && std::equal(kMagic.begin(), kMagic.end(), bytes.begin()),
          ErrorKind::Data, "checkpoint: not a checkpoint file");
  const auto version = get<std::uint32_t>(bytes, 4);
  require(version == kCheckpointVersion, ErrorKind::Data,
          "checkpoint: unsupported version " + std::to_string(version));
  const auto size = get<std::uint64_t>(bytes, 8);
  require(size == bytes.size() - kHeaderSize, ErrorKind::Data, "checkpoint: truncated payload");
  const auto expected = get<std::uint32_t>(bytes, 16);
  require(crc32(bytes, kHeaderSize) == expected, ErrorKind::Data, "checkpoint: checksum mismatch");

  Payload p;
  try {
    std::istringstream is(bytes.substr(kHeaderSize), std::ios::binary);
    cereal::PortableBinaryInputArchive ar(is);
    ar(p);
  } catch (const std::exception& e) {
    fail(ErrorKind::Data, std::string("checkpoint: corrupt payload: ") + e.what());
  }

  const TrainConfig config = config_from_json(p.config_json, TrainConfig{});
  AutoencoderModel codec = make_autoencoder(0, p.codec_beta, p.codec_dropout);
  restore_parameters(codec.parameters(), p.codec, "codec");
  codec.trained = true;
  codec.epochs = p.codec_epochs;
  codec.final_loss = p.codec_final_loss;

  std::optional<StnbnnModel> stnbnn;
  if (p.has_stnbnn) {
    StnbnnModel m;
    m.stages = p.stages;
    m.main_joints = p.main_joints;
    m.points_per_stage = p.points_per_stage;
    m.joints = p.joints;
    m.spatial = unblob(p.spatial);
    m.temporal = unblob(p.temporal);
    for (const ClassBlob& cb : p.classes) {
      m.classes.push_back(ClassWeights{cb.label, unblob(cb.spatial), unblob(cb.temporal)});
      m.store.push_back(unblobs(cb.store));
      m.members.emplace_back(cb.members.begin(), cb.members.end());
    }
    m.trained = true;
    stnbnn = std::move(m);
  }

  TrainState state = init_training(config, std::move(codec), std::move(stnbnn));
  restore_parameters(state.generator.parameters(), p.generator, "generator");
  restore_parameters(state.discriminator.parameters(), p.discriminator, "discriminator");
  const Eigen::MatrixXd mean = unblob(p.input_mean);
  require(mean.rows() == 1 && mean.cols() == state.discriminator.input_mean.size(), ErrorKind::Data,
          "checkpoint: discriminator input normalization shape mismatch");
  state.discriminator.input_mean = mean.row(0);
  state.discriminator.input_scale = p.input_scale;
  restore_optimizer(state.generator_optimizer, p.generator_optimizer);
  restore_optimizer(state.discriminator_optimizer, p.discriminator_optimizer);
  state.step = p.step;
  state.metrics_rows = p.metrics_rows;
  state.last_hard_accuracy = p.last_hard_accuracy;
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  const std::string bytes = serialize_checkpoint(state);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Data, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::Data, "cannot move checkpoint into place: " + ec.message());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace animgan
