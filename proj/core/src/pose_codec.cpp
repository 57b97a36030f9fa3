#include "animgan/pose_codec.hpp"

#include "animgan/error.hpp"
#include "animgan/ndl/optim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace animgan {

using ndl::Matrix;
using ndl::Tape;
using ndl::Var;
using json = nlohmann::json;

namespace {

constexpr int kCodecFormatVersion = 1;

Matrix leaky(const Matrix& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? v : ndl::kLeakySlope * v; });
}

Matrix dense_eval(const ndl::Dense& d, const Matrix& x) {
  return (x * d.weight.value).rowwise() + d.bias.value.row(0);
}

void require_trained(const AutoencoderModel& model) {
  require(model.trained, ErrorKind::Usage, "pose codec has not been trained");
}

json layer_json(const ndl::Dense& d) {
  json layer;
  layer["name"] = d.weight.name.substr(0, d.weight.name.rfind('.'));
  layer["in"] = d.in_width();
  layer["out"] = d.out_width();
  std::vector<double> w;
  for (Eigen::Index i = 0; i < d.weight.value.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.weight.value.cols(); ++j) {
      w.push_back(d.weight.value(i, j));
    }
  }
  layer["weight"] = w;
  layer["bias"] = std::vector<double>(d.bias.value.data(), d.bias.value.data() + d.bias.value.size());
  return layer;
}

void read_layer(const json& layer, ndl::Dense& d) {
  const auto in = layer.at("in").get<Eigen::Index>();
  const auto out = layer.at("out").get<Eigen::Index>();
  require(in == d.in_width() && out == d.out_width(), ErrorKind::Data,
          "codec layer " + d.weight.name + " has shape " + std::to_string(in) + "x" +
              std::to_string(out));
  const auto w = layer.at("weight").get<std::vector<double>>();
  const auto b = layer.at("bias").get<std::vector<double>>();
  require(w.size() == static_cast<std::size_t>(in * out) && b.size() == static_cast<std::size_t>(out),
          ErrorKind::Data, "codec layer " + d.weight.name + " has the wrong number of values");
  for (Eigen::Index i = 0; i < in; ++i) {
    for (Eigen::Index j = 0; j < out; ++j) {
      d.weight.value(i, j) = w[static_cast<std::size_t>(i * out + j)];
    }
  }
  for (Eigen::Index j = 0; j < out; ++j) {
    d.bias.value(0, j) = b[static_cast<std::size_t>(j)];
  }
}

}  // namespace

ndl::ParameterList AutoencoderModel::parameters() {
  ndl::ParameterList out;
  ndl::append(out, encoder_hidden.parameters());
  ndl::append(out, encoder_out.parameters());
  ndl::append(out, decoder_hidden.parameters());
  ndl::append(out, decoder_out.parameters());
  return out;
}

AutoencoderModel make_autoencoder(std::uint64_t seed, double beta, double dropout) {
  require(beta >= 0.0 && std::isfinite(beta), ErrorKind::Usage, "sparsity weight must be >= 0");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Usage, "dropout rate must lie in [0, 1)");
  AutoencoderModel model;
  Rng rng = make_rng(seed, "codec-init");
  model.encoder_hidden.init_xavier(rng);
  model.encoder_out.init_xavier(rng);
  model.decoder_hidden.init_xavier(rng);
  model.decoder_out.init_xavier(rng);
  model.beta = beta;
  model.dropout = dropout;
  return model;
}

Var encode(Tape& tape, AutoencoderModel& model, Var poses, bool training, Rng& rng) {
  Var h = ndl::leaky_relu(model.encoder_hidden.forward(tape, poses));
  h = ndl::dropout(h, model.dropout, rng, training);
  return ndl::leaky_relu(model.encoder_out.forward(tape, h));
}

Var decode_raw(Tape& tape, AutoencoderModel& model, Var embeddings, bool training, Rng& rng) {
  Var h = ndl::leaky_relu(model.decoder_hidden.forward(tape, embeddings));
  h = ndl::dropout(h, model.dropout, rng, training);
  return model.decoder_out.forward(tape, h);
}

CodecLoss autoencoder_loss(Tape& tape, AutoencoderModel& model, const Matrix& poses,
                           bool training, Rng& rng) {
  require(poses.rows() >= 1 && poses.cols() == kPoseWidth, ErrorKind::Usage,
          "autoencoder batch must be n x 84");
  Var x = tape.constant(poses);
  Var a = encode(tape, model, x, training, rng);
  Var out = decode_raw(tape, model, a, training, rng);
  Var recon = ndl::mean(ndl::square(ndl::sub(out, x)));
  Var l1 = ndl::scale(ndl::sum(ndl::abs(a)), 1.0 / static_cast<double>(poses.rows()));
  Var total = model.beta > 0.0 ? ndl::add(recon, ndl::scale(l1, model.beta)) : recon;
  return {total, recon, a};
}

Matrix encode_rows(const AutoencoderModel& model, const Matrix& poses) {
  require(poses.cols() == kPoseWidth, ErrorKind::Usage, "pose rows must have 84 values");
  return leaky(dense_eval(model.encoder_out, leaky(dense_eval(model.encoder_hidden, poses))));
}

Matrix decode_rows(const AutoencoderModel& model, const Matrix& embeddings) {
  require(embeddings.cols() == kEmbeddingWidth, ErrorKind::Usage,
          "embedding rows must have 20 values");
  return dense_eval(model.decoder_out, leaky(dense_eval(model.decoder_hidden, embeddings)));
}

PoseEmbedding encode(const AutoencoderModel& model, const Pose& pose) {
  require_trained(model);
  require(pose.size() == canonical::kJointCount, ErrorKind::Data, "pose must have 21 joints");
  Matrix row(1, kPoseWidth);
  for (std::size_t j = 0; j < pose.size(); ++j) {
    const Quat& q = pose.rotations[j];
    require(is_unit(q), ErrorKind::Data, "pose rotation is not unit length");
    row.block<1, 4>(0, static_cast<Eigen::Index>(4 * j)) << q.w(), q.x(), q.y(), q.z();
  }
  return encode_rows(model, row).row(0).transpose();
}

Pose decode(const AutoencoderModel& model, const PoseEmbedding& embedding) {
  require_trained(model);
  require(embedding.size() == kEmbeddingWidth, ErrorKind::Usage, "embedding must have 20 values");
  require(embedding.allFinite(), ErrorKind::Numeric, "embedding has non-finite values");
  const Matrix raw = decode_rows(model, embedding.transpose());
  return pose_from_row(raw.row(0));
}

Matrix poses_to_rows(const std::vector<Pose>& poses) {
  Matrix rows(static_cast<Eigen::Index>(poses.size()), kPoseWidth);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    require(poses[i].size() == canonical::kJointCount, ErrorKind::Data,
            "pose must have 21 joints");
    for (std::size_t j = 0; j < poses[i].size(); ++j) {
      const Quat& q = poses[i].rotations[j];
      rows.block<1, 4>(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(4 * j))
          << q.w(), q.x(), q.y(), q.z();
    }
  }
  return rows;
}

double bottleneck_sparsity(const AutoencoderModel& model, const Matrix& poses, double threshold) {
  const Matrix a = encode_rows(model, poses);
  const auto small = (a.array().abs() < threshold).count();
  return static_cast<double>(small) / static_cast<double>(a.size());
}

CodecTraining train_autoencoder(const std::vector<Pose>& poses, const CodecConfig& config) {
  require(!poses.empty(), ErrorKind::Data, "pose corpus is empty");
  require(config.learning_rate > 0.0, ErrorKind::Usage, "learning rate must be positive");
  require(config.batch_size > 0, ErrorKind::Usage, "batch size must be positive");

  Matrix all = poses_to_rows(poses);
  if (config.max_poses > 0 && static_cast<std::size_t>(all.rows()) > config.max_poses) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(all.rows()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(config.seed, "codec-subset");
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(config.max_poses);
    std::sort(order.begin(), order.end());
    Matrix subset(static_cast<Eigen::Index>(order.size()), kPoseWidth);
    for (std::size_t i = 0; i < order.size(); ++i) {
      subset.row(static_cast<Eigen::Index>(i)) = all.row(order[i]);
    }
    all = std::move(subset);
  }

  CodecTraining result{make_autoencoder(config.seed, config.beta, config.dropout), {}};
  AutoencoderModel& model = result.model;
  ndl::ParameterList params = model.parameters();
  ndl::OptimizerState opt = ndl::make_constant_adam(config.learning_rate);

  const auto n = static_cast<std::size_t>(all.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (n > config.batch_size) {
      Rng shuffle_rng = make_rng(config.seed, "codec-batching", epoch);
      std::shuffle(order.begin(), order.end(), shuffle_rng);
    }
    for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Matrix rows(static_cast<Eigen::Index>(count), kPoseWidth);
      for (std::size_t i = 0; i < count; ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = all.row(order[start + i]);
      }
      Rng dropout_rng = make_rng(config.seed, "codec-dropout", epoch * 1000003 + batch);
      Tape tape;
      CodecLoss loss = autoencoder_loss(tape, model, rows, true, dropout_rng);
      require(std::isfinite(loss.total.scalar()), ErrorKind::Numeric,
              "autoencoder loss became non-finite at epoch " + std::to_string(epoch));
      ndl::zero_grads(params);
      tape.backward(loss.total);
      ndl::optimizer_step(opt, params, static_cast<std::int64_t>(epoch));
    }

    Rng unused = make_rng(config.seed, "codec-eval");
    Tape tape;
    CodecLoss eval = autoencoder_loss(tape, model, all, false, unused);
    result.history.push_back(CodecEpoch{epoch, eval.total.scalar(), eval.reconstruction.scalar(),
                                        bottleneck_sparsity(model, all)});
  }
  model.trained = true;
  model.epochs = config.epochs;
  if (!result.history.empty()) {
    model.final_loss = result.history.back().loss;
  } else {
    Rng unused = make_rng(config.seed, "codec-eval");
    Tape tape;
    model.final_loss = autoencoder_loss(tape, model, all, false, unused).total.scalar();
  }
  return result;
}

std::string codec_to_json(const AutoencoderModel& model) {
  json doc;
  doc["format"] = "animgan-pose-codec";
  doc["version"] = kCodecFormatVersion;
  doc["beta"] = model.beta;
  doc["dropout"] = model.dropout;
  doc["trained"] = model.trained;
  doc["epochs"] = model.epochs;
  doc["final_loss"] = model.final_loss;
  doc["layers"] = json::array({layer_json(model.encoder_hidden), layer_json(model.encoder_out),
                               layer_json(model.decoder_hidden), layer_json(model.decoder_out)});
  return doc.dump();
}

AutoencoderModel codec_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("pose codec: ") + e.what());
  }
  try {
    require(doc.at("format") == "animgan-pose-codec", ErrorKind::Data, "not a pose codec file");
    require(doc.at("version") == kCodecFormatVersion, ErrorKind::Data,
            "unsupported pose codec version " + doc.at("version").dump());
    AutoencoderModel model;
    model.beta = doc.at("beta").get<double>();
    model.dropout = doc.at("dropout").get<double>();
    model.trained = doc.at("trained").get<bool>();
    model.epochs = doc.at("epochs").get<std::size_t>();
    model.final_loss = doc.at("final_loss").get<double>();
    const auto& layers = doc.at("layers");
    require(layers.size() == 4, ErrorKind::Data, "pose codec must have 4 layers");
    read_layer(layers[0], model.encoder_hidden);
    read_layer(layers[1], model.encoder_out);
    read_layer(layers[2], model.decoder_hidden);
    read_layer(layers[3], model.decoder_out);
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("pose codec: ") + e.what());
  }
}

void save_codec(const std::filesystem::path& path, const AutoencoderModel& model) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + path.string());
  out << codec_to_json(model) << '\n';
  require(static_cast<bool>(out), ErrorKind::Data, "failed writing " + path.string());
}

AutoencoderModel load_codec(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return codec_from_json(buffer.str());
}

void write_history_jsonl(std::ostream& out, const std::vector<CodecEpoch>& history) {
  for (const CodecEpoch& e : history) {
    json row;
    row["epoch"] = e.epoch;
    row["loss"] = e.loss;
    row["reconstruction"] = e.reconstruction;
    row["sparsity"] = e.sparsity;
    out << row.dump() << '\n';
  }
}

}  // namespace animgan
