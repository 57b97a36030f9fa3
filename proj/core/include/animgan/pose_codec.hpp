#pragma once

#include "animgan/motion.hpp"
#include "animgan/ndl/layers.hpp"

#include <filesystem>
#include <iosfwd>

namespace animgan {

inline constexpr Eigen::Index kPoseWidth = 84;       // 21 joints x (w, x, y, z)
inline constexpr Eigen::Index kEmbeddingWidth = 20;
inline constexpr Eigen::Index kCodecHidden = 48;

using PoseEmbedding = Eigen::VectorXd;

struct CodecConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 4096;
  double beta = 1e-3;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  /// Random subset of the corpus to train on; 0 keeps every pose.
  std::size_t max_poses = 0;
};

/// L1-sparse autoencoder 84 -> 48 -> 20 -> 48 -> 84 with LeakyReLU hidden layers.
struct AutoencoderModel {
  ndl::Dense encoder_hidden{"codec.encoder_hidden", kPoseWidth, kCodecHidden};
  ndl::Dense encoder_out{"codec.encoder_out", kCodecHidden, kEmbeddingWidth};
  ndl::Dense decoder_hidden{"codec.decoder_hidden", kEmbeddingWidth, kCodecHidden};
  ndl::Dense decoder_out{"codec.decoder_out", kCodecHidden, kPoseWidth};
  double beta = 1e-3;
  double dropout = 0.5;
  bool trained = false;
  std::size_t epochs = 0;
  double final_loss = 0.0;

  ndl::ParameterList parameters();
};

/// Freshly initialized (untrained) model.
AutoencoderModel make_autoencoder(std::uint64_t seed, double beta = 1e-3, double dropout = 0.5);

/// Tape forward passes; rows are poses. rng is only drawn from when training.
ndl::Var encode(ndl::Tape& tape, AutoencoderModel& model, ndl::Var poses, bool training, Rng& rng);
ndl::Var decode_raw(ndl::Tape& tape, AutoencoderModel& model, ndl::Var embeddings, bool training,
                    Rng& rng);

struct CodecLoss {
  ndl::Var total;
  ndl::Var reconstruction;  // mean squared error over all entries
  ndl::Var embeddings;
};
/// MSE reconstruction + beta * (batch mean of the bottleneck L1 norm).
CodecLoss autoencoder_loss(ndl::Tape& tape, AutoencoderModel& model, const ndl::Matrix& poses,
                           bool training, Rng& rng);

/// Inference-mode batch evaluation; rows are poses / embeddings.
ndl::Matrix encode_rows(const AutoencoderModel& model, const ndl::Matrix& poses);
/// Raw decoder outputs, before per-joint renormalization.
ndl::Matrix decode_rows(const AutoencoderModel& model, const ndl::Matrix& embeddings);

PoseEmbedding encode(const AutoencoderModel& model, const Pose& pose);
Pose decode(const AutoencoderModel& model, const PoseEmbedding& embedding);

struct CodecEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double reconstruction = 0.0;
  /// Fraction of bottleneck activations with magnitude below 1e-3.
  double sparsity = 0.0;
};

struct CodecTraining {
  AutoencoderModel model;
  std::vector<CodecEpoch> history;
};

/// Adam at a constant rate; the whole corpus is one batch up to batch_size poses.
/// History losses are measured in inference mode after each epoch.
CodecTraining train_autoencoder(const std::vector<Pose>& poses, const CodecConfig& config);

/// Fraction of bottleneck activations with magnitude below threshold.
double bottleneck_sparsity(const AutoencoderModel& model, const ndl::Matrix& poses,
                           double threshold = 1e-3);

ndl::Matrix poses_to_rows(const std::vector<Pose>& poses);

void save_codec(const std::filesystem::path& path, const AutoencoderModel& model);
AutoencoderModel load_codec(const std::filesystem::path& path);
std::string codec_to_json(const AutoencoderModel& model);
AutoencoderModel codec_from_json(std::string_view text);
void write_history_jsonl(std::ostream& out, const std::vector<CodecEpoch>& history);

}  // namespace animgan
