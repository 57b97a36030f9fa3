#include "animgan/stnbnn.hpp"

#include "animgan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numeric>

namespace animgan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

StageDescriptors extract_stage_descriptors(const std::vector<JointPositions>& positions,
                                           std::size_t stages, std::size_t points_per_stage) {
  require(stages >= 1, ErrorKind::Usage, "stage count must be at least 1");
  const std::size_t n = positions.size();
  require(n >= stages, ErrorKind::Data,
          std::to_string(n) + " frames cannot be split into " + std::to_string(stages) + " stages");
  const std::size_t joints = positions.front().size();
  const std::size_t points = points_per_stage > 0 ? points_per_stage : (n + stages - 1) / stages;

  StageDescriptors out;
  out.stages = stages;
  out.joints = joints;
  out.points_per_stage = points;
  out.rows.resize(static_cast<Eigen::Index>(stages * joints), static_cast<Eigen::Index>(3 * points));
  for (std::size_t t = 0; t < stages; ++t) {
    const std::size_t begin = t * n / stages;
    const std::size_t end = (t + 1) * n / stages;
    const std::size_t length = end - begin;
    for (std::size_t i = 0; i < points; ++i) {
      std::size_t lo = begin + std::min(i, length - 1);
      std::size_t hi = lo;
      double frac = 0.0;
      if (length != points) {
        const double s = points == 1 ? 0.0
                                     : static_cast<double>(i) * static_cast<double>(length - 1) /
                                           static_cast<double>(points - 1);
        lo = begin + static_cast<std::size_t>(std::floor(s));
        hi = std::min(lo + 1, end - 1);
        frac = s - std::floor(s);
      }
      for (std::size_t j = 0; j < joints; ++j) {
        const Vec3 p = (1.0 - frac) * positions[lo][j] + frac * positions[hi][j];
        out.rows.block<1, 3>(static_cast<Eigen::Index>(t * joints + j),
                             static_cast<Eigen::Index>(3 * i)) = p.transpose();
      }
    }
  }
  require(out.rows.allFinite(), ErrorKind::Numeric, "stage descriptors are not finite");
  return out;
}

StageDescriptors extract_stage_descriptors(const MotionSequence& motion, std::size_t stages,
                                           std::size_t points_per_stage) {
  return extract_stage_descriptors(motion.positions(), stages, points_per_stage);
}

MatrixXd class_distances(const StnbnnModel& model, const StageDescriptors& query,
                         std::size_t class_index, std::optional<std::size_t> exclude_member) {
  require(class_index < model.store.size(), ErrorKind::Usage, "class index out of range");
  require(query.joints == model.joints && query.stages == model.stages &&
              query.points_per_stage == model.points_per_stage,
          ErrorKind::Usage, "query descriptors do not match the model layout");
  const auto& per_joint = model.store[class_index];
  const auto stages = static_cast<Eigen::Index>(model.stages);
  MatrixXd out(static_cast<Eigen::Index>(model.joints), stages);
  for (std::size_t j = 0; j < model.joints; ++j) {
    const MatrixXd& store = per_joint[j];
    for (Eigen::Index t = 0; t < stages; ++t) {
      const auto q = query.at(static_cast<std::size_t>(t), j);
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < store.rows(); ++r) {
        if (exclude_member && r / stages == static_cast<Eigen::Index>(*exclude_member)) {
          continue;
        }
        best = std::min(best, (store.row(r) - q).squaredNorm());
      }
      out(static_cast<Eigen::Index>(j), t) = best;
    }
  }
  return out;
}

std::size_t nearest_class(const StnbnnModel& model, const StageDescriptors& query) {
  require(!model.store.empty(), ErrorKind::Usage, "model has no descriptor store");
  std::size_t best = 0;
  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.store.size(); ++c) {
    const double total = class_distances(model, query, c).sum();
    if (total < best_total) {
      best_total = total;
      best = c;
    }
  }
  return best;
}

MainJointSet top_joints(const VectorXd& weights, std::size_t count) {
  require(count >= 1 && count <= static_cast<std::size_t>(weights.size()), ErrorKind::Usage,
          "main joint count must lie in [1, " + std::to_string(weights.size()) + "]");
  std::vector<std::size_t> order(static_cast<std::size_t>(weights.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return weights[static_cast<Eigen::Index>(a)] > weights[static_cast<Eigen::Index>(b)];
  });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

VectorXd uniform(std::size_t n) {
  return VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

VectorXd softmax(const VectorXd& scores, double temperature) {
  const VectorXd z = (scores.array() - scores.maxCoeff()) / temperature;
  VectorXd w = z.array().exp();
  return w / w.sum();
}

// Each half-step is the exact maximizer of  w' g - temperature * KL(w | uniform)
// over the simplex, with g the mean margin contracted with the other weight block.
ClassWeights fit_class(const std::string& label, const std::vector<MatrixXd>& margins,
                       const StnbnnConfig& config) {
  // Margins are divided by their pooled spread over members, joints and stages, so the
  // temperature is unitless and noise-level margins carry little weight.
  const double n = static_cast<double>(margins.size());
  MatrixXd mean = MatrixXd::Zero(margins.front().rows(), margins.front().cols());
  for (const MatrixXd& m : margins) {
    mean += m;
  }
  mean /= n;
  double square = 0.0;
  for (const MatrixXd& m : margins) {
    square += (m - mean).squaredNorm();
  }
  const double spread = std::sqrt(square / (n * static_cast<double>(mean.size())));
  if (spread > 0.0) {
    mean /= spread;
  }
  VectorXd v = uniform(static_cast<std::size_t>(mean.rows()));
  VectorXd u = uniform(static_cast<std::size_t>(mean.cols()));
  for (std::size_t round = 0; round < config.rounds; ++round) {
    v = softmax(mean * u, config.temperature);
    u = softmax(mean.transpose() * v, config.temperature);
  }
  return ClassWeights{label, v, u};
}

}  // namespace

StnbnnModel train_stnbnn(const std::vector<LabeledSequence>& corpus, const StnbnnConfig& config) {
  require(config.stages >= 1, ErrorKind::Usage, "stage count must be at least 1");
  require(config.main_joints >= 1 && config.main_joints <= canonical::kJointCount, ErrorKind::Usage,
          "main joint count must lie in [1, 21]");
  require(config.temperature > 0.0, ErrorKind::Usage, "fitting temperature must be positive");
  require(config.rounds >= 1, ErrorKind::Usage, "at least one fitting round is required");

  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    require(corpus[i].motion != nullptr, ErrorKind::Usage, "corpus entry without a sequence");
    by_label[corpus[i].label].push_back(i);
  }
  require(by_label.size() >= 2, ErrorKind::Data,
          "main-joint training needs at least 2 classes, got " + std::to_string(by_label.size()));
  for (const auto& [label, ids] : by_label) {
    require(ids.size() >= 2, ErrorKind::Data,
            "class '" + label + "' needs at least 2 sequences, has " + std::to_string(ids.size()));
  }

  StnbnnModel model;
  model.stages = config.stages;
  model.main_joints = config.main_joints;
  model.joints = corpus.front().motion->joint_count();
  model.points_per_stage =
      (corpus.front().motion->frame_count() + config.stages - 1) / config.stages;

  std::vector<StageDescriptors> descriptors;
  descriptors.reserve(corpus.size());
  for (const LabeledSequence& s : corpus) {
    require(s.motion->joint_count() == model.joints, ErrorKind::Data,
            "corpus sequences use different skeletons");
    descriptors.push_back(
        extract_stage_descriptors(*s.motion, config.stages, model.points_per_stage));
  }

  std::vector<std::size_t> class_of(corpus.size());
  std::vector<std::size_t> local_of(corpus.size());
  for (const auto& [label, ids] : by_label) {
    const std::size_t c = model.classes.size();
    model.classes.push_back(ClassWeights{label, {}, {}});
    model.members.push_back(ids);
    std::vector<MatrixXd> per_joint(model.joints);
    const auto rows = static_cast<Eigen::Index>(ids.size() * config.stages);
    const Eigen::Index width = descriptors.front().rows.cols();
    for (std::size_t j = 0; j < model.joints; ++j) {
      per_joint[j].resize(rows, width);
      for (std::size_t m = 0; m < ids.size(); ++m) {
        for (std::size_t t = 0; t < config.stages; ++t) {
          per_joint[j].row(static_cast<Eigen::Index>(m * config.stages + t)) =
              descriptors[ids[m]].at(t, j);
        }
      }
    }
    model.store.push_back(std::move(per_joint));
    for (std::size_t m = 0; m < ids.size(); ++m) {
      class_of[ids[m]] = c;
      local_of[ids[m]] = m;
    }
  }

  // Leave-one-out distances of every training sequence to every class store.
  const std::size_t classes = model.classes.size();
  std::vector<std::vector<MatrixXd>> distances(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const auto exclude = c == class_of[i] ? std::optional<std::size_t>(local_of[i]) : std::nullopt;
      distances[i].push_back(class_distances(model, descriptors[i], c, exclude));
    }
  }

  model.spatial = VectorXd::Zero(static_cast<Eigen::Index>(model.joints));
  model.temporal = VectorXd::Zero(static_cast<Eigen::Index>(config.stages));
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<MatrixXd> margins;
    double scale = 0.0;
    for (std::size_t i : model.members[c]) {
      MatrixXd rival = MatrixXd::Constant(static_cast<Eigen::Index>(model.joints),
                                          static_cast<Eigen::Index>(config.stages),
                                          std::numeric_limits<double>::infinity());
      double total = 0.0;
      for (std::size_t other = 0; other < classes; ++other) {
        total += distances[i][other].mean();
        if (other != c) {
          rival = rival.cwiseMin(distances[i][other]);
        }
      }
      scale += total / static_cast<double>(classes);
      margins.push_back(rival - distances[i][c]);
    }
    scale /= static_cast<double>(margins.size());
    if (scale > 0.0) {
      for (MatrixXd& m : margins) {
        m /= scale;
      }
    }
    model.classes[c] = fit_class(model.classes[c].label, margins, config);
    model.spatial += model.classes[c].spatial;
    model.temporal += model.classes[c].temporal;
  }
  model.spatial /= model.spatial.sum();
  model.temporal /= model.temporal.sum();
  model.trained = true;
  return model;
}

MainJointSet main_joints(const StnbnnModel& model, const std::vector<JointPositions>& positions) {
  require(model.trained, ErrorKind::Usage, "main-joint model has not been trained");
  if (model.store.empty() || model.classes.empty()) {
    return top_joints(model.spatial, model.main_joints);
  }
  const StageDescriptors query =
      extract_stage_descriptors(positions, model.stages, model.points_per_stage);
  return top_joints(model.classes[nearest_class(model, query)].spatial, model.main_joints);
}

MainJointSet main_joints(const StnbnnModel& model, const MotionSequence& motion) {
  require(model.trained, ErrorKind::Usage, "main-joint model has not been trained");
  return main_joints(model, motion.positions());
}

VectorXd motion_energy(const std::vector<JointPositions>& positions) {
  require(!positions.empty(), ErrorKind::Usage, "sequence is empty");
  VectorXd energy = VectorXd::Zero(static_cast<Eigen::Index>(positions.front().size()));
  for (std::size_t t = 1; t < positions.size(); ++t) {
    for (std::size_t j = 0; j < positions[t].size(); ++j) {
      energy[static_cast<Eigen::Index>(j)] += (positions[t][j] - positions[t - 1][j]).squaredNorm();
    }
  }
  return energy;
}

MainJointSet motion_energy_joints(const std::vector<JointPositions>& positions, std::size_t count) {
  return top_joints(motion_energy(positions), count);
}

std::string StnbnnModel::store_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& per_joint : store) {
    for (const MatrixXd& m : per_joint) {
      const std::int64_t shape[2] = {m.rows(), m.cols()};
      mix(shape, sizeof shape);
      mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string stnbnn_to_json(const StnbnnModel& model) {
  using json = nlohmann::json;
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["stages"] = model.stages;
  doc["main_joints"] = model.main_joints;
  doc["points_per_stage"] = model.points_per_stage;
  doc["trained"] = model.trained;
  doc["spatial"] = vec(model.spatial);
  doc["temporal"] = vec(model.temporal);
  doc["store_digest"] = model.store_digest();
  json classes = json::array();
  for (const ClassWeights& c : model.classes) {
    classes.push_back({{"label", c.label}, {"spatial", vec(c.spatial)}, {"temporal", vec(c.temporal)}});
  }
  doc["classes"] = classes;
  return doc.dump();
}

}  // namespace animgan
