#include "animgan/augmentation.hpp"

#include "animgan/error.hpp"
#include "animgan/random.hpp"

#include <cmath>
#include <numbers>

namespace animgan {

namespace {

void require_same_shape(const MotionSequence& a, const MotionSequence& b) {
  require(a.frame_count() == b.frame_count(), ErrorKind::Usage,
          "sequences differ in length: " + std::to_string(a.frame_count()) + " vs " +
              std::to_string(b.frame_count()));
  require(a.skeleton->same_rig(*b.skeleton), ErrorKind::Usage, "sequences use different rigs");
}

MotionSequence with_source(MotionSequence m, SequenceSource source) {
  m.source = source;
  return m;
}

}  // namespace

MotionSequence mutate(const MotionSequence& motion, double noise_degrees, std::uint64_t seed) {
  require(noise_degrees >= 0.0, ErrorKind::Usage, "noise scale must be non-negative");
  MotionSequence out = with_source(motion, SequenceSource::Augmented);
  if (noise_degrees == 0.0) {
    return out;
  }
  Rng rng = make_rng(seed, "mutate");
  std::normal_distribution<double> angle(0.0, noise_degrees * std::numbers::pi / 180.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Pose& pose : out.frames) {
    for (Quat& q : pose.rotations) {
      Vec3 axis;
      for (int c = 0; c < 3; ++c) {
        axis[c] = gauss(rng);
      }
      if (axis.norm() < 1e-12) {
        axis = Vec3::UnitX();
      }
      q = normalized_canonical(q * axis_angle(axis.normalized(), angle(rng)));
    }
  }
  return out;
}

MotionSequence crossover(const MotionSequence& a, const MotionSequence& b) {
  require_same_shape(a, b);
  require(canonical::is_canonical(*a.skeleton), ErrorKind::Usage,
          "crossover needs the canonical rig");
  MotionSequence out = with_source(a, SequenceSource::Augmented);
  for (std::size_t t = 0; t < out.frame_count(); ++t) {
    for (std::size_t j = 0; j < out.joint_count(); ++j) {
      if (canonical::is_lower_body(j)) {
        out.frames[t].rotations[j] = b.frames[t].rotations[j];
      }
    }
  }
  return out;
}

MotionSequence halve(const MotionSequence& motion) {
  MotionSequence out = with_source(motion, SequenceSource::Augmented);
  for (Pose& pose : out.frames) {
    for (Quat& q : pose.rotations) {
      q = slerp(Quat::Identity(), q, 0.5);
    }
  }
  return out;
}

MotionSequence mirror(const MotionSequence& motion) {
  require(canonical::is_canonical(*motion.skeleton), ErrorKind::Usage,
          "mirror needs the canonical rig");
  MotionSequence out = with_source(motion, SequenceSource::Augmented);
  for (std::size_t t = 0; t < out.frame_count(); ++t) {
    for (std::size_t j = 0; j < out.joint_count(); ++j) {
      const Quat& q = motion.frames[t].rotations[canonical::mirror_of(j)];
      out.frames[t].rotations[j] = Quat(q.w(), q.x(), -q.y(), -q.z());
    }
    out.root_translation[t].x() = -motion.root_translation[t].x();
  }
  return out;
}

const char* to_string(HardNegativeKind kind) {
  switch (kind) {
    case HardNegativeKind::Reversal: return "reversal";
    case HardNegativeKind::BigNoise: return "big_noise";
    case HardNegativeKind::Bounce: return "bounce";
  }
  return "?";
}

HardNegativeKind hard_negative_from_string(std::string_view text) {
  if (text == "reversal") return HardNegativeKind::Reversal;
  if (text == "big_noise") return HardNegativeKind::BigNoise;
  if (text == "bounce") return HardNegativeKind::Bounce;
  fail(ErrorKind::Usage, "unknown hard-negative kind '" + std::string(text) + "'");
}

MotionSequence synth_hard_negative(const MotionSequence& motion, HardNegativeKind kind,
                                   std::uint64_t seed) {
  MotionSequence out;
  switch (kind) {
    case HardNegativeKind::Reversal:
      out = motion;
      for (Pose& pose : out.frames) {
        for (Quat& q : pose.rotations) {
          q = q.conjugate();
        }
      }
      break;
    case HardNegativeKind::BigNoise:
      out = mutate(motion, kBigNoiseDegrees, seed);
      break;
    case HardNegativeKind::Bounce: {
      const std::size_t n = motion.frame_count();
      require(n >= 2, ErrorKind::Usage, "bounce needs at least 2 frames");
      const std::size_t half = (n + 1) / 2;
      out = motion;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = std::min(i, 2 * half - 1 - i);
        out.frames[i] = motion.frames[src];
        out.root_translation[i] = motion.root_translation[src];
      }
      break;
    }
  }
  out.source = SequenceSource::HardNegative;
  return out;
}

PoseEmbedding mean_embedding(const AutoencoderModel& codec, const MotionSequence& motion) {
  require(codec.trained, ErrorKind::Usage, "pose codec has not been trained");
  return encode_rows(codec, pose_matrix(motion)).colwise().mean().transpose();
}

ClusterModel kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(n >= 1, ErrorKind::Usage, "nothing to cluster");
  require(k >= 1, ErrorKind::Usage, "cluster count must be at least 1");
  require(k <= n, ErrorKind::Usage,
          "cluster count " + std::to_string(k) + " exceeds dataset size " + std::to_string(n));
  require(points.allFinite(), ErrorKind::Numeric, "cluster inputs are not finite");

  Rng rng = make_rng(seed, "kmeans");
  ClusterModel model;
  model.centroids.resize(static_cast<Eigen::Index>(k), points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  model.centroids.row(0) = points.row(static_cast<Eigen::Index>(pick(rng)));
  Eigen::VectorXd nearest = (points.rowwise() - model.centroids.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = nearest.sum();
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen + 1 < n; ++chosen) {
        target -= nearest[static_cast<Eigen::Index>(chosen)];
        if (target < 0.0) {
          break;
        }
      }
    } else {
      chosen = c;  // all points coincide with chosen centroids
    }
    model.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(chosen));
    nearest = nearest.cwiseMin(
        (points.rowwise() - model.centroids.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
  }

  model.assignment.assign(n, 0);
  for (int iteration = 0; iteration < 100; ++iteration) {
    bool changed = iteration == 0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (model.centroids.rowwise() - points.row(static_cast<Eigen::Index>(i)))
          .rowwise()
          .squaredNorm()
          .minCoeff(&best);
      if (model.assignment[i] != static_cast<std::size_t>(best)) {
        model.assignment[i] = static_cast<std::size_t>(best);
        changed = true;
      }
    }
    model.sizes.assign(k, 0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t i = 0; i < n; ++i) {
      ++model.sizes[model.assignment[i]];
      sums.row(static_cast<Eigen::Index>(model.assignment[i])) += points.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (model.sizes[c] > 0) {
        model.centroids.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(model.sizes[c]);
        continue;
      }
      // Empty cluster: take over the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (points.row(static_cast<Eigen::Index>(i)) -
                          model.centroids.row(static_cast<Eigen::Index>(model.assignment[i])))
                             .squaredNorm();
        if (d > far_d && model.sizes[model.assignment[i]] > 1) {
          far_d = d;
          far = i;
        }
      }
      --model.sizes[model.assignment[far]];
      model.assignment[far] = c;
      model.sizes[c] = 1;
      model.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
      changed = true;
    }
    if (!changed) {
      break;
    }
  }
  return model;
}

ClusterModel cluster_sequences(const std::vector<MotionSequence>& dataset,
                               const AutoencoderModel& codec, std::size_t k, std::uint64_t seed) {
  require(!dataset.empty(), ErrorKind::Data, "dataset is empty");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(dataset.size()), kEmbeddingWidth);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    points.row(static_cast<Eigen::Index>(i)) = mean_embedding(codec, dataset[i]).transpose();
  }
  return kmeans(points, k, seed);
}

const char* to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::Mutate: return "mutate";
    case AugmentOp::Crossover: return "crossover";
    case AugmentOp::Halve: return "halve";
    case AugmentOp::Mirror: return "mirror";
  }
  return "?";
}

BalanceResult balance_dataset(const std::vector<MotionSequence>& dataset,
                              const AutoencoderModel& codec, const ClusterSchedule& schedule,
                              std::size_t target_size, std::uint64_t seed) {
  require(!dataset.empty(), ErrorKind::Data, "dataset is empty");
  require(schedule.start >= 1, ErrorKind::Usage, "cluster schedule must start at k >= 1");
  require(target_size >= dataset.size(), ErrorKind::Usage,
          "target size " + std::to_string(target_size) + " is below the dataset size " +
              std::to_string(dataset.size()));
  BalanceResult result{dataset, {}};
  Eigen::MatrixXd points(static_cast<Eigen::Index>(target_size), kEmbeddingWidth);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    points.row(static_cast<Eigen::Index>(i)) = mean_embedding(codec, dataset[i]).transpose();
  }

  for (std::size_t round = 0; result.dataset.size() < target_size; ++round) {
    const std::size_t n = result.dataset.size();
    const std::size_t k = std::min(schedule.clusters_at(round), n);
    const ClusterModel clusters =
        kmeans(points.topRows(static_cast<Eigen::Index>(n)), k, derive_seed(seed, "balance-kmeans", round));
    const auto smallest = static_cast<std::size_t>(
        std::min_element(clusters.sizes.begin(), clusters.sizes.end()) - clusters.sizes.begin());
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (clusters.assignment[i] == smallest) {
        members.push_back(i);
      }
    }

    Rng rng = make_rng(seed, "balance-round", round);
    std::uniform_int_distribution<int> pick_op(0, 3);
    std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
    const auto op = static_cast<AugmentOp>(pick_op(rng));
    const std::size_t a = members[pick_member(rng)];
    const std::uint64_t op_seed = derive_seed(seed, "balance-op", round);
    AugmentationRecord record{n, op, {a}, op_seed, round, k};
    MotionSequence made;
    switch (op) {
      case AugmentOp::Mutate:
        made = mutate(result.dataset[a], kMutateDegrees, op_seed);
        break;
      case AugmentOp::Crossover: {
        std::size_t b = members[pick_member(rng)];
        if (result.dataset[b].frame_count() != result.dataset[a].frame_count()) {
          b = a;
        }
        record.parents.push_back(b);
        made = crossover(result.dataset[a], result.dataset[b]);
        break;
      }
      case AugmentOp::Halve:
        made = halve(result.dataset[a]);
        break;
      case AugmentOp::Mirror:
        made = mirror(result.dataset[a]);
        break;
    }
    points.row(static_cast<Eigen::Index>(n)) = mean_embedding(codec, made).transpose();
    result.dataset.push_back(std::move(made));
    result.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace animgan
