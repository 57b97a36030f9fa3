#include "animgan/toy_corpus.hpp"

#include "animgan/error.hpp"
#include "animgan/random.hpp"

#include <cmath>
#include <numbers>

namespace animgan {

namespace {

using namespace canonical;

constexpr double kDeg = std::numbers::pi / 180.0;

Quat rot(int axis, double degrees) {
  return axis_angle(Vec3::Unit(axis), degrees * kDeg);
}

Pose rest_pose() {
  Pose p = Pose::identity(kJointCount);
  p.rotations[LeftArm] = rot(2, -70.0);
  p.rotations[RightArm] = rot(2, 70.0);
  p.rotations[LeftForeArm] = rot(1, 15.0);
  p.rotations[RightForeArm] = rot(1, -15.0);
  p.rotations[LeftLeg] = rot(0, 8.0);
  p.rotations[RightLeg] = rot(0, 8.0);
  p.rotations[LeftUpLeg] = rot(0, -4.0);
  p.rotations[RightUpLeg] = rot(0, -4.0);
  return p;
}

struct Draw {
  double phase;
  double amplitude;
  double frequency;
};

void apply(Pose& pose, ToyMotion motion, double envelope, double time, const Draw& d,
           double family_speed) {
  const double w = 2.0 * std::numbers::pi * d.frequency * family_speed;
  const double s = std::sin(w * time + d.phase);
  const double a = d.amplitude * envelope;
  auto compose = [&pose](std::size_t joint, const Quat& q) {
    pose.rotations[joint] = normalized_canonical(pose.rotations[joint] * q);
  };
  switch (motion) {
    case ToyMotion::LeftArmWave:
      compose(LeftArm, rot(2, a * (100.0 + 15.0 * s)));
      compose(LeftForeArm, rot(1, a * 45.0 * s));
      break;
    case ToyMotion::RightArmWave:
      compose(RightArm, rot(2, -a * (100.0 + 15.0 * s)));
      compose(RightForeArm, rot(1, -a * 45.0 * s));
      break;
    case ToyMotion::LegSwing:
      compose(LeftUpLeg, rot(0, a * 35.0 * s));
      compose(RightUpLeg, rot(0, -a * 35.0 * s));
      compose(LeftLeg, rot(0, a * 30.0 * (1.0 + s)));
      compose(RightLeg, rot(0, a * 30.0 * (1.0 - s)));
      break;
    case ToyMotion::TorsoBend:
      compose(Spine, rot(0, a * 20.0 * s));
      compose(Spine1, rot(0, a * 15.0 * s));
      compose(Neck, rot(2, a * 20.0 * std::cos(w * time + d.phase)));
      break;
  }
}

}  // namespace

ToyMotion toy_motion_of_family(std::size_t family) {
  return static_cast<ToyMotion>(family % 4);
}

std::string toy_family_label(std::size_t family) {
  static const char* names[] = {"left-arm-wave", "leg-swing", "right-arm-wave", "torso-bend"};
  std::string label = names[family % 4];
  if (family >= 4) {
    label += "-" + std::to_string(family / 4);
  }
  return label;
}

std::vector<MotionSequence> make_toy_corpus(const ToyCorpusConfig& config) {
  require(config.families >= 1 && config.per_family >= 1, ErrorKind::Usage,
          "toy corpus needs at least one family and one sequence per family");
  require(config.frames >= 1, ErrorKind::Usage, "toy sequences need at least one frame");
  require(config.jitter_degrees >= 0.0, ErrorKind::Usage, "jitter must be non-negative");

  const SkeletonPtr rig = canonical::skeleton();
  const Pose rest = rest_pose();
  const double ramp_frames = std::max(1.0, 0.6 * static_cast<double>(config.frames - 1));
  std::vector<MotionSequence> out;
  out.reserve(config.families * config.per_family);
  for (std::size_t f = 0; f < config.families; ++f) {
    const ToyMotion motion = toy_motion_of_family(f);
    const double family_speed = 1.0 + 0.25 * static_cast<double>(f / 4);
    for (std::size_t i = 0; i < config.per_family; ++i) {
      Rng rng = make_rng(config.seed, "toy-corpus", f * config.per_family + i);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> spread(0.9, 1.1);
      std::normal_distribution<double> jitter(0.0, config.jitter_degrees);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      const Draw d{phase(rng), spread(rng), 0.5 * spread(rng)};

      MotionSequence seq;
      seq.skeleton = rig;
      seq.fps = kTargetFps;
      seq.label = toy_family_label(f);
      seq.source = SequenceSource::Real;
      for (std::size_t t = 0; t < config.frames; ++t) {
        Pose pose = rest;
        const double envelope = std::min(1.0, static_cast<double>(t) / ramp_frames);
        apply(pose, motion, envelope, static_cast<double>(t) / kTargetFps, d, family_speed);
        if (config.jitter_degrees > 0.0) {
          for (Quat& q : pose.rotations) {
            Vec3 axis;
            for (int c = 0; c < 3; ++c) {
              axis[c] = unit(rng);
            }
            if (axis.norm() < 1e-9) {
              axis = Vec3::UnitX();
            }
            q = normalized_canonical(q * axis_angle(axis.normalized(), jitter(rng) * kDeg));
          }
        }
        seq.frames.push_back(std::move(pose));
        seq.root_translation.push_back(Vec3(0.0, 95.0, 0.0));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

std::vector<MotionSequence> make_toy_corpus(std::size_t families, std::size_t per_family,
                                            std::size_t frames, std::uint64_t seed) {
  return make_toy_corpus(ToyCorpusConfig{families, per_family, frames, seed, 0.3});
}

}  // namespace animgan
