#pragma once

#include "animgan/motion.hpp"

namespace animgan {

/// Motion templates cycled through by family index.
enum class ToyMotion { LeftArmWave, LegSwing, RightArmWave, TorsoBend };

ToyMotion toy_motion_of_family(std::size_t family);
std::string toy_family_label(std::size_t family);

struct ToyCorpusConfig {
  std::size_t families = 2;
  std::size_t per_family = 100;
  std::size_t frames = 30;
  std::uint64_t seed = 0;
  double jitter_degrees = 0.3;
};

/// Procedural labeled corpus on the canonical rig at 5 fps. Every sequence starts at a
/// rest posture (arms lowered, knees and elbows slightly bent) and ramps its family's
/// sinusoidal joint oscillation up over the first 60% of the clip. Phase, amplitude and
/// frequency are drawn per sequence; small rotation jitter is added to every joint.
std::vector<MotionSequence> make_toy_corpus(const ToyCorpusConfig& config);
std::vector<MotionSequence> make_toy_corpus(std::size_t families, std::size_t per_family,
                                            std::size_t frames, std::uint64_t seed);

}  // namespace animgan
