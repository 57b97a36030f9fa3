#pragma once

#include "animgan/ndl/layers.hpp"
#include "animgan/pose_codec.hpp"
#include "animgan/skeleton.hpp"

#include <array>
#include <optional>
#include <utility>

namespace animgan {

/// Spatiotemporal graph over k x J nodes; node t * J + j is joint j at frame t.
struct StGraph {
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::vector<std::pair<std::size_t, std::size_t>> intra_edges;  // within a frame
  std::vector<std::pair<std::size_t, std::size_t>> inter_edges;  // same joint, adjacent frames
  /// D^{-1/2} (A + I) D^{-1/2}.
  std::shared_ptr<const ndl::SparseMatrix> adjacency;

  std::size_t node_count() const { return frames * joints; }
};

StGraph build_st_graph(const Skeleton& skeleton, std::size_t frames);

/// Stride-2 temporal mean pooling: frames (2t, 2t + 1) -> t, the last frame alone when k is odd.
ndl::SparseMatrix temporal_pooling(std::size_t frames, std::size_t joints);

/// Graphs and pooling operators for one input length.
struct GraphPyramid {
  std::size_t frames = 0;
  std::array<StGraph, 3> levels;
  std::array<std::shared_ptr<const ndl::SparseMatrix>, 2> pooling;
};

inline constexpr std::size_t kMinDiscriminatorFrames = 4;
GraphPyramid build_graph_pyramid(const Skeleton& skeleton, std::size_t frames);

inline constexpr std::size_t kGraphLayers = 9;
inline constexpr double kPositionScale = 0.01;  // cm -> m until an input normalization is fitted

/// Channel widths of the three graph-conv blocks and the hidden head layer.
struct DiscriminatorShape {
  std::array<Eigen::Index, 3> blocks{16, 32, 64};
  Eigen::Index head_hidden = 32;
};

/// Nine residual graph-convolution layers (widths 16, 16, 16 | 32, 32, 32 | 64, 64, 64)
/// with temporal pooling after layers 3 and 6, global mean pooling, the mean condition
/// embedding appended, then Dense(84, 32) + LeakyReLU and Dense(32, 1) + sigmoid.
struct DiscriminatorNet {
  SkeletonPtr skeleton;
  std::vector<ndl::GraphConv> convs;
  std::vector<std::optional<ndl::Dense>> projections;  // residual path when widths change
  ndl::Dense hidden;
  ndl::Dense head;
  double dropout = 0.5;
  /// Fixed input standardization applied before the first layer:
  /// (positions - input_mean) * input_scale, input_mean is 1 x 3J.
  Eigen::RowVectorXd input_mean;
  double input_scale = kPositionScale;

  DiscriminatorNet() : DiscriminatorNet(canonical::skeleton()) {}
  explicit DiscriminatorNet(SkeletonPtr rig, double dropout_rate = 0.5,
                            const DiscriminatorShape& shape = {});

  ndl::ParameterList parameters();
};

/// Graph-conv weights are Xavier draws scaled by 1/sqrt(9) so the residual stack starts
/// close to the identity.
DiscriminatorNet make_discriminator(std::uint64_t seed, double dropout = 0.5,
                                    SkeletonPtr rig = canonical::skeleton(),
                                    const DiscriminatorShape& shape = {});

/// Per joint-channel mean and one global scale (inverse RMS deviation) over every frame of
/// the given k x 3J position matrices.
void fit_input_normalization(DiscriminatorNet& net, const std::vector<ndl::Matrix>& positions);

/// Score in (0, 1) of one sequence. positions is k x 3J (hip-relative, centimeters),
/// condition is k x 20. The pyramid must have been built for k frames.
ndl::Var discriminate(ndl::Tape& tape, DiscriminatorNet& net, ndl::Var positions,
                      ndl::Var condition, const GraphPyramid& pyramid, bool training, Rng& rng);

double discriminate(const DiscriminatorNet& net, const ndl::Matrix& positions,
                    const ndl::Matrix& condition, bool training, Rng& rng);
double discriminate(const DiscriminatorNet& net, const ndl::Matrix& positions,
                    const ndl::Matrix& condition, const GraphPyramid& pyramid, bool training,
                    Rng& rng);

}  // namespace animgan
