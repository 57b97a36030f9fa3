#include "animgan/discriminator.hpp"

#include "animgan/error.hpp"

#include <cmath>

namespace animgan {

using ndl::Matrix;
using ndl::SparseMatrix;
using ndl::Tape;
using ndl::Var;

namespace {

constexpr std::size_t kLayersPerBlock = 3;

}  // namespace

StGraph build_st_graph(const Skeleton& skeleton, std::size_t frames) {
  require(frames >= 1, ErrorKind::Usage, "graph needs at least one frame");
  const std::size_t joints = skeleton.size();
  StGraph g;
  g.frames = frames;
  g.joints = joints;
  const std::vector<int> parents = skeleton.parents();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      if (parents[j] >= 0) {
        g.intra_edges.emplace_back(t * joints + static_cast<std::size_t>(parents[j]),
                                   t * joints + j);
      }
    }
  }
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      g.inter_edges.emplace_back(t * joints + j, (t + 1) * joints + j);
    }
  }

  const std::size_t n = g.node_count();
  std::vector<double> degree(n, 1.0);  // self loop
  for (const auto* edges : {&g.intra_edges, &g.inter_edges}) {
    for (const auto& [a, b] : *edges) {
      degree[a] += 1.0;
      degree[b] += 1.0;
    }
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n + 2 * (g.intra_edges.size() + g.inter_edges.size()));
  for (std::size_t i = 0; i < n; ++i) {
    entries.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0 / degree[i]);
  }
  for (const auto* edges : {&g.intra_edges, &g.inter_edges}) {
    for (const auto& [a, b] : *edges) {
      const double w = 1.0 / std::sqrt(degree[a] * degree[b]);
      entries.emplace_back(static_cast<int>(a), static_cast<int>(b), w);
      entries.emplace_back(static_cast<int>(b), static_cast<int>(a), w);
    }
  }
  auto adjacency = std::make_shared<SparseMatrix>(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
  adjacency->setFromTriplets(entries.begin(), entries.end());
  g.adjacency = std::move(adjacency);
  return g;
}

SparseMatrix temporal_pooling(std::size_t frames, std::size_t joints) {
  require(frames >= 1, ErrorKind::Usage, "pooling needs at least one frame");
  const std::size_t pooled = (frames + 1) / 2;
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t t = 0; t < pooled; ++t) {
    const bool pair = 2 * t + 1 < frames;
    for (std::size_t j = 0; j < joints; ++j) {
      const auto row = static_cast<int>(t * joints + j);
      entries.emplace_back(row, static_cast<int>(2 * t * joints + j), pair ? 0.5 : 1.0);
      if (pair) {
        entries.emplace_back(row, static_cast<int>((2 * t + 1) * joints + j), 0.5);
      }
    }
  }
  SparseMatrix p(static_cast<Eigen::Index>(pooled * joints), static_cast<Eigen::Index>(frames * joints));
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

GraphPyramid build_graph_pyramid(const Skeleton& skeleton, std::size_t frames) {
  require(frames >= kMinDiscriminatorFrames, ErrorKind::Usage,
          "discriminator needs at least 4 frames, got " + std::to_string(frames));
  GraphPyramid p;
  p.frames = frames;
  std::size_t k = frames;
  for (std::size_t level = 0; level < 3; ++level) {
    p.levels[level] = build_st_graph(skeleton, k);
    if (level < 2) {
      p.pooling[level] = std::make_shared<const SparseMatrix>(temporal_pooling(k, skeleton.size()));
      k = (k + 1) / 2;
    }
  }
  return p;
}

DiscriminatorNet::DiscriminatorNet(SkeletonPtr rig, double dropout_rate,
                                   const DiscriminatorShape& shape)
    : skeleton(std::move(rig)),
      hidden("discriminator.hidden", shape.blocks.back() + kEmbeddingWidth, shape.head_hidden),
      head("discriminator.head", shape.head_hidden, 1),
      dropout(dropout_rate),
      input_mean(Eigen::RowVectorXd::Zero(3 * static_cast<Eigen::Index>(skeleton->size()))) {
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Usage,
          "dropout rate must lie in [0, 1)");
  for (Eigen::Index w : shape.blocks) {
    require(w >= 1, ErrorKind::Usage, "discriminator widths must be positive");
  }
  require(shape.head_hidden >= 1, ErrorKind::Usage, "discriminator widths must be positive");
  Eigen::Index in = 3;
  for (std::size_t l = 0; l < kGraphLayers; ++l) {
    const std::string name = "discriminator.conv" + std::to_string(l + 1);
    const Eigen::Index out = shape.blocks[l / kLayersPerBlock];
    convs.emplace_back(name, in, out);
    if (in != out) {
      projections.emplace_back(ndl::Dense(name + ".residual", in, out));
    } else {
      projections.emplace_back(std::nullopt);
    }
    in = out;
  }
}

ndl::ParameterList DiscriminatorNet::parameters() {
  ndl::ParameterList out;
  for (std::size_t l = 0; l < convs.size(); ++l) {
    ndl::append(out, convs[l].parameters());
    if (projections[l]) {
      ndl::append(out, projections[l]->parameters());
    }
  }
  ndl::append(out, hidden.parameters());
  ndl::append(out, head.parameters());
  return out;
}

DiscriminatorNet make_discriminator(std::uint64_t seed, double dropout, SkeletonPtr rig,
                                    const DiscriminatorShape& shape) {
  DiscriminatorNet net(std::move(rig), dropout, shape);
  Rng rng = make_rng(seed, "discriminator-init");
  const double branch_scale = 1.0 / std::sqrt(static_cast<double>(kGraphLayers));
  for (std::size_t l = 0; l < net.convs.size(); ++l) {
    net.convs[l].init_xavier(rng);
    net.convs[l].weight.value *= branch_scale;
    if (net.projections[l]) {
      net.projections[l]->init_xavier(rng);
    }
  }
  net.hidden.init_xavier(rng);
  net.head.init_xavier(rng);
  return net;
}

void fit_input_normalization(DiscriminatorNet& net, const std::vector<Matrix>& positions) {
  const Eigen::Index width = 3 * static_cast<Eigen::Index>(net.skeleton->size());
  require(!positions.empty(), ErrorKind::Data, "no sequences to fit the input normalization");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(width);
  double rows = 0.0;
  for (const Matrix& p : positions) {
    require(p.cols() == width, ErrorKind::Usage, "positions must be k x 3J");
    mean += p.colwise().sum();
    rows += static_cast<double>(p.rows());
  }
  mean /= rows;
  double square = 0.0;
  for (const Matrix& p : positions) {
    square += (p.rowwise() - mean).squaredNorm();
  }
  const double rms = std::sqrt(square / (rows * static_cast<double>(width)));
  require(std::isfinite(rms) && rms > 0.0, ErrorKind::Data,
          "input positions have no spread; cannot normalize");
  net.input_mean = mean;
  net.input_scale = 1.0 / rms;
}

Var discriminate(Tape& tape, DiscriminatorNet& net, Var positions, Var condition,
                 const GraphPyramid& pyramid, bool training, Rng& rng) {
  const auto k = static_cast<std::size_t>(positions.rows());
  const auto joints = static_cast<Eigen::Index>(net.skeleton->size());
  require(k == pyramid.frames, ErrorKind::Usage,
          "graph was built for " + std::to_string(pyramid.frames) + " frames, input has " +
              std::to_string(k));
  require(positions.cols() == 3 * joints, ErrorKind::Usage, "positions must be k x 3J");
  require(condition.rows() == positions.rows() && condition.cols() == kEmbeddingWidth,
          ErrorKind::Usage, "condition must be k x 20");

  require(net.input_mean.size() == 3 * joints, ErrorKind::Usage,
          "discriminator input normalization has the wrong width");
  Var centered = ndl::add_row(positions, tape.constant(-net.input_mean));
  Var x = ndl::scale(ndl::reshape(centered, static_cast<Eigen::Index>(k) * joints, 3),
                     net.input_scale);
  std::size_t level = 0;
  for (std::size_t l = 0; l < kGraphLayers; ++l) {
    Var y = ndl::leaky_relu(net.convs[l].forward(tape, x, pyramid.levels[level].adjacency));
    y = ndl::dropout(y, net.dropout, rng, training);
    Var residual = net.projections[l] ? net.projections[l]->forward(tape, x) : x;
    x = ndl::add(y, residual);
    if ((l == 2 || l == 5) && level < 2) {
      x = ndl::sparse_matmul(pyramid.pooling[level], x);
      ++level;
    }
  }
  const Eigen::Index nodes = x.rows();
  Var pooled = ndl::matmul(tape.constant(Matrix::Constant(1, nodes, 1.0 / static_cast<double>(nodes))), x);
  Var cond = ndl::matmul(
      tape.constant(Matrix::Constant(1, condition.rows(), 1.0 / static_cast<double>(condition.rows()))),
      condition);
  const std::array<Var, 2> parts{pooled, cond};
  Var h = ndl::leaky_relu(net.hidden.forward(tape, ndl::concat_cols(parts)));
  return ndl::sigmoid(net.head.forward(tape, h));
}

double discriminate(const DiscriminatorNet& net, const Matrix& positions, const Matrix& condition,
                    const GraphPyramid& pyramid, bool training, Rng& rng) {
  require(positions.allFinite() && condition.allFinite(), ErrorKind::Numeric,
          "discriminator inputs are not finite");
  // Forward passes only read parameters; the tape needs a mutable handle.
  auto& mutable_net = const_cast<DiscriminatorNet&>(net);
  Tape tape;
  return discriminate(tape, mutable_net, tape.constant(positions), tape.constant(condition),
                      pyramid, training, rng)
      .scalar();
}

double discriminate(const DiscriminatorNet& net, const Matrix& positions, const Matrix& condition,
                    bool training, Rng& rng) {
  return discriminate(net, positions, condition,
                      build_graph_pyramid(*net.skeleton, static_cast<std::size_t>(positions.rows())),
                      training, rng);
}

}  // namespace animgan
