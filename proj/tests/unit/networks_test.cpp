#include "animgan/diff_kinematics.hpp"
#include "animgan/discriminator.hpp"
#include "animgan/error.hpp"
#include "animgan/generator.hpp"
#include "animgan/losses.hpp"
#include "animgan/ndl/gradcheck.hpp"
#include "animgan/ndl/optim.hpp"
#include "generators.hpp"

#include <gtest/gtest.h>

using namespace animgan;
using ndl::Matrix;

namespace {

Matrix gaussian(Rng& rng, Eigen::Index r, Eigen::Index c, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Matrix random_positions(Rng& rng, std::size_t frames) {
  return positions_matrix(gen::canonical_motion(rng, frames).positions());
}

}  // namespace

TEST(DiffKinematics, MatchesPoseForwardKinematics) {
  Rng rng(1);
  const auto m = gen::canonical_motion(rng, 6);
  const Matrix fk = forward_kinematics(*m.skeleton, pose_matrix(m));
  const Matrix expected = positions_matrix(m.positions());
  EXPECT_LT((fk - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DiffKinematics, NormalizeGradients) {
  Rng rng(2);
  const auto rig = canonical::skeleton();
  ndl::Parameter raw("raw", gaussian(rng, 3, kPoseWidth));
  for (Eigen::Index j = 0; j < kPoseWidth; j += 4) raw.value.col(j).array() += 2.0;
  const Matrix weights = gaussian(rng, 3, 3 * canonical::kJointCount);
  ndl::Parameter* list[] = {&raw};
  auto loss = [&](ndl::Tape& t) {
    ndl::Var pos = forward_kinematics(*rig, quat_normalize(t.parameter(raw)));
    return ndl::sum(ndl::mask_mul(pos, weights));
  };
  EXPECT_LT(ndl::gradient_check(loss, list, 1e-6).max_relative_error, 1e-6);
}

TEST(DiffKinematics, DegenerateQuaternionBecomesIdentity) {
  const Matrix q = quat_normalize(Matrix::Zero(2, kPoseWidth));
  for (Eigen::Index j = 0; j < kPoseWidth; ++j) EXPECT_EQ(q(1, j), j % 4 == 0 ? 1.0 : 0.0);
}

TEST(Generator, ZeroNetworkOutputsIdentity) {
  GeneratorNet net(8);
  Rng rng(3), drop(4);
  const Matrix out = generate_rotations(net, gaussian(rng, 5, kEmbeddingWidth),
                                        draw_noise(5, NoiseSharing::PerFrame, rng), false, drop);
  for (Eigen::Index t = 0; t < 5; ++t)
    for (Eigen::Index j = 0; j < kPoseWidth; ++j) ASSERT_EQ(out(t, j), j % 4 == 0 ? 1.0 : 0.0);
}

TEST(Generator, SeedDeterminesOutput) {
  const GeneratorNet net = make_generator(5, 16);
  Rng crng(6);
  const Matrix condition = gaussian(crng, 7, kEmbeddingWidth);
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed), drop(seed + 1);
    return generate_rotations(net, condition, draw_noise(7, NoiseSharing::PerSequence, rng), false,
                              drop);
  };
  EXPECT_EQ(run(10), run(10));
  EXPECT_GT((run(10) - run(11)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Generator, OneFramePerConditionFrame) {
  const GeneratorNet net = make_generator(7, 8);
  Rng rng(8), drop(9);
  const auto seq = generate(net, gaussian(rng, 300, kEmbeddingWidth),
                            draw_noise(300, NoiseSharing::PerFrame, rng), false, drop);
  EXPECT_EQ(seq.frame_count(), 300u);
  EXPECT_EQ(seq.source, SequenceSource::Generated);
  EXPECT_NO_THROW(seq.validate());
}

TEST(Generator, NoiseSharing) {
  Rng rng(10);
  const Matrix shared = draw_noise(4, NoiseSharing::PerSequence, rng);
  for (Eigen::Index t = 1; t < 4; ++t) EXPECT_EQ(shared.row(t), shared.row(0));
  const Matrix per = draw_noise(4, NoiseSharing::PerFrame, rng);
  EXPECT_NE(per.row(1), per.row(0));
  EXPECT_EQ(per.cols(), kNoiseWidth);
}

TEST(Generator, TwoFrameLossGradientCheck) {
  // G -> FK -> L_ST with the discriminator scores replaced by constants.
  Rng rng(11);
  GeneratorNet net = make_generator(rng(), 6);
  const Matrix condition = gaussian(rng, 2, kEmbeddingWidth, 0.5);
  const Matrix noise = draw_noise(2, NoiseSharing::PerFrame, rng);
  const Matrix input = random_positions(rng, 2);
  const std::uint64_t drop_seed = rng();
  const MainJointSet main{4, 8, 12, 16, 20};
  LossConfig config;
  config.lambda1 = 0.6;
  config.lambda2 = 0.4;
  auto params = net.parameters();
  auto loss = [&](ndl::Tape& t) {
    Rng drop(drop_seed);
    ndl::Var rot = generator_forward(t, net, t.constant(condition), noise, true, drop);
    ndl::Var pos = forward_kinematics(*canonical::skeleton(), rot);
    ndl::Var st = st_terms(t.constant(input), pos, main, kTargetFps, config);
    return generator_loss(t.constant(Matrix::Constant(1, 1, 0.5)), st, config);
  };
  const double steps[] = {1e-5, 1e-6, 1e-7, 1e-8, 1e-4, 1e-3};
  const auto report = ndl::gradient_check_ladder(loss, params, steps, 1e-4);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << report.worst_parameter << "[" << report.worst_index << "]";
}

TEST(Generator, AdversarialTermAloneWithConstantScores) {
  Rng rng(12);
  GeneratorNet net = make_generator(rng(), 4);
  const Matrix condition = gaussian(rng, 2, kEmbeddingWidth);
  const Matrix noise = draw_noise(2, NoiseSharing::PerFrame, rng);
  auto params = net.parameters();
  LossConfig config;
  config.lambda1 = 0.0;
  config.lambda2 = 0.0;
  auto loss = [&](ndl::Tape& t) {
    Rng drop(1);
    ndl::Var rot = generator_forward(t, net, t.constant(condition), noise, false, drop);
    ndl::Var st = st_terms(t.constant(Matrix::Zero(2, 63)),
                           forward_kinematics(*canonical::skeleton(), rot), {0, 1}, kTargetFps,
                           config);
    return generator_loss(t.constant(Matrix::Constant(1, 1, 0.5)), st, config);
  };
  const auto report = ndl::gradient_check(loss, params);
  EXPECT_EQ(report.max_relative_error, 0.0);
  EXPECT_EQ(report.analytic, 0.0);
}

TEST(Generator, SmoothnessTermPullsFramesTogether) {
  Rng rng(13);
  GeneratorNet net = make_generator(rng(), 16);
  const Matrix condition = Matrix::Constant(6, kEmbeddingWidth, 0.3);
  const Matrix noise = draw_noise(6, NoiseSharing::PerFrame, rng);
  const MainJointSet main{4, 8, 12, 16, 20};
  LossConfig config;
  config.lambda1 = 0.0;
  config.lambda2 = 1.0;
  auto params = net.parameters();
  auto state = ndl::make_constant_adam(1e-2);
  auto smooth_now = [&] {
    Rng drop(0);
    const Matrix rot = generate_rotations(net, condition, noise, false, drop);
    return smoothness(positions_from_matrix(forward_kinematics(*canonical::skeleton(), rot)), main,
                      kTargetFps);
  };
  const double before = smooth_now();
  for (int step = 0; step < 50; ++step) {
    ndl::zero_grads(params);
    ndl::Tape t;
    Rng drop(0);
    ndl::Var pos = forward_kinematics(
        *canonical::skeleton(), generator_forward(t, net, t.constant(condition), noise, false, drop));
    t.backward(smoothness(pos, main, kTargetFps));
    ndl::optimizer_step(state, params);
  }
  EXPECT_LT(smooth_now(), 0.5 * before);
}

TEST(Generator, ZeroLearningRateKeepsParameters) {
  Rng rng(14);
  GeneratorNet net = make_generator(rng(), 4);
  auto params = net.parameters();
  std::vector<Matrix> before;
  for (auto* p : params) {
    before.push_back(p->value);
    p->grad = Matrix::Ones(p->value.rows(), p->value.cols());
  }
  auto state = ndl::make_adam(0.0, 10);
  ndl::optimizer_step(state, params);
  for (std::size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i]->value, before[i]);
}

TEST(StGraph, EdgeCountFormulas) {
  const auto rig = canonical::skeleton();
  for (std::size_t k : {1u, 3u, 10u}) {
    const auto g = build_st_graph(*rig, k);
    EXPECT_EQ(g.intra_edges.size(), 20 * k);
    EXPECT_EQ(g.inter_edges.size(), 21 * (k - 1));
  }
}

TEST(StGraph, AdjacencyMatchesBruteForce) {
  std::vector<Joint> joints(2);
  joints[0].name = "a";
  joints[1].name = "b";
  joints[1].parent = 0;
  joints[1].offset = Vec3(0, 1, 0);
  const Skeleton rig(joints);
  const auto g = build_st_graph(rig, 3);
  EXPECT_EQ(g.intra_edges.size(), 3u);
  EXPECT_EQ(g.inter_edges.size(), 4u);

  const auto edges = oracle::st_graph_edges({-1, 0}, 3);
  ASSERT_EQ(edges.size(), 7u);
  std::set<oracle::Edge> got;
  for (const auto* list : {&g.intra_edges, &g.inter_edges})
    for (auto [a, b] : *list) got.insert({std::min(a, b), std::max(a, b)});
  EXPECT_EQ(got, edges);

  double a[6][6] = {};
  double deg[6] = {};
  for (int i = 0; i < 6; ++i) a[i][i] = 1;
  for (auto [x, y] : edges) a[x][y] = a[y][x] = 1;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) deg[i] += a[i][j];
  const Matrix dense(*g.adjacency);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      EXPECT_EQ(dense(i, j), a[i][j] == 0 ? 0.0 : 1.0 / std::sqrt(deg[i] * deg[j]));
}

TEST(StGraph, TemporalPooling) {
  const Matrix p(temporal_pooling(5, 2));
  ASSERT_EQ(p.rows(), 6);
  ASSERT_EQ(p.cols(), 10);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(0, 2), 0.5);
  EXPECT_EQ(p(5, 9), 1.0);
  EXPECT_EQ(p.rowwise().sum(), Matrix::Ones(6, 1));
}

TEST(Discriminator, ZeroNetworkScoresHalf) {
  const DiscriminatorNet net;
  Rng rng(15), drop(16);
  EXPECT_EQ(discriminate(net, random_positions(rng, 6), gaussian(rng, 6, kEmbeddingWidth), false, drop),
            0.5);
}

TEST(Discriminator, NeedsFourFrames) {
  const DiscriminatorNet net = make_discriminator(1);
  Rng rng(17), drop(18);
  EXPECT_THROW(discriminate(net, random_positions(rng, 3), gaussian(rng, 3, kEmbeddingWidth), false, drop),
               Error);
}

TEST(Discriminator, JointPermutationInvariance) {
  // Swap the left and right arm chains in the joint order.
  std::vector<std::size_t> order{0, 1, 2, 3, 4, 9, 10, 11, 12, 5, 6, 7, 8};
  for (std::size_t j = 13; j < 21; ++j) order.push_back(j);
  std::vector<std::size_t> position_of(21);
  for (std::size_t i = 0; i < 21; ++i) position_of[order[i]] = i;
  std::vector<Joint> joints;
  for (std::size_t i = 0; i < 21; ++i) {
    Joint j = canonical::skeleton()->joint(order[i]);
    if (j.parent) j.parent = static_cast<int>(position_of[static_cast<std::size_t>(*j.parent)]);
    joints.push_back(j);
  }
  const auto permuted_rig = std::make_shared<const Skeleton>(joints);

  const DiscriminatorNet net = make_discriminator(19);
  DiscriminatorNet permuted = net;
  permuted.skeleton = permuted_rig;

  Rng rng(20);
  const Matrix pos = random_positions(rng, 8);
  Matrix permuted_pos(pos.rows(), pos.cols());
  for (std::size_t i = 0; i < 21; ++i)
    permuted_pos.middleCols(3 * static_cast<Eigen::Index>(i), 3) =
        pos.middleCols(3 * static_cast<Eigen::Index>(order[i]), 3);
  const Matrix condition = gaussian(rng, 8, kEmbeddingWidth);
  Rng d1(0), d2(0);
  EXPECT_NEAR(discriminate(net, pos, condition, false, d1),
              discriminate(permuted, permuted_pos, condition, false, d2), 1e-10);
}

TEST(Discriminator, InputNormalizationFit) {
  Rng rng(21);
  DiscriminatorNet net = make_discriminator(2);
  std::vector<Matrix> seqs{random_positions(rng, 5), random_positions(rng, 7)};
  fit_input_normalization(net, seqs);
  Matrix all(12, 63);
  all << seqs[0], seqs[1];
  EXPECT_LT((net.input_mean - all.colwise().mean()).cwiseAbs().maxCoeff(), 1e-9);
  const Matrix centered = all.rowwise() - net.input_mean;
  EXPECT_NEAR(net.input_scale, 1.0 / std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size())),
              1e-9);
}
