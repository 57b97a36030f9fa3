#include "animgan/diff_kinematics.hpp"

#include "animgan/error.hpp"

namespace animgan {

using ndl::Matrix;
using ndl::Tape;
using ndl::Var;

namespace {

Mat3 rotation_of(double w, double x, double y, double z) {
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Pullback of a gradient on R(q) to the four quaternion components.
Eigen::Vector4d rotation_pullback(const Mat3& g, double w, double x, double y, double z) {
  Eigen::Vector4d out;
  out[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) +
                x * g(2, 1));
  out[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
                z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  out[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  out[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
                2 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return out;
}

struct FrameKinematics {
  std::vector<Mat3> local;
  std::vector<Mat3> global;
};

FrameKinematics frame_forward(const Skeleton& skeleton, const Matrix& rotations,
                              Eigen::Index row, Matrix& positions) {
  const std::size_t n = skeleton.size();
  FrameKinematics fk{std::vector<Mat3>(n), std::vector<Mat3>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = static_cast<Eigen::Index>(4 * j);
    fk.local[j] = rotation_of(rotations(row, c), rotations(row, c + 1), rotations(row, c + 2),
                              rotations(row, c + 3));
    const auto& parent = skeleton.joint(j).parent;
    const auto pc = static_cast<Eigen::Index>(3 * j);
    if (!parent) {
      fk.global[j] = fk.local[j];
      positions.block<1, 3>(row, pc).setZero();
      continue;
    }
    const auto p = static_cast<std::size_t>(*parent);
    const Vec3 pos = positions.block<1, 3>(row, static_cast<Eigen::Index>(3 * p)).transpose() +
                     fk.global[p] * skeleton.joint(j).offset;
    positions.block<1, 3>(row, pc) = pos.transpose();
    fk.global[j] = fk.global[p] * fk.local[j];
  }
  return fk;
}

void check_width(const Skeleton& skeleton, const Matrix& rotations) {
  require(rotations.cols() == static_cast<Eigen::Index>(4 * skeleton.size()), ErrorKind::Usage,
          "rotation matrix width " + std::to_string(rotations.cols()) + " does not match " +
              std::to_string(skeleton.size()) + " joints");
}

}  // namespace

Matrix quat_normalize(const Matrix& raw) {
  require(raw.cols() % 4 == 0, ErrorKind::Usage, "quaternion block width is not a multiple of 4");
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (Eigen::Index c = 0; c < raw.cols(); c += 4) {
      const Eigen::Vector4d q = raw.block<1, 4>(r, c).transpose();
      const double norm = q.norm();
      if (norm < kDegenerateNorm) {
        out.block<1, 4>(r, c) << 1.0, 0.0, 0.0, 0.0;
        continue;
      }
      const double sign = q[0] < 0.0 ? -1.0 : 1.0;
      out.block<1, 4>(r, c) = (sign / norm) * q.transpose();
    }
  }
  return out;
}

Var quat_normalize(Var raw) {
  Tape& tape = *raw.tape();
  return tape.record(quat_normalize(raw.value()), {raw}, [raw](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& in = t.value(raw.id());
    Matrix gin = Matrix::Zero(in.rows(), in.cols());
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      for (Eigen::Index c = 0; c < in.cols(); c += 4) {
        const Eigen::Vector4d q = in.block<1, 4>(r, c).transpose();
        const double norm = q.norm();
        if (norm < kDegenerateNorm) {
          continue;
        }
        const double sign = q[0] < 0.0 ? -1.0 : 1.0;
        const Eigen::Vector4d u = q / norm;
        const Eigen::Vector4d gq = g.block<1, 4>(r, c).transpose();
        gin.block<1, 4>(r, c) = ((sign / norm) * (gq - u * u.dot(gq))).transpose();
      }
    }
    t.accumulate(raw.id(), gin);
  });
}

Matrix forward_kinematics(const Skeleton& skeleton, const Matrix& rotations) {
  check_width(skeleton, rotations);
  Matrix positions(rotations.rows(), static_cast<Eigen::Index>(3 * skeleton.size()));
  for (Eigen::Index r = 0; r < rotations.rows(); ++r) {
    frame_forward(skeleton, rotations, r, positions);
  }
  return positions;
}

Var forward_kinematics(const Skeleton& skeleton, Var rotations) {
  check_width(skeleton, rotations.value());
  Tape& tape = *rotations.tape();
  auto rig = std::make_shared<const Skeleton>(skeleton);
  Matrix positions = forward_kinematics(skeleton, rotations.value());
  return tape.record(std::move(positions), {rotations}, [rig, rotations](Tape& t, std::size_t self) {
    const Skeleton& sk = *rig;
    const std::size_t n = sk.size();
    const Matrix& rot = t.value(rotations.id());
    const Matrix& g = t.grad(self);
    Matrix scratch(1, static_cast<Eigen::Index>(3 * n));
    Matrix gin(rot.rows(), rot.cols());
    std::vector<Vec3> g_pos(n);
    std::vector<Mat3> g_global(n);
    for (Eigen::Index r = 0; r < rot.rows(); ++r) {
      Matrix row = rot.row(r);
      const FrameKinematics fk = frame_forward(sk, row, 0, scratch);
      for (std::size_t j = 0; j < n; ++j) {
        g_pos[j] = g.block<1, 3>(r, static_cast<Eigen::Index>(3 * j)).transpose();
        g_global[j].setZero();
      }
      for (std::size_t j = n; j-- > 0;) {
        Mat3 g_local;
        const auto& parent = sk.joint(j).parent;
        if (!parent) {
          g_local = g_global[j];
        } else {
          const auto p = static_cast<std::size_t>(*parent);
          g_pos[p] += g_pos[j];
          g_global[p] += g_pos[j] * sk.joint(j).offset.transpose();
          g_global[p] += g_global[j] * fk.local[j].transpose();
          g_local = fk.global[p].transpose() * g_global[j];
        }
        const auto c = static_cast<Eigen::Index>(4 * j);
        gin.block<1, 4>(r, c) =
            rotation_pullback(g_local, row(0, c), row(0, c + 1), row(0, c + 2), row(0, c + 3))
                .transpose();
      }
    }
    t.accumulate(rotations.id(), gin);
  });
}

Matrix positions_matrix(const std::vector<JointPositions>& frames) {
  require(!frames.empty(), ErrorKind::Usage, "no frames");
  const std::size_t n = frames.front().size();
  Matrix out(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(3 * n));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require(frames[t].size() == n, ErrorKind::Usage, "frames differ in joint count");
    for (std::size_t j = 0; j < n; ++j) {
      out.block<1, 3>(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(3 * j)) =
          frames[t][j].transpose();
    }
  }
  return out;
}

std::vector<JointPositions> positions_from_matrix(const Matrix& positions) {
  require(positions.cols() % 3 == 0, ErrorKind::Usage, "position width is not a multiple of 3");
  std::vector<JointPositions> out(static_cast<std::size_t>(positions.rows()));
  for (Eigen::Index t = 0; t < positions.rows(); ++t) {
    auto& frame = out[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < positions.cols() / 3; ++j) {
      frame.push_back(positions.block<1, 3>(t, 3 * j).transpose());
    }
  }
  return out;
}

}  // namespace animgan
