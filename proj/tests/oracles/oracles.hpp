#pragma once

// Independent reference computations. Nothing here calls into the library's math;
// rotations are built from explicit cos/sin matrices and losses from plain loops.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using M3 = std::array<std::array<double, 3>, 3>;
using V3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

inline M3 identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline M3 multiply(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline V3 mat_vec(const M3& m, const V3& v) {
  V3 out{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out[i] += m[i][k] * v[k];
  return out;
}

// Right-handed rotation about a coordinate axis (0 = X, 1 = Y, 2 = Z).
inline M3 axis_rotation(int axis, double degrees) {
  const double r = degrees * kPi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  switch (axis) {
    case 0: return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
    case 1: return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
    default: return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  }
}

// R = R_axis0(a0) * R_axis1(a1) * R_axis2(a2), the BVH channel convention.
inline M3 euler_matrix(const std::array<int, 3>& axes, const V3& degrees) {
  M3 m = identity();
  for (int i = 0; i < 3; ++i) m = multiply(m, axis_rotation(axes[i], degrees[i]));
  return m;
}

// Rodrigues' formula.
inline M3 axis_angle_matrix(V3 axis, double radians) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  for (double& a : axis) a /= n;
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const double t = 1 - c;
  const auto [x, y, z] = axis;
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

// Rotation matrix of a unit quaternion (w, x, y, z), written out from q v q*.
inline M3 quat_matrix(double w, double x, double y, double z) {
  auto rotate = [&](const V3& v) {
    // q * (0, v)
    const double pw = -x * v[0] - y * v[1] - z * v[2];
    const double px = w * v[0] + y * v[2] - z * v[1];
    const double py = w * v[1] + z * v[0] - x * v[2];
    const double pz = w * v[2] + x * v[1] - y * v[0];
    // (q * v) * conj(q)
    return V3{-pw * x + px * w - py * z + pz * y, -pw * y + py * w - pz * x + px * z,
              -pw * z + pz * w - px * y + py * x};
  };
  M3 m{};
  for (int c = 0; c < 3; ++c) {
    V3 e{};
    e[c] = 1;
    const V3 col = rotate(e);
    for (int r = 0; r < 3; ++r) m[r][c] = col[r];
  }
  return m;
}

// Angle of a rotation matrix from its trace.
inline double matrix_angle(const M3& m) {
  const double c = std::clamp((m[0][0] + m[1][1] + m[2][2] - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

struct Chain {
  std::vector<int> parent;  // -1 for the root
  std::vector<V3> offset;
  std::vector<M3> local;
};

// position(j) = position(parent) + Global(parent) * offset(j); Global(j) = Global(parent) * local(j).
inline std::vector<V3> chain_positions(const Chain& chain) {
  const std::size_t n = chain.parent.size();
  std::vector<V3> pos(n, V3{0, 0, 0});
  std::vector<M3> global(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (chain.parent[j] < 0) {
      global[j] = chain.local[j];
      continue;
    }
    const auto p = static_cast<std::size_t>(chain.parent[j]);
    const V3 step = mat_vec(global[p], chain.offset[j]);
    for (int c = 0; c < 3; ++c) pos[j][c] = pos[p][c] + step[c];
    global[j] = multiply(global[p], chain.local[j]);
  }
  return pos;
}

using Edge = std::pair<std::size_t, std::size_t>;

// Undirected edges (lower node id first) of the k-frame graph of a rig with the given parents:
// every (joint, parent) pair within a frame and every joint between adjacent frames.
inline std::set<Edge> st_graph_edges(const std::vector<int>& parent, std::size_t frames) {
  const std::size_t j = parent.size();
  std::set<Edge> edges;
  for (std::size_t a = 0; a < frames * j; ++a) {
    for (std::size_t b = a + 1; b < frames * j; ++b) {
      const std::size_t ta = a / j, ja = a % j, tb = b / j, jb = b % j;
      const bool bone = ta == tb && (parent[ja] == static_cast<int>(jb) ||
                                     parent[jb] == static_cast<int>(ja));
      const bool temporal = ja == jb && tb == ta + 1;
      if (bone || temporal) edges.insert({a, b});
    }
  }
  return edges;
}

using Frames = std::vector<std::vector<V3>>;

inline double sq_dist(const V3& a, const V3& b) {
  double s = 0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

// Mean over frames and main joints of |a - b|^2 + |va - vb|^2, velocities scaled by fps and
// zero on the first frame.
inline double phi(const Frames& a, const Frames& b, const std::vector<std::size_t>& main,
                  double fps) {
  double total = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j : main) {
      total += sq_dist(a[t][j], b[t][j]);
      if (t > 0) {
        V3 va{}, vb{};
        for (int c = 0; c < 3; ++c) {
          va[c] = (a[t][j][c] - a[t - 1][j][c]) * fps;
          vb[c] = (b[t][j][c] - b[t - 1][j][c]) * fps;
        }
        total += sq_dist(va, vb);
      }
    }
  }
  return total / static_cast<double>(a.size() * main.size());
}

// Mean over consecutive frame pairs of the position and velocity distance between frame t-1
// and frame t, velocities taken from the sequence itself.
inline double smoothness(const Frames& s, const std::vector<std::size_t>& main, double fps) {
  if (s.size() < 2) return 0.0;
  auto velocity = [&](std::size_t t, std::size_t j) {
    V3 v{};
    if (t > 0)
      for (int c = 0; c < 3; ++c) v[c] = (s[t][j][c] - s[t - 1][j][c]) * fps;
    return v;
  };
  double total = 0;
  for (std::size_t t = 1; t < s.size(); ++t)
    for (std::size_t j : main) total += sq_dist(s[t][j], s[t - 1][j]) + sq_dist(velocity(t, j), velocity(t - 1, j));
  return total / static_cast<double>((s.size() - 1) * main.size());
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step with scalar input and hidden state; gates ordered (i, f, g, o).
struct ScalarLstm {
  std::array<double, 4> w{}, u{}, b{};
  std::pair<double, double> step(double x, double h, double c) const {
    const double i = sigmoid(w[0] * x + u[0] * h + b[0]);
    const double f = sigmoid(w[1] * x + u[1] * h + b[1]);
    const double g = std::tanh(w[2] * x + u[2] * h + b[2]);
    const double o = sigmoid(w[3] * x + u[3] * h + b[3]);
    const double c2 = f * c + i * g;
    return {o * std::tanh(c2), c2};
  }
};

// Adam on a scalar with bias correction.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0, v = 0;
  int t = 0;
  double update(double p, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace oracle
