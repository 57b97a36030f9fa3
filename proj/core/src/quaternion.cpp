#include "animgan/quaternion.hpp"

#include "animgan/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace animgan {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 unit_axis(int axis) { return Vec3::Unit(axis); }

// +1 for cyclic sequences (XYZ, YZX, ZXY), -1 for the others.
double parity(const EulerOrder& order) {
  return ((order.axis(1) - order.axis(0) + 3) % 3 == 1) ? 1.0 : -1.0;
}

}  // namespace

Quat canonicalize(const Quat& q) {
  if (q.w() < 0.0) {
    return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

Quat normalized_canonical(const Quat& q) {
  const double n = q.norm();
  if (!(n >= kDegenerateNorm) || !std::isfinite(n)) {
    return Quat::Identity();
  }
  return canonicalize(Quat(q.coeffs() / n));
}

bool is_unit(const Quat& q, double tolerance) { return std::abs(q.norm() - 1.0) <= tolerance; }

double rotation_angle(const Quat& q) {
  const Quat c = canonicalize(q.normalized());
  return 2.0 * std::atan2(c.vec().norm(), c.w());
}

double geodesic_distance(const Quat& a, const Quat& b) {
  return rotation_angle(a.conjugate() * b);
}

Quat axis_angle(const Vec3& axis, double radians) {
  return Quat(Eigen::AngleAxisd(radians, axis.normalized()));
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  return normalized_canonical(a.slerp(t, b));
}

EulerOrder::EulerOrder(int first, int second, int third) : axes_{first, second, third} {
  const bool valid = first >= 0 && first < 3 && second >= 0 && second < 3 && third >= 0 &&
                     third < 3 && first != second && second != third && first != third;
  require(valid, ErrorKind::Usage, "Euler order needs three distinct axes");
}

bool EulerOrder::parse(std::string_view letters, EulerOrder& out) {
  if (letters.size() != 3) {
    return false;
  }
  std::array<int, 3> axes{};
  for (std::size_t i = 0; i < 3; ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(letters[i])));
    if (c < 'X' || c > 'Z') {
      return false;
    }
    axes[i] = c - 'X';
  }
  if (axes[0] == axes[1] || axes[1] == axes[2] || axes[0] == axes[2]) {
    return false;
  }
  out = EulerOrder(axes[0], axes[1], axes[2]);
  return true;
}

std::string EulerOrder::to_string() const {
  std::string s(3, 'X');
  for (std::size_t i = 0; i < 3; ++i) {
    s[i] = static_cast<char>('X' + axes_[i]);
  }
  return s;
}

Quat euler_to_quat(const Vec3& degrees, const EulerOrder& order) {
  Quat q = Quat::Identity();
  for (int i = 0; i < 3; ++i) {
    q = q * Quat(Eigen::AngleAxisd(degrees[i] * kDegToRad, unit_axis(order.axis(i))));
  }
  return normalized_canonical(q);
}

Vec3 quat_to_euler(const Quat& q, const EulerOrder& order) {
  const Mat3 r = q.normalized().toRotationMatrix();
  const int i = order.axis(0);
  const int j = order.axis(1);
  const int k = order.axis(2);
  const double s = parity(order);

  const double sin_mid = std::clamp(s * r(i, k), -1.0, 1.0);
  const double mid = std::asin(sin_mid);
  double first = 0.0;
  double last = 0.0;
  if (std::abs(sin_mid) < 1.0 - 1e-12) {
    first = std::atan2(-s * r(j, k), r(k, k));
    last = std::atan2(-s * r(i, j), r(i, i));
  } else {
    // Gimbal lock: fold everything into the first angle.
    const Mat3 m = r * Eigen::AngleAxisd(mid, unit_axis(j)).toRotationMatrix().transpose();
    const int p = (i + 1) % 3;
    const int qa = (i + 2) % 3;
    first = std::atan2(m(qa, p), m(p, p));
  }
  return Vec3(first, mid, last) / kDegToRad;
}

}  // namespace animgan
