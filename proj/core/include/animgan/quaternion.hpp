#pragma once

#include <Eigen/Geometry>

#include <array>
#include <string_view>

namespace animgan {

using Quat = Eigen::Quaterniond;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kDegenerateNorm = 1e-8;

/// Resolves the double cover: returns q or -q, whichever has w >= 0.
Quat canonicalize(const Quat& q);

/// Normalizes and canonicalizes. Vectors with norm below kDegenerateNorm map to identity.
Quat normalized_canonical(const Quat& q);

bool is_unit(const Quat& q, double tolerance = kUnitNormTolerance);

/// Rotation angle in radians, in [0, pi].
double rotation_angle(const Quat& q);

/// Geodesic distance between the rotations encoded by a and b, in radians.
double geodesic_distance(const Quat& a, const Quat& b);

Quat axis_angle(const Vec3& axis, double radians);

/// Shortest-arc spherical interpolation, renormalized and canonicalized.
Quat slerp(const Quat& a, const Quat& b, double t);

/// Euler axis sequence of a BVH joint, e.g. "ZXY" means R = Rz * Rx * Ry.
/// Only Tait-Bryan sequences (three distinct axes) are representable.
class EulerOrder {
 public:
  EulerOrder() = default;
  /// Axes are 0 = X, 1 = Y, 2 = Z.
  EulerOrder(int first, int second, int third);

  static EulerOrder zxy() { return {2, 0, 1}; }
  static bool parse(std::string_view letters, EulerOrder& out);

  int axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  std::string to_string() const;

  friend bool operator==(const EulerOrder&, const EulerOrder&) = default;

 private:
  std::array<int, 3> axes_{2, 0, 1};
};

/// Angles in degrees, listed in the order's axis sequence.
Quat euler_to_quat(const Vec3& degrees, const EulerOrder& order);

/// Inverse of euler_to_quat; the middle angle lies in [-90, 90] degrees.
Vec3 quat_to_euler(const Quat& q, const EulerOrder& order);

}  // namespace animgan
