#pragma once

#include <array>
#include <optional>

namespace seld {

/// Unit direction in a right-handed frame: x forward, y left, z up.
struct CartesianDOA {
  double x = 1.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const noexcept;
  double dot(const CartesianDOA& o) const noexcept { return x * o.x + y * o.y + z * o.z; }
  bool operator==(const CartesianDOA&) const = default;
};

/// Activity-coupled DOA: direction is the DOA, length is the activity.
struct AccdoaVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const noexcept;
  bool operator==(const AccdoaVector&) const = default;
};

/// Degrees. Azimuth in [-180, 180) measured from +x towards +y; elevation in [-90, 90].
struct SphericalDirection {
  double azimuth = 0.0;
  double elevation = 0.0;
  bool operator==(const SphericalDirection&) const = default;
};

struct DecodedAccdoa {
  double activity = 0.0;
  std::optional<CartesianDOA> doa;
};

/// Tolerance on |‖doa‖ - 1| for a vector to count as a direction.
inline constexpr double kUnitTolerance = 1e-6;

bool is_unit(const CartesianDOA& d, double tol = kUnitTolerance) noexcept;

/// activity · doa. Throws invalid_direction for a non-unit doa when activity > 0.
AccdoaVector encode_accdoa(double activity, const CartesianDOA& doa);

/// (‖p‖, p/‖p‖); the direction is absent for ‖p‖ <= 1e-8.
DecodedAccdoa decode_accdoa(const AccdoaVector& p) noexcept;

/// Great-circle angle in degrees, in [0, 180].
double angular_distance(const CartesianDOA& a, const CartesianDOA& b);

CartesianDOA to_cartesian(const SphericalDirection& dir) noexcept;
SphericalDirection to_spherical(const CartesianDOA& doa) noexcept;

/// Wrap any azimuth into [-180, 180).
double wrap_azimuth(double degrees) noexcept;

/// First-order ambisonic encoding gains, ACN order (W, Y, Z, X), SN3D.
std::array<double, 4> foa_gains(const SphericalDirection& dir) noexcept;

/// One of the 16 direction-preserving FOA channel transforms: azimuth offsets
/// of {0, 90, 180, -90} degrees, optional azimuth reflection (az -> -az,
/// applied first), optional elevation flip. Id 0 is the identity.
class FoaRotation {
 public:
  static constexpr int kCount = 16;

  explicit FoaRotation(int id);

  int id() const noexcept { return id_; }
  int azimuth_offset_deg() const noexcept;
  bool reflects_azimuth() const noexcept { return (id_ / 4) % 2 == 1; }
  bool flips_elevation() const noexcept { return id_ / 8 == 1; }

  CartesianDOA apply(const CartesianDOA& d) const noexcept;
  SphericalDirection apply(const SphericalDirection& d) const noexcept;

  /// Signed-permutation matrix acting on (x, y, z), row-major.
  const std::array<std::array<int, 3>, 3>& matrix() const noexcept { return m_; }

 private:
  int id_;
  std::array<std::array<int, 3>, 3> m_{};
};

}  // namespace seld
