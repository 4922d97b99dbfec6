#include "seld/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "seld/error.hpp"

namespace seld {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string describe(const CartesianDOA& d) {
  std::ostringstream os;
  os << "(" << d.x << ", " << d.y << ", " << d.z << "), norm " << d.norm();
  return os.str();
}

}  // namespace

double CartesianDOA::norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
double AccdoaVector::norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }

bool is_unit(const CartesianDOA& d, double tol) noexcept { return std::abs(d.norm() - 1.0) <= tol; }

AccdoaVector encode_accdoa(double activity, const CartesianDOA& doa) {
  if (!(activity >= 0.0 && activity <= 1.0)) {
    fail(ErrorKind::range, "activity must lie in [0, 1]");
  }
  if (activity > 0.0 && !is_unit(doa)) {
    fail(ErrorKind::invalid_direction, "ACCDOA needs a unit direction, got " + describe(doa));
  }
  return {activity * doa.x, activity * doa.y, activity * doa.z};
}

DecodedAccdoa decode_accdoa(const AccdoaVector& p) noexcept {
  const double a = p.norm();
  if (a <= 1e-8) {
    return {a, std::nullopt};
  }
  return {a, CartesianDOA{p.x / a, p.y / a, p.z / a}};
}

double angular_distance(const CartesianDOA& a, const CartesianDOA& b) {
  if (!is_unit(a) || !is_unit(b)) {
    fail(ErrorKind::invalid_direction, "angular distance needs unit vectors, got " + describe(a) + " and " + describe(b));
  }
  const double cx = a.y * b.z - a.z * b.y, cy = a.z * b.x - a.x * b.z, cz = a.x * b.y - a.y * b.x;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), a.dot(b)) / kDeg;
}

double wrap_azimuth(double degrees) noexcept {
  double w = std::fmod(degrees + 180.0, 360.0);
  if (w < 0.0) {
    w += 360.0;
  }
  return w - 180.0;
}

CartesianDOA to_cartesian(const SphericalDirection& dir) noexcept {
  const double az = dir.azimuth * kDeg;
  const double el = dir.elevation * kDeg;
  return {std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el)};
}

SphericalDirection to_spherical(const CartesianDOA& doa) noexcept {
  const double n = doa.norm();
  const double el = std::asin(std::clamp(doa.z / n, -1.0, 1.0)) / kDeg;
  const double az = std::atan2(doa.y, doa.x) / kDeg;
  return {wrap_azimuth(az), el};
}

std::array<double, 4> foa_gains(const SphericalDirection& dir) noexcept {
  const CartesianDOA d = to_cartesian(dir);
  return {1.0, d.y, d.z, d.x};
}

FoaRotation::FoaRotation(int id) : id_(id) {
  if (id < 0 || id >= kCount) {
    fail(ErrorKind::range, "unknown FOA rotation id " + std::to_string(id));
  }
  // Reflection y -> -y, then rotation about z by the offset, then z sign.
  const int reflect = reflects_azimuth() ? -1 : 1;
  const int zsign = flips_elevation() ? -1 : 1;
  int c = 1, s = 0;
  switch (id_ % 4) {
    case 0: c = 1; s = 0; break;
    case 1: c = 0; s = 1; break;
    case 2: c = -1; s = 0; break;
    case 3: c = 0; s = -1; break;
  }
  m_ = {{{c, -s * reflect, 0}, {s, c * reflect, 0}, {0, 0, zsign}}};
}

int FoaRotation::azimuth_offset_deg() const noexcept {
  static constexpr int kOffsets[4] = {0, 90, 180, -90};
  return kOffsets[id_ % 4];
}

CartesianDOA FoaRotation::apply(const CartesianDOA& d) const noexcept {
  const double v[3] = {d.x, d.y, d.z};
  double r[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i] += m_[i][j] * v[j];
    }
  }
  return {r[0], r[1], r[2]};
}

SphericalDirection FoaRotation::apply(const SphericalDirection& d) const noexcept {
  const double az = reflects_azimuth() ? -d.azimuth : d.azimuth;
  const double el = flips_elevation() ? -d.elevation : d.elevation;
  return {wrap_azimuth(az + azimuth_offset_deg()), el};
}

}  // namespace seld
