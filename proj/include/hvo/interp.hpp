#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hvo {

/// Location of a query inside an axis: the cell index i (points[i] <= x <=
/// points[i+1]) and the normalized position t in [0, 1] within that cell.
struct Cell {
  std::size_t index = 0;
  double t = 0.0;
};

/// Strictly ascending breakpoint vector. Uniformly spaced axes are located in
/// O(1); all other axes by binary search. Both paths return the same cell.
/// A single breakpoint is allowed (degenerate DP axes); Curve and Grid2D
/// still need two.
class Axis {
 public:
  Axis() = default;
  explicit Axis(std::vector<double> points);

  static Axis linspace(double lo, double hi, std::size_t n);

  std::size_t size() const { return points_.size(); }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const std::vector<double>& points() const { return points_; }
  bool uniform() const { return uniform_; }

  bool contains(double x) const { return x >= points_.front() && x <= points_.back(); }

  /// Precondition: contains(x). The last node maps to (size-2, 1.0); a
  /// single-point axis returns (0, 0.0).
  Cell locate(double x) const;

  friend bool operator==(const Axis& a, const Axis& b) { return a.points_ == b.points_; }

 private:
  std::vector<double> points_;
  bool uniform_ = false;
  double inv_step_ = 0.0;
};

/// Linear interpolation between two samples, written so that t = 0 and t = 1
/// return the end values exactly.
inline double lerp(double a, double b, double t) { return (1.0 - t) * a + t * b; }

/// Piecewise-linear function of one variable.
class Curve {
 public:
  Curve() = default;
  Curve(Axis x, std::vector<double> values);

  const Axis& x() const { return x_; }
  const std::vector<double>& values() const { return values_; }

  /// Throws OutOfRange outside the axis span.
  double operator()(double x) const;
  /// Holds the end values outside the axis span.
  double clamped(double x) const;

  friend bool operator==(const Curve& a, const Curve& b) {
    return a.x_ == b.x_ && a.values_ == b.values_;
  }

 private:
  Axis x_;
  std::vector<double> values_;
};

/// Gridded map over (speed, torque). values are row-major with one row per
/// x breakpoint: values[ix * y.size() + iy].
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(Axis x, Axis y, std::vector<double> values);

  const Axis& x() const { return x_; }
  const Axis& y() const { return y_; }
  const std::vector<double>& values() const { return values_; }
  double at(std::size_t ix, std::size_t iy) const { return values_[ix * y_.size() + iy]; }

  bool contains(double x, double y) const { return x_.contains(x) && y_.contains(y); }

  /// Bilinear interpolation; exact at grid nodes. Throws OutOfRange outside
  /// the bounding box.
  double operator()(double x, double y) const;

  /// The map restricted to a fixed x: one blended value per y breakpoint.
  /// Interpolating this slice along y with the same Axis reproduces
  /// operator()(x, y) bit for bit.
  std::vector<double> slice_at_x(double x) const;

  Grid2D transformed(double x_scale, double y_scale, double value_scale) const;

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.x_ == b.x_ && a.y_ == b.y_ && a.values_ == b.values_;
  }

 private:
  Axis x_;
  Axis y_;
  std::vector<double> values_;
};

/// Same as Grid2D::operator().
inline double interp2(const Grid2D& map, double x, double y) { return map(x, y); }

/// Interpolates a slice produced by Grid2D::slice_at_x.
double interp_slice(const Axis& y, std::span<const double> slice, double y_query);

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes). Monotone data stay monotone between breakpoints.
class MonotoneCurve {
 public:
  MonotoneCurve() = default;
  MonotoneCurve(Axis x, std::vector<double> values);

  const Axis& x() const { return x_; }
  const std::vector<double>& values() const { return values_; }

  /// Throws OutOfRange outside the axis span.
  double operator()(double x) const;

  MonotoneCurve scaled(double factor) const;

 private:
  Axis x_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

}  // namespace hvo
