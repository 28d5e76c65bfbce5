#include "hvo/interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hvo/errors.hpp"

namespace hvo {

Axis::Axis(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("axis needs at least one breakpoint");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw InvalidArgument("axis breakpoint is not finite");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw InvalidArgument("axis breakpoints must be strictly ascending");
    }
  }
  uniform_ = true;
  if (points_.size() == 1) return;
  const double n = static_cast<double>(points_.size() - 1);
  const double step = (points_.back() - points_.front()) / n;
  const double tol = 1e-12 * (points_.back() - points_.front());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (std::abs(points_[i] - (points_.front() + static_cast<double>(i) * step)) > tol) {
      uniform_ = false;
      break;
    }
  }
  inv_step_ = 1.0 / step;
}

Axis Axis::linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw InvalidArgument("linspace needs at least two points");
  std::vector<double> p(n);
  const double span = hi - lo;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  p.back() = hi;
  return Axis(std::move(p));
}

Cell Axis::locate(double x) const {
  if (points_.size() == 1) return {0, 0.0};
  const std::size_t last_cell = points_.size() - 2;
  std::size_t i;
  if (uniform_) {
    const double f = (x - points_.front()) * inv_step_;
    i = f <= 0.0 ? 0 : std::min(static_cast<std::size_t>(f), last_cell);
    // Rounding in f can land one cell off; settle on p[i] <= x < p[i+1].
    while (i > 0 && x < points_[i]) --i;
    while (i < last_cell && x >= points_[i + 1]) ++i;
  } else {
    auto it = std::upper_bound(points_.begin(), points_.end(), x);
    const auto pos = static_cast<std::size_t>(it - points_.begin());
    i = pos == 0 ? 0 : std::min(pos - 1, last_cell);
  }
  return {i, (x - points_[i]) / (points_[i + 1] - points_[i])};
}

Curve::Curve(Axis x, std::vector<double> values) : x_(std::move(x)), values_(std::move(values)) {
  if (x_.size() < 2) throw InvalidArgument("curve needs at least two breakpoints");
  if (values_.size() != x_.size()) throw InvalidArgument("curve values do not match its axis");
}

double Curve::operator()(double x) const {
  if (!x_.contains(x)) {
    throw OutOfRange("curve query " + std::to_string(x) + " outside [" +
                     std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
  }
  const Cell c = x_.locate(x);
  return lerp(values_[c.index], values_[c.index + 1], c.t);
}

double Curve::clamped(double x) const {
  if (x <= x_.front()) return values_.front();
  if (x >= x_.back()) return values_.back();
  return (*this)(x);
}

Grid2D::Grid2D(Axis x, Axis y, std::vector<double> values)
    : x_(std::move(x)), y_(std::move(y)), values_(std::move(values)) {
  if (x_.size() < 2 || y_.size() < 2) throw InvalidArgument("map axes need two breakpoints each");
  if (values_.size() != x_.size() * y_.size()) {
    throw InvalidArgument("grid values do not match its axes");
  }
}

double Grid2D::operator()(double x, double y) const {
  if (!contains(x, y)) {
    throw OutOfRange("map query (" + std::to_string(x) + ", " + std::to_string(y) +
                     ") outside the bounding box");
  }
  const Cell cx = x_.locate(x);
  const Cell cy = y_.locate(y);
  const double lo = lerp(at(cx.index, cy.index), at(cx.index + 1, cy.index), cx.t);
  const double hi = lerp(at(cx.index, cy.index + 1), at(cx.index + 1, cy.index + 1), cx.t);
  return lerp(lo, hi, cy.t);
}

std::vector<double> Grid2D::slice_at_x(double x) const {
  if (!x_.contains(x)) throw OutOfRange("map slice outside the speed range");
  const Cell cx = x_.locate(x);
  std::vector<double> slice(y_.size());
  for (std::size_t iy = 0; iy < y_.size(); ++iy) {
    slice[iy] = lerp(at(cx.index, iy), at(cx.index + 1, iy), cx.t);
  }
  return slice;
}

Grid2D Grid2D::transformed(double x_scale, double y_scale, double value_scale) const {
  std::vector<double> xs = x_.points();
  std::vector<double> ys = y_.points();
  std::vector<double> vs = values_;
  for (double& v : xs) v *= x_scale;
  for (double& v : ys) v *= y_scale;
  for (double& v : vs) v *= value_scale;
  return Grid2D(Axis(std::move(xs)), Axis(std::move(ys)), std::move(vs));
}

double interp_slice(const Axis& y, std::span<const double> slice, double y_query) {
  const Cell cy = y.locate(y_query);
  return lerp(slice[cy.index], slice[cy.index + 1], cy.t);
}

MonotoneCurve::MonotoneCurve(Axis x, std::vector<double> values)
    : x_(std::move(x)), values_(std::move(values)) {
  const std::size_t n = x_.size();
  if (values_.size() != n) throw InvalidArgument("curve values do not match its axis");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (values_[i + 1] - values_[i]) / h[i];
  }
  slopes_.assign(n, 0.0);
  if (n == 2) {
    slopes_[0] = slopes_[1] = delta[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] > 0.0) {
      // Weighted harmonic mean keeps the interpolant monotone.
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) return 3.0 * d0;
    return d;
  };
  slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double MonotoneCurve::operator()(double x) const {
  if (!x_.contains(x)) throw OutOfRange("monotone curve query outside its axis");
  const Cell c = x_.locate(x);
  const std::size_t i = c.index;
  const double h = x_[i + 1] - x_[i];
  const double t = c.t;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * values_[i] + h10 * h * slopes_[i] + h01 * values_[i + 1] + h11 * h * slopes_[i + 1];
}

MonotoneCurve MonotoneCurve::scaled(double factor) const {
  std::vector<double> v = values_;
  for (double& y : v) y *= factor;
  return MonotoneCurve(x_, std::move(v));
}

}  // namespace hvo
