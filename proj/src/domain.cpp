#include "kramers/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kramers/errors.hpp"

namespace kramers {

Domain Domain::interval(double a, double b) {
  if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) {
    throw ParameterDomain("interval domain requires 0 <= a < b < inf");
  }
  Domain d(DomainKind::Interval, 1);
  d.lower_ = a;
  d.upper_ = b;
  return d;
}

Domain Domain::half_plane_ordered() { return Domain(DomainKind::HalfPlaneOrdered, 2); }

Domain Domain::disk(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterDomain("disk radius must be positive");
  Domain d(DomainKind::Disk, 2);
  d.radius_ = radius;
  return d;
}

Domain Domain::all_space(int dim) {
  if (dim < 1 || dim > kMaxDim) throw ParameterDomain("dimension out of range");
  return Domain(DomainKind::AllSpace, dim);
}

double Domain::boundary_distance(const Vector& x) const {
  if (x.size() != dim_ || !x.allFinite()) return 0.0;
  double dist = 0.0;
  switch (kind_) {
    case DomainKind::Interval:
      dist = std::min(x[0] - lower_, upper_ - x[0]);
      break;
    case DomainKind::HalfPlaneOrdered:
      dist = (x[1] - x[0]) / std::sqrt(2.0);
      break;
    case DomainKind::Disk:
      dist = radius_ - x.norm();
      break;
    case DomainKind::AllSpace:
      return std::numeric_limits<double>::infinity();
  }
  return std::max(dist, 0.0);
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case DomainKind::Interval:
      os << "interval(" << lower_ << ", " << upper_ << ")";
      break;
    case DomainKind::HalfPlaneOrdered:
      os << "half_plane_order(x1 < x2)";
      break;
    case DomainKind::Disk:
      os << "disk(" << radius_ << ")";
      break;
    case DomainKind::AllSpace:
      os << "all_space(" << dim_ << ")";
      break;
  }
  return os.str();
}

std::vector<Vector> Domain::lattice(std::size_t count, double extent) const {
  std::vector<Vector> points;
  if (count == 0) return points;
  if (dim_ == 1) {
    double lo = -extent, hi = extent;
    if (kind_ == DomainKind::Interval) {
      lo = lower_;
      hi = upper_;
    }
    for (std::size_t i = 0; i < count; ++i) {
      Vector x(1);
      x[0] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      points.push_back(x);
    }
    return points;
  }

  // Regular grid on a bounding box, refined until at least `count` points
  // fall inside the domain, then truncated.
  double half = kind_ == DomainKind::Disk ? radius_ : extent;
  auto per_axis = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(count), 1.0 / dim_)));
  for (;;) {
    points.clear();
    std::size_t total = 1;
    for (int d = 0; d < dim_; ++d) total *= per_axis;
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vector x(dim_);
      std::size_t rem = idx;
      for (int d = 0; d < dim_; ++d) {
        const std::size_t c = rem % per_axis;
        rem /= per_axis;
        x[d] = -half + 2.0 * half * (static_cast<double>(c) + 0.5) / static_cast<double>(per_axis);
      }
      if (contains(x)) points.push_back(x);
    }
    if (points.size() >= count) break;
    ++per_axis;
  }
  // Uniform thinning keeps the spread over the whole box.
  std::vector<Vector> thinned;
  thinned.reserve(count);
  for (std::size_t i = 0; i < count; ++i) thinned.push_back(points[i * points.size() / count]);
  return thinned;
}

}  // namespace kramers
