#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kramers/types.hpp"

namespace kramers {

enum class DomainKind { Interval, HalfPlaneOrdered, Disk, AllSpace };

// Open state space X. Membership is equivalent to a strictly positive
// boundary distance; outside points report distance 0.
class Domain {
 public:
  static Domain interval(double a, double b);
  // {(x1, x2) : x1 < x2}
  static Domain half_plane_ordered();
  static Domain disk(double radius);
  static Domain all_space(int dim);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double radius() const { return radius_; }
  bool has_boundary() const { return kind_ != DomainKind::AllSpace; }

  bool contains(const Vector& x) const { return boundary_distance(x) > 0.0; }
  double boundary_distance(const Vector& x) const;

  std::string describe() const;

  // Deterministic point set covering the domain: ~count interior points on
  // a regular lattice. Unbounded directions are truncated at `extent`.
  std::vector<Vector> lattice(std::size_t count, double extent = 5.0) const;

 private:
  Domain(DomainKind kind, int dim) : kind_(kind), dim_(dim) {}

  DomainKind kind_;
  int dim_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double radius_ = 0.0;
};

}  // namespace kramers
