#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "kramers/model.hpp"

namespace kramers {

// L V(x) = b(x) . grad V(x) + 1/2 tr(Gamma(x) hess V(x)) for the limiting
// diffusion, with b = gamma^{-1} F + S and Gamma = (gamma^{-1} sigma)(gamma^{-1} sigma)^T.
double apply_generator(const Model& model, const LyapunovCandidate& candidate, const Vector& x);

// Exhaustion X_k = {x in X : dist(x, dX) > 1/k and |x| < k}, or {|x| < k}
// when X has no boundary.
class ShellFamily {
 public:
  explicit ShellFamily(Domain domain) : domain_(std::move(domain)) {}

  bool contains(int k, const Vector& x) const;
  // Smallest k with x in X_k.
  long level(const Vector& x) const;
  const Domain& domain() const { return domain_; }

  // Points of X \ X_k: a band near the boundary (distances geometric in
  // [1e-3/k, 1/k]) plus the far field |x| >= k where it exists.
  // Throws SamplingFailure when no such point is representable.
  std::vector<Vector> sample_complement(int k, std::size_t count, std::uint64_t seed = 1) const;

 private:
  Domain domain_;
};

struct P1Shell {
  int k = 0;
  double min_value = 0.0;
  std::size_t samples = 0;
};

struct P1Report {
  std::vector<P1Shell> shells;
  bool pass = false;
};

// Estimates inf V over X \ X_k for each k. Passes when the estimates are
// non-decreasing in k and the last exceeds ten times the first.
P1Report verify_p1(const Domain& domain, const LyapunovCandidate& candidate, std::span<const int> shells,
                   std::size_t samples_per_shell);

struct P2Report {
  double C = 0.0;
  double D = 0.0;
  double max_violation = 0.0;
  std::size_t grid_points = 0;
  bool pass = false;
};

/// Searches C in {0, 1, 2, 4, ..., 1024} for a bound L V <= C V + D on the
/// grid. D is the maximum residual L V - C V over the grid; a pair counts as
/// admissible when that maximum is attained away from the outer shells,
/// i.e. the residual on points with shell level above sqrt(max level) does
/// not exceed the residual on the remaining points. max_violation is the
/// excess of the outer maximum over the inner one for the reported C.
P2Report verify_p2(const Model& model, const LyapunovCandidate& candidate, std::span<const Vector> grid);

// Grid for verify_p2: geometric boundary distances 1e-4 .. O(1) and, on
// unbounded domains, radii up to 1e4, plus an interior lattice.
std::vector<Vector> default_p2_grid(const Domain& domain);

struct LyapunovReport {
  P1Report p1;
  P2Report p2;
  bool pass() const { return p1.pass && p2.pass; }
};

std::vector<int> default_shells();
LyapunovReport check_lyapunov(const Model& model, const LyapunovCandidate& candidate);

// {"p1": [...], "p2": {"C":..,"D":..,"max_violation":..}, "pass": bool}
nlohmann::json to_json(const LyapunovReport& report);

}  // namespace kramers
