#include "kramers/lyapunov_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "kramers/errors.hpp"
#include "kramers/models.hpp"

namespace kramers {

namespace {

std::vector<double> geometric(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  if (count == 1) {
    out.push_back(hi);
    return out;
  }
  const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo * std::exp(ratio * static_cast<double>(i)));
  return out;
}

Vector point2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

double apply_generator(const Model& model, const LyapunovCandidate& candidate, const Vector& x) {
  const Vector drift = limiting_drift(model, x);
  const Matrix diff = limiting_diffusion(model, x);
  const Matrix big_gamma = diff * diff.transpose();
  return drift.dot(candidate.gradient(x)) + 0.5 * (big_gamma * candidate.hessian(x)).trace();
}

bool ShellFamily::contains(int k, const Vector& x) const {
  if (!domain_.contains(x)) return false;
  const double r = x.norm();
  if (!domain_.has_boundary()) return r < k;
  return domain_.boundary_distance(x) > 1.0 / k && r < k;
}

long ShellFamily::level(const Vector& x) const {
  double scale = x.norm();
  if (domain_.has_boundary()) scale = std::max(scale, 1.0 / domain_.boundary_distance(x));
  return static_cast<long>(std::min(std::floor(scale), 1e15)) + 1;
}

std::vector<Vector> ShellFamily::sample_complement(int k, std::size_t count, std::uint64_t seed) const {
  if (k < 1 || count == 0) throw SamplingFailure("sample_complement: need k >= 1 and count >= 1");
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double band = 1.0 / k;
  const std::vector<double> deltas = geometric(1e-3 * band, band, std::max<std::size_t>(count / 2, 1));
  std::vector<Vector> raw;

  switch (domain_.kind()) {
    case DomainKind::Interval: {
      const double a = domain_.lower(), b = domain_.upper();
      for (double d : deltas) {
        raw.push_back(Vector::Constant(1, a + d));
        raw.push_back(Vector::Constant(1, b - d));
      }
      if (b > k) {
        for (std::size_t i = 0; i < count / 2; ++i) {
          raw.push_back(Vector::Constant(1, std::max(a, double(k)) + unit(rng) * (b - std::max(a, double(k)))));
        }
      }
      break;
    }
    case DomainKind::Disk: {
      const double c = domain_.radius();
      for (double d : deltas) {
        const double th = 2.0 * std::numbers::pi * unit(rng);
        raw.push_back(point2((c - d) * std::cos(th), (c - d) * std::sin(th)));
      }
      if (k < c) {
        for (std::size_t i = 0; i < count / 2; ++i) {
          const double r = k + unit(rng) * (c - k);
          const double th = 2.0 * std::numbers::pi * unit(rng);
          raw.push_back(point2(r * std::cos(th), r * std::sin(th)));
        }
      }
      break;
    }
    case DomainKind::HalfPlaneOrdered: {
      const double s = 1.0 / std::sqrt(2.0);
      for (double d : deltas) {
        const double u = (2.0 * unit(rng) - 1.0) * k;
        raw.push_back(point2(s * (u - d), s * (u + d)));
      }
      for (std::size_t i = 0; i < count / 2; ++i) {
        const double r = k * (1.0 + 3.0 * unit(rng));
        const double th = std::numbers::pi * (0.25 + unit(rng));
        raw.push_back(point2(r * std::cos(th), r * std::sin(th)));
      }
      break;
    }
    case DomainKind::AllSpace: {
      std::normal_distribution<double> normal;
      for (std::size_t i = 0; i < count; ++i) {
        Vector dir(domain_.dim());
        for (int j = 0; j < domain_.dim(); ++j) dir[j] = normal(rng);
        raw.push_back(dir.normalized() * (k * (1.0 + 3.0 * unit(rng))));
      }
      break;
    }
  }

  std::vector<Vector> out;
  for (Vector& x : raw) {
    if (domain_.contains(x) && !contains(k, x)) out.push_back(std::move(x));
  }
  if (out.empty()) throw SamplingFailure("sample_complement: X \\ X_k has no representable points");
  return out;
}

P1Report verify_p1(const Domain& domain, const LyapunovCandidate& candidate, std::span<const int> shells,
                   std::size_t samples_per_shell) {
  if (shells.empty()) throw DomainError("verify_p1: shell range is empty");
  const ShellFamily family(domain);
  P1Report report;
  bool finite = true;
  for (int k : shells) {
    P1Shell shell;
    shell.k = k;
    shell.min_value = std::numeric_limits<double>::infinity();
    for (const Vector& x : family.sample_complement(k, samples_per_shell)) {
      const double v = candidate.value(x);
      if (std::isnan(v)) finite = false;
      shell.min_value = std::min(shell.min_value, v);
      ++shell.samples;
    }
    report.shells.push_back(shell);
  }
  // X \ X_k shrinks as k grows, so samples drawn for a larger k also bound the
  // infimum for every smaller one.
  std::vector<std::size_t> order(report.shells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.shells[a].k > report.shells[b].k;
  });
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t idx : order) {
    running = std::min(running, report.shells[idx].min_value);
    report.shells[idx].min_value = running;
  }

  bool monotone = true;
  for (std::size_t i = 1; i < report.shells.size(); ++i) {
    if (report.shells[i].k > report.shells[i - 1].k && report.shells[i].min_value < report.shells[i - 1].min_value) {
      monotone = false;
    }
  }
  const double first = report.shells.front().min_value;
  const double last = report.shells.back().min_value;
  report.pass = finite && monotone && last > 10.0 * first && last > 0.0;
  return report;
}

P2Report verify_p2(const Model& model, const LyapunovCandidate& candidate, std::span<const Vector> grid) {
  const ShellFamily family(model.domain);
  P2Report report;
  std::vector<double> lv, v;
  std::vector<long> level;
  bool finite = true;
  for (const Vector& x : grid) {
    if (!model.domain.contains(x)) continue;
    double gen = std::numeric_limits<double>::quiet_NaN();
    double val = candidate.value(x);
    try {
      gen = apply_generator(model, candidate, x);
    } catch (const Error&) {
    }
    if (!std::isfinite(gen) || !std::isfinite(val)) {
      finite = false;
      continue;
    }
    lv.push_back(gen);
    v.push_back(val);
    level.push_back(family.level(x));
  }
  report.grid_points = lv.size();
  if (lv.empty()) return report;

  const long top = *std::max_element(level.begin(), level.end());
  const double split = std::sqrt(static_cast<double>(top));

  std::vector<double> coefficients{0.0};
  for (int e = 0; e <= 10; ++e) coefficients.push_back(std::ldexp(1.0, e));

  bool found = false;
  double best_violation = std::numeric_limits<double>::infinity();
  for (double c : coefficients) {
    double inner = -std::numeric_limits<double>::infinity();
    double outer = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const double r = lv[i] - c * v[i];
      if (static_cast<double>(level[i]) > split) {
        outer = std::max(outer, r);
      } else {
        inner = std::max(inner, r);
      }
    }
    const double violation = std::max(0.0, outer - inner - 1e-9 * (1.0 + std::abs(inner)));
    const double d = std::max({inner, outer, 0.0});
    if (violation == 0.0 && !found) {
      found = true;
      report.C = c;
      report.D = d;
      report.max_violation = 0.0;
    }
    if (!found && violation < best_violation) {
      best_violation = violation;
      report.C = c;
      report.D = d;
      report.max_violation = violation;
    }
  }
  report.pass = found && finite;
  return report;
}

std::vector<Vector> default_p2_grid(const Domain& domain) {
  std::vector<Vector> grid = domain.lattice(200);
  switch (domain.kind()) {
    case DomainKind::Interval: {
      const double a = domain.lower(), b = domain.upper();
      for (double d : geometric(1e-4, 0.5 * (b - a), 25)) {
        grid.push_back(Vector::Constant(1, a + d));
        grid.push_back(Vector::Constant(1, b - d));
      }
      break;
    }
    case DomainKind::Disk: {
      const double c = domain.radius();
      for (double d : geometric(1e-4, c, 25)) {
        for (int j = 0; j < 24; ++j) {
          const double th = 2.0 * std::numbers::pi * (j + 0.5) / 24.0;
          grid.push_back(point2((c - d) * std::cos(th), (c - d) * std::sin(th)));
        }
      }
      break;
    }
    case DomainKind::HalfPlaneOrdered: {
      const double s = 1.0 / std::sqrt(2.0);
      std::vector<double> along{0.0};
      for (double u : geometric(1e-1, 1e4, 11)) {
        along.push_back(u);
        along.push_back(-u);
      }
      for (double d : geometric(1e-4, 1e4, 33)) {
        for (double u : along) grid.push_back(point2(s * (u - d), s * (u + d)));
      }
      break;
    }
    case DomainKind::AllSpace: {
      const int n = domain.dim();
      std::vector<Vector> dirs;
      for (int i = 0; i < n; ++i) {
        Vector e = Vector::Zero(n);
        e[i] = 1.0;
        dirs.push_back(e);
        dirs.push_back(-e);
      }
      dirs.push_back(Vector::Ones(n).normalized());
      dirs.push_back(-Vector::Ones(n).normalized());
      grid.push_back(Vector::Zero(n));
      for (double r : geometric(1e-2, 1e4, 25)) {
        for (const Vector& e : dirs) grid.push_back(r * e);
      }
      break;
    }
  }
  return grid;
}

std::vector<int> default_shells() { return {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024}; }

LyapunovReport check_lyapunov(const Model& model, const LyapunovCandidate& candidate) {
  LyapunovReport report;
  const std::vector<int> shells = default_shells();
  report.p1 = verify_p1(model.domain, candidate, shells, 200);
  const std::vector<Vector> grid = default_p2_grid(model.domain);
  report.p2 = verify_p2(model, candidate, grid);
  return report;
}

nlohmann::json to_json(const LyapunovReport& report) {
  nlohmann::json p1 = nlohmann::json::array();
  for (const P1Shell& s : report.p1.shells) {
    p1.push_back({{"k", s.k}, {"min_V", s.min_value}, {"samples", s.samples}});
  }
  return {{"p1", p1},
          {"p1_pass", report.p1.pass},
          {"p2",
           {{"C", report.p2.C},
            {"D", report.p2.D},
            {"max_violation", report.p2.max_violation},
            {"grid_points", report.p2.grid_points},
            {"pass", report.p2.pass}}},
          {"pass", report.pass()}};
}

}  // namespace kramers
