#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qbench/errors.hpp"
#include "qbench/linalg.hpp"

namespace qbench {

enum class OptimizerMethod { nelder_mead, bobyqa_style_quadratic };

inline const char* to_string(OptimizerMethod m) {
  return m == OptimizerMethod::nelder_mead ? "nelder_mead" : "bobyqa_style_quadratic";
}

inline OptimizerMethod optimizer_method_from_string(std::string_view s) {
  if (s == "nelder_mead" || s == "nelder-mead") return OptimizerMethod::nelder_mead;
  if (s == "bobyqa_style_quadratic" || s == "bobyqa") return OptimizerMethod::bobyqa_style_quadratic;
  throw ValidationError(fmt::format("unknown optimizer '{}'", s));
}

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::nelder_mead;
  int max_evaluations = 2000;
  double ftol = 1e-8;          // Nelder-Mead: spread of simplex values
  double xtol = 1e-6;          // final trust radius
  double simplex_diameter = 1e-5;  // Nelder-Mead also needs a simplex this small
  double initial_step = 0.5;   // simplex edge / initial trust radius
  double lower = -kPi;
  double upper = kPi;
  int restarts = 4;            // random restarts when a run does not converge
  int refine_rounds = 0;       // least-squares quadratic refinement rounds after the search
  double refine_radius = 0.3;
  double refine_min_radius = 0.1;
  std::uint64_t rng_seed = 0;
  bool periodic = false;       // f repeats with period (upper - lower) in every coordinate
};

struct OptimizeResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each iteration
  double f_std_error = 0.0;   // refinement only: standard error of the fitted f
};

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

// Thrown by CountedObjective when a search asks for more than max_evaluations.
struct BudgetExhausted {};

class CountedObjective {
 public:
  CountedObjective(const Objective& f, const OptimizerConfig& cfg) : f_(f), cfg_(cfg) {}

  double operator()(std::vector<double>& x) {
    if (exhausted()) throw BudgetExhausted{};
    for (auto& v : x) v = std::clamp(v, cfg_.lower, cfg_.upper);
    ++evaluations;
    const double y = f_(x);
    if (y < best_f) {
      best_f = y;
      best_x = x;
    }
    return y;
  }
  bool exhausted() const { return evaluations >= cfg_.max_evaluations; }

  int evaluations = 0;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;

 private:
  const Objective& f_;
  const OptimizerConfig& cfg_;
};

inline void check_config(std::span<const double> x0, const OptimizerConfig& cfg) {
  if (x0.empty()) throw ValidationError("optimizer needs at least one parameter");
  if (!(cfg.lower < cfg.upper)) throw ValidationError("optimizer bounds are empty");
  if (cfg.max_evaluations < 1) throw ValidationError("max_evaluations must be >= 1");
  if (cfg.refine_rounds > 0 && !(cfg.refine_min_radius > 0.0 && cfg.refine_radius >= cfg.refine_min_radius)) {
    throw ValidationError("refinement radii must satisfy 0 < refine_min_radius <= refine_radius");
  }
}

}  // namespace detail

/// Nelder-Mead simplex search with iterates clamped to the box.
inline OptimizeResult nelder_mead(const Objective& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  detail::check_config(x0, cfg);
  const std::size_t n = x0.size();
  detail::CountedObjective obj(f, cfg);
  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = simplex[i + 1][i];
    v = v + cfg.initial_step <= cfg.upper ? v + cfg.initial_step : v - cfg.initial_step;
  }
  OptimizeResult res;
  std::vector<std::size_t> order(n + 1);
  try {
    for (std::size_t i = 0; i <= n; ++i) values[i] = obj(simplex[i]);
    while (true) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
      res.trace.push_back(values[best]);

      double diameter = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(simplex[i][k] - simplex[best][k]));
        diameter = std::max(diameter, d);
      }
      if (values[worst] - values[best] <= cfg.ftol && diameter <= cfg.simplex_diameter) {
        res.converged = true;
        break;
      }
      if (diameter <= 1e-12) {
        res.converged = values[worst] - values[best] <= cfg.ftol;
        break;
      }
      if (obj.exhausted()) break;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == worst) continue;
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
        return p;
      };
      auto xr = along(-1.0);
      const double fr = obj(xr);
      if (fr < values[best]) {
        auto xe = along(-2.0);
        const double fe = obj(xe);
        if (fe < fr) {
          simplex[worst] = xe;
          values[worst] = fe;
        } else {
          simplex[worst] = xr;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = xr;
        values[worst] = fr;
        continue;
      }
      const bool outside = fr < values[worst];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = obj(xc);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = xc;
        values[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == best) continue;
        for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
        values[i] = obj(simplex[i]);
      }
    }
  } catch (const detail::BudgetExhausted&) {
    res.converged = false;
  }
  res.x = obj.best_x;
  res.f = obj.best_f;
  res.evaluations = obj.evaluations;
  return res;
}

namespace detail {

// Quadratic model m(s) = c + g.s + s.H.s/2 around a center point.
struct QuadraticModel {
  double c = 0.0;
  RealVector g;
  RealMatrix h;
  double scale = 1.0;
  RealMatrix cov;  // coefficient covariance of a least-squares fit (empty when interpolating)

  double value(const RealVector& s) const { return c + g.dot(s) + 0.5 * s.dot(h * s); }
  double variance(const RealVector& s) const;
};

inline RealVector quadratic_features(const RealVector& s) {
  const auto n = s.size();
  RealVector phi(1 + n + n * (n + 1) / 2);
  phi[0] = 1.0;
  phi.segment(1, n) = s;
  Eigen::Index k = 1 + n;
  for (Eigen::Index i = 0; i < n; ++i) {
    phi[k++] = 0.5 * s[i] * s[i];
    for (Eigen::Index j = i + 1; j < n; ++j) phi[k++] = s[i] * s[j];
  }
  return phi;
}

inline QuadraticModel fit_quadratic(const std::vector<RealVector>& pts, const std::vector<double>& vals, const RealVector& center,
                                    double scale) {
  const auto n = center.size();
  const auto m = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index p = 1 + n + n * (n + 1) / 2;
  RealMatrix a(m, p);
  RealVector b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    a.row(r) = quadratic_features((pts[static_cast<std::size_t>(r)] - center) / scale).transpose();
    b[r] = vals[static_cast<std::size_t>(r)];
  }
  const auto cod = a.completeOrthogonalDecomposition();
  const RealVector coef = cod.solve(b);
  QuadraticModel q;
  q.scale = scale;
  if (m > p && cod.rank() == p) {
    const double sigma2 = (a * coef - b).squaredNorm() / static_cast<double>(m - p);
    q.cov = sigma2 * (a.transpose() * a).inverse();
  }
  q.c = coef[0];
  q.g = coef.segment(1, n) / scale;
  q.h = RealMatrix::Zero(n, n);
  Eigen::Index k = 1 + n;
  for (Eigen::Index i = 0; i < n; ++i) {
    q.h(i, i) = coef[k++] / (scale * scale);
    for (Eigen::Index j = i + 1; j < n; ++j) q.h(i, j) = q.h(j, i) = coef[k++] / (scale * scale);
  }
  return q;
}

inline double QuadraticModel::variance(const RealVector& s) const {
  if (cov.size() == 0) return 0.0;
  const RealVector phi = quadratic_features(s / scale);
  return phi.dot(cov * phi);
}

// Approximate minimizer of the model over ||s|| <= radius intersected with the box.
inline RealVector trust_region_step(const QuadraticModel& q, double radius, const RealVector& lo, const RealVector& hi) {
  const auto n = q.g.size();
  auto clip = [&](RealVector s) {
    for (Eigen::Index i = 0; i < n; ++i) s[i] = std::clamp(s[i], lo[i], hi[i]);
    return s;
  };
  std::vector<RealVector> candidates;
  // Ball-constrained exact solution via the secular equation.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(q.h);
  const RealVector ev = es.eigenvalues();
  const RealVector gt = es.eigenvectors().transpose() * q.g;
  auto step_for = [&](double lambda) {
    RealVector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = ev[i] + lambda;
      y[i] = std::abs(d) > 1e-14 ? -gt[i] / d : 0.0;
    }
    return RealVector(es.eigenvectors() * y);
  };
  const double lambda_min = std::max(0.0, -ev.minCoeff());
  if (ev.minCoeff() > 0) {
    RealVector s = step_for(0.0);
    if (s.norm() <= radius) candidates.push_back(s);
  }
  if (candidates.empty()) {
    double a = lambda_min + 1e-12, b = lambda_min + q.g.norm() / radius + std::abs(ev.maxCoeff()) + 1.0;
    if (step_for(a).norm() > radius) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        (step_for(mid).norm() > radius ? a : b) = mid;
      }
      candidates.push_back(step_for(b));
    } else {
      // Hard case: move along the lowest eigenvector to the boundary.
      RealVector s = step_for(a);
      const RealVector u = es.eigenvectors().col(0);
      const double t = std::sqrt(std::max(0.0, radius * radius - s.squaredNorm()));
      candidates.push_back(s + t * u);
      candidates.push_back(s - t * u);
    }
  }
  // Cauchy-type points along the negative gradient and the eigenvectors.
  if (q.g.norm() > 0) candidates.push_back(-radius * q.g.normalized());
  for (Eigen::Index i = 0; i < n; ++i) {
    candidates.push_back(radius * es.eigenvectors().col(i));
    candidates.push_back(-radius * es.eigenvectors().col(i));
  }
  RealVector best = RealVector::Zero(n);
  double best_val = q.value(best);
  for (auto& s : candidates) {
    // Backtrack toward the box, then clip.
    RealVector c = clip(s);
    for (int k = 0; k < 3; ++k) {
      const double v = q.value(c);
      if (v < best_val) {
        best_val = v;
        best = c;
      }
      c = clip(0.5 * c);
    }
  }
  return best;
}

}  // namespace detail

/// Bounded derivative-free trust-region search on a quadratic interpolation
/// model fitted to (n+1)(n+2)/2 points.
inline OptimizeResult bobyqa_style(const Objective& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  detail::check_config(x0, cfg);
  const auto n = static_cast<Eigen::Index>(x0.size());
  detail::CountedObjective obj(f, cfg);
  const RealVector lo = RealVector::Constant(n, cfg.lower), hi = RealVector::Constant(n, cfg.upper);
  auto eval = [&](const RealVector& x) {
    std::vector<double> v(x.data(), x.data() + x.size());
    const double y = obj(v);
    return std::pair{RealVector(Eigen::Map<RealVector>(v.data(), n)), y};
  };

  double radius = std::min(cfg.initial_step, 0.5 * (cfg.upper - cfg.lower));
  std::vector<RealVector> pts;
  std::vector<double> vals;
  auto add_point = [&](const RealVector& x) {
    auto [xc, y] = eval(x);
    pts.push_back(xc);
    vals.push_back(y);
  };
  RealVector start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = std::clamp(x0[static_cast<std::size_t>(i)], cfg.lower, cfg.upper);
  auto offset = [&](const RealVector& base, Eigen::Index i, double d) {
    RealVector x = base;
    x[i] = x[i] + d <= cfg.upper && x[i] + d >= cfg.lower ? x[i] + d : x[i] - d;
    return x;
  };
  OptimizeResult res;
  try {
    add_point(start);
    for (Eigen::Index i = 0; i < n; ++i) {
      add_point(offset(start, i, radius));
      add_point(offset(start, i, -radius));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) add_point(offset(offset(start, i, radius), j, radius));
    }

    // Geometry refresh cycles through +-e_i and e_i +- e_j so cross terms get refreshed too.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> design;  // (i, j) with j = -1 for an axis
    for (Eigen::Index i = 0; i < n; ++i) design.emplace_back(i, -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) design.emplace_back(i, j);
    }
    int geometry_cursor = 0;
    auto geometry_point = [&](const RealVector& base) {
      const auto k = static_cast<std::size_t>(geometry_cursor) % design.size();
      const bool flip = (static_cast<std::size_t>(geometry_cursor) / design.size()) % 2 == 1;
      ++geometry_cursor;
      const auto [i, j] = design[k];
      RealVector x = offset(base, i, flip && j < 0 ? -radius : radius);
      if (j >= 0) x = offset(x, j, flip ? -radius : radius);
      return x;
    };
    while (!obj.exhausted()) {
      const auto best_idx = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
      const RealVector xb = pts[best_idx];
      const double fb = vals[best_idx];
      res.trace.push_back(fb);
      if (radius <= cfg.xtol) {
        res.converged = true;
        break;
      }
      const detail::QuadraticModel q = detail::fit_quadratic(pts, vals, xb, radius);
      const RealVector s = detail::trust_region_step(q, radius, lo - xb, hi - xb);
      const double predicted = q.value(RealVector::Zero(n)) - q.value(s);

      // Farthest interpolation point from the current best.
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const double d = (pts[k] - xb).norm();
        if (d > far_dist) {
          far_dist = d;
          far = k;
        }
      }
      if (s.norm() < 0.1 * radius || predicted <= 1e-15 * std::max(1.0, std::abs(fb))) {
        if (far_dist > 2.0 * radius) {
          // Improve geometry before trusting the model again.
          auto [xg, yg] = eval(geometry_point(xb));
          pts[far] = xg;
          vals[far] = yg;
        } else {
          radius *= 0.5;
        }
        continue;
      }
      auto [xn, fn] = eval(xb + s);
      const double rho = (fb - fn) / predicted;
      // Replace the farthest point, or the worst if the farthest is the best itself.
      std::size_t replace = far;
      if (replace == best_idx) {
        replace = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
      }
      if (fn < fb || (xn - xb).norm() < far_dist) {
        pts[replace] = xn;
        vals[replace] = fn;
      }
      if (rho > 0.75 && s.norm() > 0.9 * radius) {
        radius = std::min(2.0 * radius, 0.5 * (cfg.upper - cfg.lower));
      } else if (rho < 0.1) {
        if (far_dist > 2.0 * radius) {
          auto [xg, yg] = eval(geometry_point(xb));
          const std::size_t slot = far == best_idx ? replace : far;
          pts[slot] = xg;
          vals[slot] = yg;
        } else {
          radius *= 0.5;
        }
      }
    }
  } catch (const detail::BudgetExhausted&) {
    res.converged = false;
  }
  res.x = obj.best_x;
  res.f = obj.best_f;
  res.evaluations = obj.evaluations;
  return res;
}

/// Refinement for noisy objectives. Each round samples a 1 + 2n + 2n(n-1)
/// point design of radius r around the center, fits a quadratic by least
/// squares to every sample within 1.5 r, and moves to the model minimizer
/// inside a ball of radius 2r. r shrinks by 0.8 (down to refine_min_radius)
/// whenever the step stays inside r.
inline OptimizeResult refine_quadratic(const Objective& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  detail::check_config(x0, cfg);
  const auto n = static_cast<Eigen::Index>(x0.size());
  const RealVector lo = RealVector::Constant(n, cfg.lower), hi = RealVector::Constant(n, cfg.upper);
  RealVector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = std::clamp(x0[static_cast<std::size_t>(i)], cfg.lower, cfg.upper);
  std::vector<RealVector> pts;
  std::vector<double> vals;
  auto sample = [&](RealVector x) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(x[i], cfg.lower, cfg.upper);
    std::vector<double> v(x.data(), x.data() + n);
    vals.push_back(f(v));
    pts.push_back(std::move(x));
  };
  OptimizeResult res;
  double r = cfg.refine_radius;
  for (int round = 0; round < cfg.refine_rounds; ++round) {
    sample(c);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (double a : {-r, r}) sample(c + a * RealVector::Unit(n, i));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        for (double a : {-r, r}) {
          for (double b : {-r, r}) sample(c + a * RealVector::Unit(n, i) + b * RealVector::Unit(n, j));
        }
      }
    }
    std::vector<RealVector> near;
    std::vector<double> near_vals;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if ((pts[k] - c).norm() <= 1.5 * r) {
        near.push_back(pts[k]);
        near_vals.push_back(vals[k]);
      }
    }
    const detail::QuadraticModel q = detail::fit_quadratic(near, near_vals, c, r);
    const RealVector s = detail::trust_region_step(q, 2.0 * r, lo - c, hi - c);
    c += s;
    res.f = q.value(s);
    res.f_std_error = std::sqrt(q.variance(s));
    res.trace.push_back(res.f);
    if (s.norm() < r) r = std::max(cfg.refine_min_radius, 0.8 * r);
  }
  res.x.assign(c.data(), c.data() + n);
  res.evaluations = static_cast<int>(vals.size());
  res.converged = true;
  return res;
}

inline OptimizeResult minimize(const Objective& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  OptimizeResult res = cfg.method == OptimizerMethod::nelder_mead ? nelder_mead(f, x0, cfg) : bobyqa_style(f, x0, cfg);
  // With periodic coordinates the box edges are the same point. A search that
  // ends on an edge is repeated with those coordinates shifted by half a
  // period, which puts the edge point in the middle of the box.
  const double period = cfg.upper - cfg.lower;
  auto wrap = [&](double v) {
    double w = std::fmod(v - cfg.lower, period);
    if (w < 0) w += period;
    return cfg.lower + w;
  };
  for (std::size_t round = 0; cfg.periodic && round < x0.size(); ++round) {
    const double tol = 1e-6 * period;
    std::vector<double> shift(res.x.size(), 0.0);
    bool edge = false;
    for (std::size_t i = 0; i < res.x.size(); ++i) {
      if (res.x[i] >= cfg.upper - tol || res.x[i] <= cfg.lower + tol) {
        shift[i] = 0.5 * period;
        edge = true;
      }
    }
    OptimizerConfig c = cfg;
    c.max_evaluations = cfg.max_evaluations - res.evaluations;
    if (!edge || c.max_evaluations <= 0) break;
    auto unshift = [&](std::span<const double> y) {
      std::vector<double> x(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) x[i] = wrap(y[i] + shift[i]);
      return x;
    };
    const Objective g = [&](std::span<const double> y) { return f(unshift(y)); };
    std::vector<double> y0(res.x.size());
    for (std::size_t i = 0; i < y0.size(); ++i) y0[i] = wrap(res.x[i] - shift[i]);
    OptimizeResult next = c.method == OptimizerMethod::nelder_mead ? nelder_mead(g, y0, c) : bobyqa_style(g, y0, c);
    next.x = unshift(next.x);
    next.evaluations += res.evaluations;
    next.trace.insert(next.trace.begin(), res.trace.begin(), res.trace.end());
    if (next.f >= res.f) {
      res.evaluations = next.evaluations;
      res.trace = std::move(next.trace);
      break;
    }
    res = std::move(next);
  }
  if (cfg.refine_rounds > 0 && !res.x.empty()) {
    const OptimizeResult polished = refine_quadratic(f, res.x, cfg);
    res.x = polished.x;
    res.f = polished.f;
    res.f_std_error = polished.f_std_error;
    res.evaluations += polished.evaluations;
    res.trace.insert(res.trace.end(), polished.trace.begin(), polished.trace.end());
  }
  return res;
}

}  // namespace qbench
