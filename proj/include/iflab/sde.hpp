#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "iflab/gaussian.hpp"
#include "iflab/parallel.hpp"
#include "iflab/potential.hpp"
#include "iflab/rng.hpp"

namespace iflab {

// (1 - e^{-beta/N^d}) / (1 + e^{-beta/N^d}); odd in beta, valued in (-1,1).
inline double skew_intensity(double beta, int N, int d) {
  const double e = std::exp(-beta / std::pow(double(N), double(d)));
  return (1.0 - e) / (1.0 + e);
}

struct SkewLevel {
  double beta = 0.0;
  double level = 0.0;   // scaled level N^{1-d/2} y_j
  double gamma = 0.0;   // crossing intensity
};

// Interacting diffusion with drift -A x - (1/2) N^{-d/2-1} g0'(N^{d/2-1} x_i),
// unit Brownian noise per component, and skew reflection at the scaled step
// levels of the potential.
struct SkewSDEConfig {
  QuadraticModel model;
  Potential pot;
  int N = 1;
  int d = 1;
  double dt = 1e-3;
  double horizon = 1.0;
  double noise_scale = 1.0;   // 0 turns the scheme into explicit Euler (test hook)
  double blowup_guard = 1e8;
  std::vector<SkewLevel> levels;  // sorted by level
  double arg_scale = 1.0;     // N^{d/2-1}
  double drift_scale = 1.0;   // (1/2) N^{-d/2-1}
  double lambda_max = 0.0;
  bool level_separation_warning = false;
};

inline SkewSDEConfig make_skew_config(QuadraticModel model, Potential pot,
                                      int N, int d, double dt, double horizon) {
  if (dt <= 0.0 || horizon <= 0.0)
    throw std::invalid_argument("skew config: dt and horizon must be positive");
  SkewSDEConfig cfg;
  cfg.model = std::move(model);
  cfg.pot = std::move(pot);
  cfg.N = N;
  cfg.d = d;
  cfg.dt = dt;
  cfg.horizon = horizon;
  cfg.arg_scale = std::pow(double(N), 0.5 * d - 1.0);
  cfg.drift_scale = 0.5 * std::pow(double(N), -0.5 * d - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cfg.model.A);
  cfg.lambda_max = es.eigenvalues().maxCoeff();
  if (dt * cfg.lambda_max > 0.5)
    throw std::invalid_argument(
        "skew config: dt * lambda_max(A) exceeds the stability bound 0.5");
  const double level_scale = std::pow(double(N), 1.0 - 0.5 * d);
  for (const auto& st : cfg.pot.steps) {
    SkewLevel lv;
    lv.beta = st.jump;
    lv.level = level_scale * st.level;
    lv.gamma = skew_intensity(st.jump, N, d);
    cfg.levels.push_back(lv);
  }
  std::sort(cfg.levels.begin(), cfg.levels.end(),
            [](const SkewLevel& a, const SkewLevel& b) {
              return a.level < b.level;
            });
  for (std::size_t j = 1; j < cfg.levels.size(); ++j)
    if (cfg.levels[j].level - cfg.levels[j - 1].level <
        10.0 * std::sqrt(dt))
      cfg.level_separation_warning = true;
  return cfg;
}

inline Eigen::VectorXd drift(const SkewSDEConfig& cfg,
                             const Eigen::VectorXd& x) {
  if (x.size() != cfg.model.size())
    throw std::invalid_argument("drift: dimension mismatch");
  Eigen::VectorXd out = -(cfg.model.A * x);
  if (cfg.pot.smooth.kind != SmoothPart::Kind::Zero)
    for (Eigen::Index i = 0; i < x.size(); ++i)
      out[i] -= cfg.drift_scale *
                cfg.pot.smooth_derivative(cfg.arg_scale * x[i]);
  return out;
}

struct StepDiagnostics {
  long straddle_warnings = 0;  // extra levels resolved within one step
};

namespace detail {

// Occupation-density estimator kernel: Gaussian of width eps, truncated at
// 4 eps.  Used for the local-time records only; the dynamics at the levels
// are carried by the crossing rule.
inline double local_time_kernel(double u, double eps) {
  const double a = std::fabs(u);
  if (a >= 4.0 * eps) return 0.0;
  return std::exp(-0.5 * u * u / (eps * eps)) /
         (eps * std::sqrt(2.0 * M_PI));
}

// Resolve the crossing rule for one component moving from `from` to `to`:
// each time the segment straddles a level (or starts an excursion exactly at
// one), the part beyond the level ends on the upper side with probability
// (1+gamma)/2.  Nearest level first; any further straddle counts as a
// warning (dt too coarse for the level gaps).
inline double resolve_crossings(const std::vector<SkewLevel>& levels,
                                double from, double to, Rng& rng,
                                StepDiagnostics& diag) {
  if (levels.empty() || from == to) return to;
  const SkewLevel* last = nullptr;
  int resolved = 0;
  for (int guard = 0; guard < 16; ++guard) {
    const SkewLevel* hit = nullptr;
    double best = 1e300;
    for (const auto& lv : levels) {
      if (&lv == last) continue;  // an excursion is biased only once
      const double a = from - lv.level, b = to - lv.level;
      const bool crossed = (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) ||
                           (a == 0.0 && b != 0.0);
      if (!crossed) continue;
      const double dist = std::fabs(lv.level - from);
      if (dist < best) {
        best = dist;
        hit = &lv;
      }
    }
    if (!hit) break;
    if (resolved > 0) ++diag.straddle_warnings;
    ++resolved;
    const double overshoot = std::fabs(to - hit->level);
    const bool up = rng.uniform() < 0.5 * (1.0 + hit->gamma);
    from = hit->level;
    to = hit->level + (up ? overshoot : -overshoot);
    last = hit;
    if (overshoot == 0.0) break;
  }
  return to;
}

}  // namespace detail

// One explicit Euler step with the biased-crossing rule; local-time
// accumulators are advanced with the kernel estimator.
inline void step(const SkewSDEConfig& cfg, Eigen::VectorXd& x,
                 Eigen::MatrixXd& local_times, Rng& rng,
                 StepDiagnostics& diag) {
  const Eigen::VectorXd mu = drift(cfg, x);
  const double sq = std::sqrt(cfg.dt) * cfg.noise_scale;
  const double eps = std::sqrt(cfg.dt);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double proposal = x[i] + mu[i] * cfg.dt + sq * rng.normal();
    const double landed =
        detail::resolve_crossings(cfg.levels, x[i], proposal, rng, diag);
    x[i] = landed;
    for (std::size_t j = 0; j < cfg.levels.size(); ++j)
      local_times(i, Eigen::Index(j)) +=
          cfg.dt * detail::local_time_kernel(landed - cfg.levels[j].level, eps);
  }
}

struct Trajectory {
  std::vector<double> times;        // stored intrinsic times
  Eigen::MatrixXd states;           // row per stored time
  std::vector<Eigen::MatrixXd> local_times;  // per stored time: k x levels
  StepDiagnostics diag;
  int N = 1;
  double dt = 0.0;
};

inline Trajectory simulate(const SkewSDEConfig& cfg, const Eigen::VectorXd& x0,
                           std::uint64_t seed, long stride = 1) {
  if (x0.size() != cfg.model.size())
    throw std::invalid_argument("simulate: initial state dimension mismatch");
  if (stride < 1) throw std::invalid_argument("simulate: stride >= 1");
  const long steps = std::lround(cfg.horizon / cfg.dt);
  Rng rng = Rng::split(seed, 0x73646573ULL);
  Trajectory tr;
  tr.N = cfg.N;
  tr.dt = cfg.dt;
  const long stored = steps / stride + 1;
  tr.states.resize(stored, x0.size());
  tr.times.reserve(std::size_t(stored));
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd lt =
      Eigen::MatrixXd::Zero(x0.size(), Eigen::Index(cfg.levels.size()));
  long row = 0;
  tr.states.row(row) = x.transpose();
  tr.times.push_back(0.0);
  tr.local_times.push_back(lt);
  ++row;
  for (long s = 1; s <= steps; ++s) {
    step(cfg, x, lt, rng, tr.diag);
    const double norm = x.cwiseAbs().maxCoeff();
    if (!(norm < cfg.blowup_guard))
      throw std::runtime_error("simulate: state norm " + std::to_string(norm) +
                               " exceeded the guard at t=" +
                               std::to_string(double(s) * cfg.dt));
    if (s % stride == 0) {
      tr.states.row(row) = x.transpose();
      tr.times.push_back(double(s) * cfg.dt);
      tr.local_times.push_back(lt);
      ++row;
    }
  }
  tr.states.conservativeResize(row, Eigen::NoChange);
  return tr;
}

// Lattice states of u_t = H X_{N^2 t} read from a stored trajectory.
struct InterfacePath {
  std::vector<double> times;  // u-times
  Eigen::MatrixXd states;     // row per time: lattice state X_{N^2 t}
};

inline InterfacePath rescaled_interface(const Trajectory& tr,
                                        const std::vector<double>& utimes) {
  InterfacePath out;
  out.times = utimes;
  out.states.resize(Eigen::Index(utimes.size()), tr.states.cols());
  const double tmax = tr.times.back();
  for (std::size_t j = 0; j < utimes.size(); ++j) {
    const double s = double(tr.N) * double(tr.N) * utimes[j];
    if (s > tmax + 1e-9)
      throw std::invalid_argument(
          "rescaled_interface: horizon too short for requested time");
    // nearest stored time; stored grid must resolve the request
    std::size_t lo = 0, hi = tr.times.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (tr.times[mid] < s) lo = mid + 1; else hi = mid;
    }
    std::size_t best = lo;
    if (lo > 0 && std::fabs(tr.times[lo - 1] - s) < std::fabs(tr.times[lo] - s))
      best = lo - 1;
    if (std::fabs(tr.times[best] - s) > 0.5 * tr.dt + 1e-9)
      throw std::invalid_argument(
          "rescaled_interface: stored stride does not resolve requested time");
    out.states.row(Eigen::Index(j)) = tr.states.row(Eigen::Index(best));
  }
  return out;
}

// Independent replicas, each started from `initial` and read at the given
// u-times.  Per-replica RNG streams are split deterministically from the
// seed and results are merged in replica order, so the worker count does not
// change the output.
struct PathEnsemble {
  std::vector<double> times;            // u-times
  std::vector<Eigen::MatrixXd> states;  // per time: replicas x k
  long straddle_warnings = 0;
};

inline PathEnsemble stationary_ensemble_run(
    const SkewSDEConfig& cfg,
    const std::function<Eigen::VectorXd(int)>& initial, int replicas,
    const std::vector<double>& utimes, std::uint64_t seed, int workers = 1) {
  if (replicas < 1)
    throw std::invalid_argument("stationary_ensemble_run: replicas >= 1");
  const Eigen::Index k = cfg.model.size();
  PathEnsemble out;
  out.times = utimes;
  std::vector<long> target_steps;
  for (double t : utimes) {
    const double s = double(cfg.N) * double(cfg.N) * t;
    const long st = std::lround(s / cfg.dt);
    if (std::fabs(st * cfg.dt - s) > 0.5 * cfg.dt + 1e-9 ||
        s > cfg.horizon + 1e-9)
      throw std::invalid_argument(
          "stationary_ensemble_run: output time not resolved by dt/horizon");
    target_steps.push_back(st);
  }
  long max_step = 0;
  for (long st : target_steps) max_step = std::max(max_step, st);
  for (std::size_t j = 0; j < utimes.size(); ++j)
    out.states.emplace_back(replicas, k);

  std::vector<long> warnings(std::size_t(replicas), 0);
  parallel_for(replicas, workers, [&](int r) {
    Rng rng = Rng::split(seed, 0x72657000ULL + std::uint64_t(r));
    Eigen::VectorXd x = initial(r);
    Eigen::MatrixXd lt =
        Eigen::MatrixXd::Zero(k, Eigen::Index(cfg.levels.size()));
    StepDiagnostics diag;
    for (std::size_t j = 0; j < target_steps.size(); ++j)
      if (target_steps[j] == 0) out.states[j].row(r) = x.transpose();
    for (long s = 1; s <= max_step; ++s) {
      step(cfg, x, lt, rng, diag);
      if (!(x.cwiseAbs().maxCoeff() < cfg.blowup_guard))
        throw std::runtime_error("stationary_ensemble_run: blow-up in replica " +
                                 std::to_string(r));
      for (std::size_t j = 0; j < target_steps.size(); ++j)
        if (target_steps[j] == s) out.states[j].row(r) = x.transpose();
    }
    warnings[std::size_t(r)] = diag.straddle_warnings;
  });
  for (long w : warnings) out.straddle_warnings += w;
  return out;
}

}  // namespace iflab
