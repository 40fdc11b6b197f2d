#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "iflab/gaussian.hpp"
#include "iflab/heightmap.hpp"
#include "iflab/potential.hpp"
#include "iflab/rng.hpp"

namespace iflab {

// Lattice measure with unnormalized density
//   exp( -x^T A x - N^{-d} sum_i g(N^{d/2-1} x_i) ).
struct PerturbedMeasure {
  QuadraticModel model;
  Potential g;
  int N = 1;
  int d = 1;
  double arg_scale = 1.0;      // N^{d/2-1}
  double energy_weight = 1.0;  // N^{-d}

  double perturbation_log_weight(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s += g.eval(arg_scale * x[i]);
    return -energy_weight * s;
  }

  double log_density_unnormalized(const Eigen::VectorXd& x) const {
    if (x.size() != model.size())
      throw std::invalid_argument("perturbed measure: dimension mismatch");
    return -x.dot(model.A * x) + perturbation_log_weight(x);
  }

  // |log perturbation weight| <= k_N ||g||_inf / N^d
  double log_weight_bound() const {
    return double(model.size()) * energy_weight * g.sup_norm_bound();
  }
};

inline PerturbedMeasure make_perturbed_measure(QuadraticModel model,
                                               Potential g, int N, int d) {
  if (N < 1 || d < 1)
    throw std::invalid_argument("perturbed measure: N, d must be positive");
  PerturbedMeasure m;
  m.model = std::move(model);
  m.g = std::move(g);
  m.N = N;
  m.d = d;
  m.arg_scale = std::pow(double(N), 0.5 * d - 1.0);
  m.energy_weight = std::pow(double(N), -double(d));
  return m;
}

enum class SamplerMethod { Importance, Mcmc };

// Importance sampling stays usable while the weight spread is bounded.
inline SamplerMethod choose_sampler(const PerturbedMeasure& m,
                                    double spread_threshold = 2.0) {
  return m.log_weight_bound() <= spread_threshold ? SamplerMethod::Importance
                                                  : SamplerMethod::Mcmc;
}

struct WeightedEnsemble {
  Eigen::MatrixXd samples;
  Eigen::VectorXd weights;  // self-normalized
  double ess = 0.0;
  bool low_ess_warning = false;
};

// Gaussian proposals reweighted by the bounded perturbation factor.
inline WeightedEnsemble sample_importance(const PerturbedMeasure& m,
                                          Eigen::Index count,
                                          std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_importance: count >= 1");
  WeightedEnsemble out;
  GaussianSampler gs(m.model, seed);
  out.samples = gs.draw_matrix(count);
  Eigen::VectorXd logw(count);
  for (Eigen::Index r = 0; r < count; ++r)
    logw[r] = m.perturbation_log_weight(out.samples.row(r).transpose());
  const double mx = logw.maxCoeff();
  out.weights = (logw.array() - mx).exp();
  out.weights /= out.weights.sum();
  out.ess = 1.0 / out.weights.squaredNorm();
  out.low_ess_warning = out.ess < 0.05 * double(count);
  return out;
}

struct McmcDiagnostics {
  double acceptance_rate = 0.0;
  bool tuning_warning = false;
  Eigen::Index proposals = 0;
};

struct McmcResult {
  Ensemble ensemble;
  McmcDiagnostics diag;
};

// Random-walk Metropolis on the unnormalized density.  The step part of g
// makes the target discontinuous, which plain Metropolis handles without
// modification.
inline McmcResult sample_mcmc(const PerturbedMeasure& m, Eigen::Index count,
                              Eigen::Index burnin, double step_scale,
                              Eigen::Index thin, std::uint64_t seed) {
  if (step_scale <= 0.0)
    throw std::invalid_argument("sample_mcmc: step scale must be positive");
  if (count < 1 || thin < 1)
    throw std::invalid_argument("sample_mcmc: count and thin must be >= 1");
  const Eigen::Index k = m.model.size();
  Rng rng = Rng::split(seed, 0x6d636d63ULL);
  McmcResult out;
  out.ensemble.samples.resize(count, k);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  double logp = m.log_density_unnormalized(x);
  Eigen::Index accepted = 0, proposals = 0;
  Eigen::VectorXd prop(k);
  const Eigen::Index total = burnin + count * thin;
  Eigen::Index kept = 0;
  for (Eigen::Index step = 0; step < total; ++step) {
    for (Eigen::Index i = 0; i < k; ++i)
      prop[i] = x[i] + step_scale * rng.normal();
    const double lp = m.log_density_unnormalized(prop);
    ++proposals;
    if (std::log(rng.uniform_pos()) < lp - logp) {
      x = prop;
      logp = lp;
      ++accepted;
    }
    if (step >= burnin && (step - burnin) % thin == thin - 1)
      out.ensemble.samples.row(kept++) = x.transpose();
  }
  out.diag.acceptance_rate = double(accepted) / double(proposals);
  out.diag.proposals = proposals;
  out.diag.tuning_warning =
      out.diag.acceptance_rate < 0.05 || out.diag.acceptance_rate > 0.95;
  return out;
}

// Positive interface with an atomic reward at height zero:
//   exp(-sum_{i=0}^{N} V(sigma x_{i+1} - sigma x_i))
//     prod_i (1_[0,inf)(x_i) dx_i + beta delta_0(dx_i)),  x_0 = x_{N+1} = 0.
struct PinningMeasure {
  std::function<double(double)> V;
  double beta = 0.0;
  int N = 1;
  double kappa = 0.0;   // integral of e^{-V}
  double sigma2 = 0.0;  // second moment of e^{-V}/kappa
  double sigma = 0.0;

  double energy(const Eigen::VectorXd& x) const {
    double H = V(sigma * x[0]);
    for (Eigen::Index i = 1; i < x.size(); ++i)
      H += V(sigma * (x[i] - x[i - 1]));
    H += V(-sigma * x[x.size() - 1]);
    return H;
  }
};

inline PinningMeasure make_pinning(std::function<double(double)> V, double beta,
                                   int N, double quad_range = 40.0,
                                   int quad_points = 400000) {
  if (beta < 0.0) throw std::invalid_argument("pinning: beta >= 0");
  if (N < 1) throw std::invalid_argument("pinning: N >= 1");
  PinningMeasure pm;
  pm.V = std::move(V);
  pm.beta = beta;
  pm.N = N;
  const double h = 2.0 * quad_range / quad_points;
  double k0 = 0.0, k2 = 0.0;
  for (int i = 0; i < quad_points; ++i) {
    const double s = -quad_range + (i + 0.5) * h;
    const double w = std::exp(-pm.V(s));
    k0 += w;
    k2 += s * s * w;
  }
  pm.kappa = k0 * h;
  pm.sigma2 = (k2 * h) / pm.kappa;
  pm.sigma = std::sqrt(pm.sigma2);
  if (!(pm.kappa > 0.0) || !std::isfinite(pm.kappa) || !std::isfinite(pm.sigma2))
    throw std::runtime_error("pinning: e^{-V} not integrable on the range");
  return pm;
}

struct PinningResult {
  Ensemble ensemble;
  double acceptance_rate = 0.0;
  double fraction_zero = 0.0;  // fraction of coordinates exactly at 0
};

// Metropolis-within-Gibbs with a mixture proposal per coordinate: an atom at
// zero (probability p0) and a reflected Gaussian step on (0,inf).  Acceptance
// ratios are taken w.r.t. the reference measure Leb + beta delta_0, so the
// atom proposal density is p0/beta.
inline PinningResult pinning_sampler(const PinningMeasure& pm,
                                     Eigen::Index count, std::uint64_t seed,
                                     Eigen::Index thin_sweeps = 10,
                                     Eigen::Index burnin_sweeps = 200,
                                     double step = 1.0) {
  if (count < 1) throw std::invalid_argument("pinning_sampler: count >= 1");
  const int n = pm.N;
  const double p0 =
      pm.beta == 0.0 ? 0.0 : std::max(pm.beta / (pm.beta + 1.0), 0.1);
  Rng rng = Rng::split(seed, 0x70696e6eULL);

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0);
  auto phi = [&](double v) {
    return std::exp(-0.5 * v * v / (step * step)) /
           (step * std::sqrt(2.0 * M_PI));
  };
  auto qc = [&](double to, double from) { return phi(to - from) + phi(to + from); };
  // bond energy around coordinate i at value v
  auto local = [&](Eigen::Index i, double v) {
    const double left = i == 0 ? 0.0 : x[i - 1];
    const double right = i == n - 1 ? 0.0 : x[i + 1];
    return pm.V(pm.sigma * (v - left)) + pm.V(pm.sigma * (right - v));
  };

  PinningResult out;
  out.ensemble.samples.resize(count, n);
  Eigen::Index accepted = 0, proposals = 0, zeros = 0, coords = 0;
  const Eigen::Index total_sweeps = burnin_sweeps + count * thin_sweeps;
  Eigen::Index kept = 0;
  for (Eigen::Index sweep = 0; sweep < total_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x[i];
      double v;
      bool to_atom;
      if (p0 > 0.0 && rng.uniform() < p0) {
        v = 0.0;
        to_atom = true;
      } else {
        v = std::fabs(xi + step * rng.normal());
        to_atom = false;
      }
      ++proposals;
      const bool from_atom = xi == 0.0;
      if (to_atom && from_atom) {
        ++accepted;
        continue;
      }
      const double dE = local(i, v) - local(i, xi);
      double log_ratio = -dE;
      if (to_atom && !from_atom)
        log_ratio += std::log(pm.beta * (1.0 - p0) * qc(xi, 0.0) / p0);
      else if (!to_atom && from_atom)
        log_ratio += std::log(p0 / (pm.beta * (1.0 - p0) * qc(v, 0.0)));
      // continuous -> continuous: reflected kernel is symmetric
      if (std::log(rng.uniform_pos()) < log_ratio) {
        x[i] = v;
        ++accepted;
      }
    }
    if (sweep >= burnin_sweeps &&
        (sweep - burnin_sweeps) % thin_sweeps == thin_sweeps - 1) {
      out.ensemble.samples.row(kept++) = x.transpose();
      for (Eigen::Index i = 0; i < n; ++i) {
        ++coords;
        if (x[i] == 0.0) ++zeros;
      }
    }
  }
  out.acceptance_rate = double(accepted) / double(proposals);
  out.fraction_zero = coords ? double(zeros) / double(coords) : 0.0;
  return out;
}

struct CriticalBetaEstimate {
  double beta_c = 0.0;
  double kappa = 0.0;
  std::vector<double> partition;  // Z_{0,1}, ..., Z_{0,n_max}
  double truncation_term = 0.0;   // last included term
};

// beta_c = kappa / (1 + sum_N Z_{0,N}) with the zero-pinning partition
// functions computed through a discretized transfer operator on [0, range].
inline CriticalBetaEstimate critical_beta_estimate(
    const std::function<double(double)>& V, int n_max, double range = 30.0,
    int grid = 2000) {
  if (n_max < 1) throw std::invalid_argument("critical_beta_estimate: n_max");
  PinningMeasure base = make_pinning(V, 0.0, 1);
  CriticalBetaEstimate out;
  out.kappa = base.kappa;
  const double sigma = base.sigma;
  const double h = range / grid;
  auto K = [&](double from, double to) {
    return std::exp(-V(sigma * (to - from)));
  };
  // f_1(v) = K(0, v); Z_{0,N} = int f_N(u) K(u, 0) du
  std::vector<double> f(static_cast<std::size_t>(grid));
  std::vector<double> fn(static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) f[std::size_t(j)] = K(0.0, (j + 0.5) * h);
  double total = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    double Z = 0.0;
    for (int j = 0; j < grid; ++j)
      Z += f[std::size_t(j)] * K((j + 0.5) * h, 0.0) * h;
    out.partition.push_back(Z);
    total += Z;
    if (n < n_max) {
      for (int j = 0; j < grid; ++j) {
        double s = 0.0;
        const double v = (j + 0.5) * h;
        for (int i = 0; i < grid; ++i)
          s += K((i + 0.5) * h, v) * f[std::size_t(i)];
        fn[std::size_t(j)] = s * h;
      }
      f.swap(fn);
    }
  }
  out.truncation_term = out.partition.back();
  out.beta_c = out.kappa / (1.0 + total);
  return out;
}

struct InterfaceEnsemble {
  Eigen::MatrixXd values;   // row r: sample r evaluated on the mesh / basis
  Eigen::VectorXd weights;  // carried through from the lattice ensemble
};

// Mesh evaluation of the interfaces H x_r.
inline InterfaceEnsemble pushforward(const Eigen::MatrixXd& samples,
                                     const Eigen::VectorXd& weights,
                                     const HeightMap& hm, const Mesh& mesh) {
  if (samples.cols() != hm.size())
    throw std::invalid_argument("pushforward: dimension mismatch");
  InterfaceEnsemble out;
  out.weights = weights;
  out.values.resize(samples.rows(), Eigen::Index(mesh.points.size()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const Eigen::VectorXd x = samples.row(r).transpose();
    for (std::size_t j = 0; j < mesh.points.size(); ++j)
      out.values(r, Eigen::Index(j)) = apply(hm, x, mesh.points[j]);
  }
  return out;
}

// Coefficients <H x_r, f_l> against a declared family of functions.
inline InterfaceEnsemble pushforward_coefficients(
    const Eigen::MatrixXd& samples, const Eigen::VectorXd& weights,
    const HeightMap& hm,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& basis) {
  if (samples.cols() != hm.size())
    throw std::invalid_argument("pushforward: dimension mismatch");
  Eigen::MatrixXd C(hm.size(), Eigen::Index(basis.size()));
  for (std::size_t l = 0; l < basis.size(); ++l)
    C.col(Eigen::Index(l)) = coefficients_of(hm, basis[l]);
  InterfaceEnsemble out;
  out.weights = weights;
  out.values = samples * (hm.amplitude * C);
  return out;
}

}  // namespace iflab
