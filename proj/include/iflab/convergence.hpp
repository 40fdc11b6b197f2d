#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "iflab/gaussian.hpp"
#include "iflab/heightmap.hpp"
#include "iflab/perturbed.hpp"
#include "iflab/rng.hpp"
#include "iflab/sde.hpp"
#include "iflab/stats.hpp"

namespace iflab {

// Dual norm built from the sine basis with mode weights 1/k (1/(kl) in d=2):
// |eta|^2 = sum_m w_m^2 <phi_m, eta>^2.  The squared weight sum is finite, so
// the corresponding embedding is Hilbert-Schmidt.
struct DualNormSpec {
  int dim = 1;
  int modes_per_axis = 8;
  std::vector<double> weights;                       // per flattened mode
  std::vector<std::array<int, 2>> mode_index;        // (k, l); l unused in d=1

  int mode_count() const { return int(weights.size()); }

  double hs_norm_sq() const {
    double s = 0.0;
    for (double w : weights) s += w * w;
    return s;
  }

  std::function<double(const Eigen::VectorXd&)> basis_fn(int m) const {
    const int k = mode_index[std::size_t(m)][0];
    const int l = mode_index[std::size_t(m)][1];
    if (dim == 1)
      return [k](const Eigen::VectorXd& z) {
        return std::sqrt(2.0) * std::sin(k * M_PI * z[0]);
      };
    return [k, l](const Eigen::VectorXd& z) {
      return 2.0 * std::sin(k * M_PI * z[0]) * std::sin(l * M_PI * z[1]);
    };
  }

  double dual_norm_sq(const Eigen::VectorXd& projections) const {
    if (projections.size() != mode_count())
      throw std::invalid_argument("dual norm: projection size mismatch");
    double s = 0.0;
    for (int m = 0; m < mode_count(); ++m)
      s += weights[std::size_t(m)] * weights[std::size_t(m)] *
           projections[m] * projections[m];
    return s;
  }

  // matrix P with P(m, i) = amplitude * <xi_i, phi_m>; projections of an
  // interface H x are P x
  Eigen::MatrixXd projection_matrix(const HeightMap& hm) const {
    if (hm.dim != dim)
      throw std::invalid_argument("dual norm: dimension mismatch");
    Eigen::MatrixXd P(mode_count(), hm.size());
    for (int m = 0; m < mode_count(); ++m)
      P.row(m) = (hm.amplitude * coefficients_of(hm, basis_fn(m))).transpose();
    return P;
  }
};

inline DualNormSpec make_dual_norm(int dim, int modes_per_axis = 8) {
  if (dim < 1 || dim > 2)
    throw std::invalid_argument("dual norm: dim must be 1 or 2");
  DualNormSpec d;
  d.dim = dim;
  d.modes_per_axis = modes_per_axis;
  if (dim == 1) {
    for (int k = 1; k <= modes_per_axis; ++k) {
      d.weights.push_back(1.0 / k);
      d.mode_index.push_back({k, 0});
    }
  } else {
    for (int k = 1; k <= modes_per_axis; ++k)
      for (int l = 1; l <= modes_per_axis; ++l) {
        d.weights.push_back(1.0 / (double(k) * l));
        d.mode_index.push_back({k, l});
      }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Static covariance comparison.

struct CovarianceReport {
  Eigen::MatrixXd empirical, limit, stderr_;
  double max_studentized = 0.0;
  double max_abs_error = 0.0;
};

// Empirical Cov(u(s_i), u(s_j)) from mesh values against a limit kernel,
// studentized entrywise with the empirical standard error.
inline CovarianceReport covariance_compare(
    const Eigen::MatrixXd& values, const Eigen::VectorXd& weights,
    const std::function<double(double, double)>& limit,
    const std::vector<double>& points) {
  const Eigen::Index n = Eigen::Index(points.size());
  if (values.cols() != n)
    throw std::invalid_argument("covariance_compare: point count mismatch");
  const Eigen::Index M = values.rows();
  CovarianceReport rep;
  rep.empirical.resize(n, n);
  rep.limit.resize(n, n);
  rep.stderr_.resize(n, n);
  const bool weighted = weights.size() > 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      double m1 = 0.0, m2 = 0.0, wsum = 0.0;
      for (Eigen::Index r = 0; r < M; ++r) {
        const double w = weighted ? weights[r] : 1.0 / double(M);
        const double p = values(r, i) * values(r, j);
        m1 += w * p;
        m2 += w * p * p;
        wsum += w * w;
      }
      const double var = std::max(0.0, m2 - m1 * m1);
      const double se = std::sqrt(var * wsum);
      rep.empirical(i, j) = rep.empirical(j, i) = m1;
      rep.limit(i, j) = rep.limit(j, i) = limit(points[std::size_t(i)],
                                                points[std::size_t(j)]);
      rep.stderr_(i, j) = rep.stderr_(j, i) = se;
      const double err = std::fabs(m1 - rep.limit(i, j));
      rep.max_abs_error = std::max(rep.max_abs_error, err);
      if (se > 0.0)
        rep.max_studentized = std::max(rep.max_studentized, err / se);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-sample tests on projected ensembles.

struct TwoSampleReport {
  double mmd = 0.0;    // squared-MMD V-statistic (nonnegative)
  double mmd_p = 1.0;  // pooled-permutation p-value
  std::vector<double> ks;
  std::vector<double> ks_p;
  double max_ks = 0.0;
  double min_ks_p = 1.0;
  Eigen::Index m = 0, n = 0;
};

namespace detail {

inline double median_sq_distance(const Eigen::MatrixXd& pooled) {
  std::vector<double> d2;
  const Eigen::Index n = pooled.rows();
  d2.reserve(std::size_t(n) * std::size_t(n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d2.push_back((pooled.row(i) - pooled.row(j)).squaredNorm());
  if (d2.empty()) return 1.0;
  std::nth_element(d2.begin(), d2.begin() + std::ptrdiff_t(d2.size() / 2),
                   d2.end());
  const double med = d2[d2.size() / 2];
  return med > 0.0 ? med : 1.0;
}

// squared-MMD V-statistic from a pooled Gram matrix and a group assignment
inline double mmd_from_gram(const Eigen::MatrixXd& K,
                            const std::vector<int>& group, Eigen::Index m,
                            Eigen::Index n) {
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  const Eigen::Index t = K.rows();
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < t; ++j) {
      const double v = K(i, j);
      if (group[std::size_t(i)] == 0 && group[std::size_t(j)] == 0) saa += v;
      else if (group[std::size_t(i)] == 1 && group[std::size_t(j)] == 1) sbb += v;
      else if (group[std::size_t(i)] == 0) sab += v;
    }
  return saa / double(m) / double(m) + sbb / double(n) / double(n) -
         2.0 * sab / double(m) / double(n);
}

}  // namespace detail

// Gaussian-kernel MMD (median-heuristic bandwidth) plus per-projection
// Kolmogorov-Smirnov statistics, each with pooled-permutation p-values.
inline TwoSampleReport two_sample_test(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       int permutations, std::uint64_t seed) {
  if (A.cols() != B.cols() || A.rows() == 0 || B.rows() == 0)
    throw std::invalid_argument("two_sample_test: incompatible inputs");
  if (A.cols() == 0)
    throw std::invalid_argument("two_sample_test: empty projection list");
  TwoSampleReport rep;
  rep.m = A.rows();
  rep.n = B.rows();
  const Eigen::Index t = rep.m + rep.n;
  Eigen::MatrixXd pooled(t, A.cols());
  pooled.topRows(rep.m) = A;
  pooled.bottomRows(rep.n) = B;

  const double bw2 = detail::median_sq_distance(pooled);
  Eigen::MatrixXd K(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < t; ++j) {
      const double v =
          std::exp(-(pooled.row(i) - pooled.row(j)).squaredNorm() / (2.0 * bw2));
      K(i, j) = v;
      K(j, i) = v;
    }
  }

  std::vector<int> group(std::size_t(t), 0);
  for (Eigen::Index i = rep.m; i < t; ++i) group[std::size_t(i)] = 1;
  rep.mmd = detail::mmd_from_gram(K, group, rep.m, rep.n);

  Rng rng = Rng::split(seed, 0x7065726dULL);
  std::vector<int> perm = group;
  int mmd_ge = 0;
  for (int p = 0; p < permutations; ++p) {
    for (Eigen::Index i = t - 1; i > 0; --i) {
      const Eigen::Index j =
          Eigen::Index(rng.next_u64() % std::uint64_t(i + 1));
      std::swap(perm[std::size_t(i)], perm[std::size_t(j)]);
    }
    if (detail::mmd_from_gram(K, perm, rep.m, rep.n) >= rep.mmd - 1e-15)
      ++mmd_ge;
  }
  rep.mmd_p = double(1 + mmd_ge) / double(permutations + 1);

  // per-projection KS with its own permutation null
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    std::vector<double> a(static_cast<std::size_t>(rep.m)), b(static_cast<std::size_t>(rep.n));
    for (Eigen::Index i = 0; i < rep.m; ++i) a[std::size_t(i)] = A(i, c);
    for (Eigen::Index i = 0; i < rep.n; ++i) b[std::size_t(i)] = B(i, c);
    const double obs = ks_two_sample(a, b);
    std::vector<double> all(static_cast<std::size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) all[std::size_t(i)] = pooled(i, c);
    int ge = 0;
    std::vector<double> pa(static_cast<std::size_t>(rep.m)), pb(static_cast<std::size_t>(rep.n));
    for (int p = 0; p < permutations; ++p) {
      for (Eigen::Index i = t - 1; i > 0; --i) {
        const Eigen::Index j =
            Eigen::Index(rng.next_u64() % std::uint64_t(i + 1));
        std::swap(all[std::size_t(i)], all[std::size_t(j)]);
      }
      std::copy(all.begin(), all.begin() + std::ptrdiff_t(rep.m), pa.begin());
      std::copy(all.begin() + std::ptrdiff_t(rep.m), all.end(), pb.begin());
      if (ks_two_sample(pa, pb) >= obs - 1e-15) ++ge;
    }
    rep.ks.push_back(obs);
    rep.ks_p.push_back(double(1 + ge) / double(permutations + 1));
    rep.max_ks = std::max(rep.max_ks, obs);
    rep.min_ks_p = std::min(rep.min_ks_p, rep.ks_p.back());
  }
  return rep;
}

inline std::vector<std::function<double(const Eigen::VectorXd&)>>
default_projections(int dim, int count) {
  std::vector<std::function<double(const Eigen::VectorXd&)>> out;
  if (dim == 1) {
    for (int k = 1; k <= count; ++k)
      out.push_back([k](const Eigen::VectorXd& z) {
        return std::sin(k * M_PI * z[0]);
      });
  } else {
    int k = 1, l = 1;
    for (int c = 0; c < count; ++c) {
      out.push_back([k, l](const Eigen::VectorXd& z) {
        return std::sin(k * M_PI * z[0]) * std::sin(l * M_PI * z[1]);
      });
      if (l < k) ++l;
      else { ++k; l = 1; }
    }
  }
  return out;
}

// Push the SAME lattice samples through two height maps and compare the
// projected clouds.  With paired inputs the pooled permutation null is wider
// than the sampling distribution, so the p-values are conservative.
inline TwoSampleReport heightmap_equivalence_test(
    const Eigen::MatrixXd& lattice, const HeightMap& hmA, const HeightMap& hmB,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& fns,
    int permutations, std::uint64_t seed) {
  if (fns.empty())
    throw std::invalid_argument("equivalence test: empty projection list");
  InterfaceEnsemble a =
      pushforward_coefficients(lattice, Eigen::VectorXd(), hmA, fns);
  InterfaceEnsemble b =
      pushforward_coefficients(lattice, Eigen::VectorXd(), hmB, fns);
  return two_sample_test(a.values, b.values, permutations, seed);
}

// Dynamic variant: joint two-time marginals, projections concatenated.
inline TwoSampleReport heightmap_equivalence_test_dynamic(
    const PathEnsemble& paths, const HeightMap& hmA, const HeightMap& hmB,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& fns,
    int permutations, std::uint64_t seed) {
  if (paths.states.empty())
    throw std::invalid_argument("equivalence test: no time marginals");
  Eigen::MatrixXd A, B;
  for (const auto& states : paths.states) {
    InterfaceEnsemble a =
        pushforward_coefficients(states, Eigen::VectorXd(), hmA, fns);
    InterfaceEnsemble b =
        pushforward_coefficients(states, Eigen::VectorXd(), hmB, fns);
    if (A.size() == 0) {
      A = a.values;
      B = b.values;
    } else {
      Eigen::MatrixXd A2(A.rows(), A.cols() + a.values.cols());
      A2 << A, a.values;
      A = A2;
      Eigen::MatrixXd B2(B.rows(), B.cols() + b.values.cols());
      B2 << B, b.values;
      B = B2;
    }
  }
  return two_sample_test(A, B, permutations, seed);
}

// ---------------------------------------------------------------------------
// Increment moments of the rescaled interface in the dual norm.

struct SlopeReport {
  std::vector<double> lags;
  std::vector<double> moments;       // E |u_t - u_0|^4 per lag
  std::vector<double> moment_stderr;
  SlopeFit fit;
  bool degenerate = false;
};

// pe.times[0] is the base time; the remaining entries are the lags.
inline SlopeReport increment_moment_slope(const PathEnsemble& pe,
                                          const HeightMap& hm,
                                          const DualNormSpec& dual) {
  SlopeReport rep;
  if (pe.times.size() < 5) {
    rep.degenerate = true;
    return rep;
  }
  const Eigen::MatrixXd P = dual.projection_matrix(hm);
  const Eigen::Index R = pe.states[0].rows();
  std::vector<double> logl, logm;
  for (std::size_t j = 1; j < pe.times.size(); ++j) {
    const double lag = pe.times[j] - pe.times[0];
    std::vector<double> fourth(static_cast<std::size_t>(R));
    for (Eigen::Index r = 0; r < R; ++r) {
      const Eigen::VectorXd diff =
          P * (pe.states[j].row(r) - pe.states[0].row(r)).transpose();
      const double d2 = dual.dual_norm_sq(diff);
      fourth[std::size_t(r)] = d2 * d2;
    }
    const double m4 = mean(fourth);
    rep.lags.push_back(lag);
    rep.moments.push_back(m4);
    rep.moment_stderr.push_back(stderr_of_mean(fourth));
    if (m4 > 0.0 && lag > 0.0) {
      logl.push_back(std::log(lag));
      logm.push_back(std::log(m4));
    }
  }
  if (logl.size() != rep.lags.size() || logl.size() < 4) {
    rep.degenerate = true;
    return rep;
  }
  rep.fit = ols_slope(logl, logm);
  rep.degenerate = rep.fit.degenerate;
  return rep;
}

// ---------------------------------------------------------------------------
// Rescaled Dirichlet-form estimates on cylinder functionals.

struct CylinderFunctional {
  std::vector<std::function<double(const Eigen::VectorXd&)>> directions;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

inline CylinderFunctional linear_functional(
    std::function<double(const Eigen::VectorXd&)> f) {
  CylinderFunctional F;
  F.directions = {std::move(f)};
  F.value = [](const Eigen::VectorXd& p) { return p[0]; };
  F.gradient = [](const Eigen::VectorXd&) {
    Eigen::VectorXd g(1);
    g << 1.0;
    return g;
  };
  return F;
}

inline CylinderFunctional sine_functional(
    std::function<double(const Eigen::VectorXd&)> f) {
  CylinderFunctional F;
  F.directions = {std::move(f)};
  F.value = [](const Eigen::VectorXd& p) { return std::sin(p[0]); };
  F.gradient = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd g(1);
    g << std::cos(p[0]);
    return g;
  };
  return F;
}

// Monte Carlo estimate of N^2 * (1/2) sum_i E[d_i(F o H) d_i(G o H)] using
// d_i(F o H)(x) = N^{d/2-1} <xi_i, grad F(H x)>; reduces to
// (1/2) N^d a^T (C_F^T C_G) b with per-sample chain-rule coefficients.
inline double form_estimate(const Eigen::MatrixXd& samples,
                            const Eigen::VectorXd& weights, const HeightMap& hm,
                            const CylinderFunctional& F,
                            const CylinderFunctional& G) {
  const Eigen::Index mF = Eigen::Index(F.directions.size());
  const Eigen::Index mG = Eigen::Index(G.directions.size());
  Eigen::MatrixXd CF(hm.size(), mF), CG(hm.size(), mG);
  for (Eigen::Index l = 0; l < mF; ++l)
    CF.col(l) = coefficients_of(hm, F.directions[std::size_t(l)]);
  for (Eigen::Index l = 0; l < mG; ++l)
    CG.col(l) = coefficients_of(hm, G.directions[std::size_t(l)]);
  const double Nd = std::pow(double(hm.N), double(hm.dim));
  const Eigen::MatrixXd D = Nd * (CF.transpose() * CG);
  const Eigen::MatrixXd projF = samples * (hm.amplitude * CF);
  const Eigen::MatrixXd projG = samples * (hm.amplitude * CG);
  const Eigen::Index M = samples.rows();
  const bool weighted = weights.size() > 0;
  std::vector<double> vals(static_cast<std::size_t>(M));
  for (Eigen::Index r = 0; r < M; ++r) {
    const Eigen::VectorXd a = F.gradient(projF.row(r).transpose());
    const Eigen::VectorXd b = G.gradient(projG.row(r).transpose());
    const double w = weighted ? weights[r] * double(M) : 1.0;
    vals[std::size_t(r)] = w * a.dot(D * b);
  }
  return 0.5 * pairwise_sum(vals) / double(M);
}

// Limit counterpart: (1/2) E[ a^T Q b ] with Q the H-Gram of the directions,
// evaluated on a proxy ensemble (typically the largest-N pushforward).
inline double form_limit_estimate(const Eigen::MatrixXd& samples,
                                  const Eigen::VectorXd& weights,
                                  const HeightMap& hm,
                                  const CylinderFunctional& F,
                                  const CylinderFunctional& G,
                                  int mesh_per_axis = 2048) {
  const Eigen::Index mF = Eigen::Index(F.directions.size());
  const Eigen::Index mG = Eigen::Index(G.directions.size());
  Mesh mesh = make_mesh(hm.domain, hm.dim == 1 ? mesh_per_axis
                                               : std::min(mesh_per_axis, 256));
  Eigen::MatrixXd Q(mF, mG);
  for (Eigen::Index i = 0; i < mF; ++i)
    for (Eigen::Index j = 0; j < mG; ++j) {
      double s = 0.0;
      for (const auto& z : mesh.points)
        s += F.directions[std::size_t(i)](z) * G.directions[std::size_t(j)](z);
      Q(i, j) = s * mesh.cell_volume;
    }
  Eigen::MatrixXd CF(hm.size(), mF), CG(hm.size(), mG);
  for (Eigen::Index l = 0; l < mF; ++l)
    CF.col(l) = coefficients_of(hm, F.directions[std::size_t(l)]);
  for (Eigen::Index l = 0; l < mG; ++l)
    CG.col(l) = coefficients_of(hm, G.directions[std::size_t(l)]);
  const Eigen::MatrixXd projF = samples * (hm.amplitude * CF);
  const Eigen::MatrixXd projG = samples * (hm.amplitude * CG);
  const Eigen::Index M = samples.rows();
  const bool weighted = weights.size() > 0;
  std::vector<double> vals(static_cast<std::size_t>(M));
  for (Eigen::Index r = 0; r < M; ++r) {
    const Eigen::VectorXd a = F.gradient(projF.row(r).transpose());
    const Eigen::VectorXd b = G.gradient(projG.row(r).transpose());
    const double w = weighted ? weights[r] * double(M) : 1.0;
    vals[std::size_t(r)] = w * a.dot(Q * b);
  }
  return 0.5 * pairwise_sum(vals) / double(M);
}

// ---------------------------------------------------------------------------
// Eigenvalue convergence tables.

struct EigenTable {
  std::vector<int> Ns;
  Eigen::MatrixXd lambdas;     // row per N, column per mode
  Eigen::MatrixXd rel_errors;  // against the limit rule
  std::vector<double> limits;
};

inline EigenTable eigen_convergence_table(
    const std::function<SpectralPairs(int)>& solve_at, const std::vector<int>& Ns,
    int count, LimitKind kind) {
  EigenTable t;
  t.Ns = Ns;
  t.lambdas.resize(Eigen::Index(Ns.size()), count);
  t.rel_errors.resize(Eigen::Index(Ns.size()), count);
  for (int i = 0; i < count; ++i)
    t.limits.push_back(limit_eigenvalue(kind, i + 1));
  for (std::size_t r = 0; r < Ns.size(); ++r) {
    SpectralPairs sp = solve_at(Ns[r]);
    for (int i = 0; i < count; ++i) {
      t.lambdas(Eigen::Index(r), i) = sp.eigenvalues[i];
      t.rel_errors(Eigen::Index(r), i) =
          std::fabs(sp.eigenvalues[i] - t.limits[std::size_t(i)]) /
          t.limits[std::size_t(i)];
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Near-level occupation of sampled interfaces.

struct LevelSetReport {
  std::vector<double> eps;
  std::vector<double> mean_measure;
  std::vector<double> stderr_;
  SlopeFit fit;  // log mean measure vs log eps
};

inline LevelSetReport level_set_decay(const Eigen::MatrixXd& values,
                                      double cell_volume, double level,
                                      const std::vector<double>& eps_list) {
  LevelSetReport rep;
  rep.eps = eps_list;
  std::vector<double> logl, logm;
  for (double eps : eps_list) {
    std::vector<double> measures(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      long hits = 0;
      for (Eigen::Index c = 0; c < values.cols(); ++c)
        if (std::fabs(values(r, c) - level) < eps) ++hits;
      measures[std::size_t(r)] = double(hits) * cell_volume;
    }
    const double m = mean(measures);
    rep.mean_measure.push_back(m);
    rep.stderr_.push_back(measures.size() > 1 ? stderr_of_mean(measures) : 0.0);
    if (m > 0.0) {
      logl.push_back(std::log(eps));
      logm.push_back(std::log(m));
    }
  }
  if (logl.size() == eps_list.size() && logl.size() >= 2)
    rep.fit = ols_slope(logl, logm);
  else
    rep.fit.degenerate = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Disintegration density along a fixed direction.

// rho_line(r) evaluates the unnormalized density at h_perp + r phi; the
// result is rho_line(r) / integral of rho_line against N(0, 1/lambda).
// Breakpoints split the quadrature at known discontinuities.
inline double component_density_normalizer(
    const std::function<double(double)>& rho_line, double lambda,
    const std::vector<double>& breakpoints = {}, int points = 200001,
    double range_sds = 10.0) {
  if (lambda <= 0.0)
    throw std::invalid_argument("component density: lambda must be positive");
  const double sd = 1.0 / std::sqrt(lambda);
  const double lo = -range_sds * sd, hi = range_sds * sd;
  std::vector<double> cuts = {lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const double norm = std::sqrt(lambda / (2.0 * M_PI));
  double total = 0.0;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg], b = cuts[seg + 1];
    const int n = std::max(16, int(points * (b - a) / (hi - lo)));
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = a + (i + 0.5) * h;
      s += rho_line(t) * std::exp(-0.5 * lambda * t * t);
    }
    total += s * h;
  }
  const double Z = total * norm;
  if (!(Z > 0.0) || !std::isfinite(Z))
    throw std::runtime_error("component density: quadrature did not converge");
  return Z;
}

inline double component_density(const std::function<double(double)>& rho_line,
                                double lambda, double r,
                                const std::vector<double>& breakpoints = {},
                                int points = 200001, double range_sds = 10.0) {
  return rho_line(r) /
         component_density_normalizer(rho_line, lambda, breakpoints, points,
                                      range_sds);
}

}  // namespace iflab
