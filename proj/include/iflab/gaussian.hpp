#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "iflab/grid.hpp"
#include "iflab/heightmap.hpp"
#include "iflab/rng.hpp"
#include "iflab/stats.hpp"

namespace iflab {

// Sample collection; rows are draws.  Weights, when present, are
// self-normalized.
struct Ensemble {
  Eigen::MatrixXd samples;
  Eigen::VectorXd weights;  // empty for unweighted ensembles

  Eigen::Index count() const { return samples.rows(); }
  bool weighted() const { return weights.size() > 0; }

  double ess() const {
    if (!weighted()) return double(samples.rows());
    return 1.0 / weights.squaredNorm();
  }
};

// Symmetric positive-definite quadratic form; the lattice Gaussian has
// density proportional to exp(-x^T A x), hence covariance (2A)^{-1}.
struct QuadraticModel {
  std::string tag;
  Eigen::MatrixXd A;
  Eigen::LLT<Eigen::MatrixXd> chol2A;  // factor of 2A, used by the sampler

  Eigen::Index size() const { return A.rows(); }

  Eigen::MatrixXd covariance() const {
    return chol2A.solve(
        Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  }
};

inline QuadraticModel make_quadratic_model(std::string tag, Eigen::MatrixXd A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("quadratic model: matrix must be square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("quadratic model: matrix must be symmetric");
  QuadraticModel m;
  m.tag = std::move(tag);
  m.A = 0.5 * (A + A.transpose());
  m.chol2A.compute(2.0 * m.A);
  if (m.chol2A.info() != Eigen::Success)
    throw std::runtime_error("quadratic model '" + m.tag +
                             "': not positive definite");
  return m;
}

// x^T A x = (1/2) sum of squared increments with x_0 = 0: the Gaussian makes
// the n increments i.i.d. standard normal, so Cov(x_i, x_j) = min(i,j)+1
// (0-based).
inline QuadraticModel random_walk_model(int n) {
  if (n < 1) throw std::invalid_argument("random_walk_model: n >= 1");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    B(i, i) = 1.0;
    if (i > 0) B(i, i - 1) = -1.0;
  }
  return make_quadratic_model("random-walk", 0.5 * B.transpose() * B);
}

// x^T A x = (1/2) sum_{i=0}^{n} (x_{i+1} - x_i)^2 with x_0 = x_{n+1} = 0;
// covariance is the discrete bridge min(i,j) - ij/(n+1).
inline QuadraticModel bridge_model(int n) {
  if (n < 1) throw std::invalid_argument("bridge_model: n >= 1");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 1.0;
    if (i > 0) {
      A(i, i - 1) = -0.5;
      A(i - 1, i) = -0.5;
    }
  }
  return make_quadratic_model("bridge", A);
}

// Gradient plus squared-discrete-Laplacian energy on Z^2 with zero extension
// outside the grid:
//   H(x) = sum_k [ (1/16) sum_{|l-k|=1} (x_k - x_l)^2
//                  + alpha ((1/4) sum_{|l-k|=1} (x_k - x_l))^2 ]
// and x^T A x = 4 H(x).
inline QuadraticModel membrane_model(const Grid& grid, double alpha) {
  if (grid.dim != 2)
    throw std::invalid_argument("membrane_model: needs a 2d grid");
  const Eigen::Index k = grid.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
  const int o1[4] = {1, -1, 0, 0};
  const int o2[4] = {0, 0, 1, -1};
  Eigen::VectorXi p(2), q(2);
  for (int k1 = grid.pmin[0] - 1; k1 <= grid.pmax[0] + 1; ++k1)
    for (int k2 = grid.pmin[1] - 1; k2 <= grid.pmax[1] + 1; ++k2) {
      p << k1, k2;
      const std::ptrdiff_t c = grid.index_of(p);
      std::ptrdiff_t nb[4];
      for (int t = 0; t < 4; ++t) {
        q << k1 + o1[t], k2 + o2[t];
        nb[t] = grid.index_of(q);
      }
      // gradient: one (x_k - x_l)^2 per neighbour
      for (int t = 0; t < 4; ++t) {
        if (c >= 0) M(c, c) += 1.0 / 16.0;
        if (nb[t] >= 0) M(nb[t], nb[t]) += 1.0 / 16.0;
        if (c >= 0 && nb[t] >= 0) {
          M(c, nb[t]) -= 1.0 / 16.0;
          M(nb[t], c) -= 1.0 / 16.0;
        }
      }
      // squared discrete Laplacian: (1/4)(4 x_k - sum x_l), weight alpha
      std::ptrdiff_t idx[5];
      double coef[5];
      int nterms = 0;
      if (c >= 0) {
        idx[nterms] = c;
        coef[nterms++] = 4.0;
      }
      for (int t = 0; t < 4; ++t)
        if (nb[t] >= 0) {
          idx[nterms] = nb[t];
          coef[nterms++] = -1.0;
        }
      for (int a = 0; a < nterms; ++a)
        for (int b = 0; b < nterms; ++b)
          M(idx[a], idx[b]) += alpha / 16.0 * coef[a] * coef[b];
    }
  return make_quadratic_model("membrane", 4.0 * M);
}

inline QuadraticModel membrane_model(int N, double alpha) {
  if (N < 6) throw std::invalid_argument("membrane_model: needs N >= 6");
  return membrane_model(build_grid(Domain::unit_square(), N), alpha);
}

// Draws with covariance (2A)^{-1}: solve U x = z for the Cholesky factor U
// of 2A and z i.i.d. standard normal.
class GaussianSampler {
 public:
  GaussianSampler(const QuadraticModel& model, std::uint64_t seed)
      : model_(&model), rng_(Rng::split(seed, 0x67617573ULL)) {}

  Eigen::VectorXd draw() {
    Eigen::VectorXd z(model_->size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng_.normal();
    return model_->chol2A.matrixU().solve(z);
  }

  Eigen::MatrixXd draw_matrix(Eigen::Index count) {
    Eigen::MatrixXd out(count, model_->size());
    for (Eigen::Index r = 0; r < count; ++r) out.row(r) = draw().transpose();
    return out;
  }

 private:
  const QuadraticModel* model_;
  Rng rng_;
};

inline Ensemble sample_gaussian(const QuadraticModel& model, Eigen::Index count,
                                std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_gaussian: count >= 1");
  GaussianSampler s(model, seed);
  Ensemble e;
  e.samples = s.draw_matrix(count);
  return e;
}

enum class LimitKind {
  BrownianMotion,
  BrownianBridge,
  MembraneBiharmonic,
  MembraneMixed
};

inline LimitKind limit_kind_from_string(const std::string& s) {
  if (s == "brownian-motion") return LimitKind::BrownianMotion;
  if (s == "brownian-bridge") return LimitKind::BrownianBridge;
  if (s == "membrane-biharmonic") return LimitKind::MembraneBiharmonic;
  if (s == "membrane-mixed") return LimitKind::MembraneMixed;
  throw std::invalid_argument("unknown limit kind: " + s);
}

inline double limit_covariance(LimitKind kind, double s, double t) {
  switch (kind) {
    case LimitKind::BrownianMotion: return std::min(s, t);
    case LimitKind::BrownianBridge: return std::min(s, t) - s * t;
    default:
      throw std::invalid_argument(
          "limit_covariance: membrane kinds are spectral; use limit_eigenvalue");
  }
}

// Generator eigenvalues in the Dirichlet-sine surrogate basis, ascending;
// mode is 1-based.
inline double limit_eigenvalue(LimitKind kind, int mode) {
  if (mode < 1) throw std::invalid_argument("limit_eigenvalue: mode >= 1");
  switch (kind) {
    case LimitKind::BrownianMotion: {
      const double w = (mode - 0.5) * M_PI;
      return w * w;
    }
    case LimitKind::BrownianBridge: {
      const double w = mode * M_PI;
      return w * w;
    }
    case LimitKind::MembraneBiharmonic:
    case LimitKind::MembraneMixed: {
      std::vector<double> mus;
      const int K = mode + 4;
      for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j)
          mus.push_back((double(i) * i + double(j) * j) * M_PI * M_PI);
      std::sort(mus.begin(), mus.end());
      const double mu = mus[std::size_t(mode - 1)];
      return kind == LimitKind::MembraneBiharmonic ? mu * mu : mu + mu * mu;
    }
  }
  return 0.0;
}

// Gram matrix in H of the height-map basis N^{d/2-1} xi_{N,i}; requires the
// kernel supports to stay inside cl(D) so the restricted and full-space
// inner products agree.
inline Eigen::MatrixXd h_gram_matrix(const HeightMap& hm) {
  if (!hm.supports_inside)
    throw std::invalid_argument(
        "h_gram_matrix: kernel supports must lie inside the domain");
  const GramStencil st = gram_stencil(hm.xi);
  const Eigen::Index k = hm.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  const double scale = 1.0 / double(hm.N) / double(hm.N);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXi pi = hm.grid.point(i);
    for (Eigen::Index j = i; j < k; ++j) {
      const Eigen::VectorXi delta = hm.grid.point(j) - pi;
      bool near = true;
      for (int a = 0; a < hm.dim; ++a)
        if (std::abs(delta[a]) > 1) near = false;
      if (!near) continue;
      const double v = scale * st.at(delta);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

struct SpectralPairs {
  Eigen::VectorXd eigenvalues;  // ascending, lambda^{(1)} first
  Eigen::MatrixXd vectors;      // column i: lattice state with |H a|_H = 1
};

// Generalized eigenvalues defined through H-geometry on the image of the
// height map: lambda * Cov(phi, h) = <phi, h>_H for h in the image space.
// With G the H-Gram of the basis and Sigma the lattice covariance this is
// the eigenproblem of (Sigma G)^{-1}, solved symmetrically as R Sigma R^T
// with G = R^T R.
inline SpectralPairs spectral_pairs(const QuadraticModel& model,
                                    const HeightMap& hm, int count) {
  const Eigen::Index k = model.size();
  if (hm.size() != k)
    throw std::invalid_argument("spectral_pairs: model/heightmap size mismatch");
  if (count < 1 || count > int(k))
    throw std::invalid_argument("spectral_pairs: count out of range");
  Eigen::MatrixXd G = h_gram_matrix(hm);
  Eigen::LLT<Eigen::MatrixXd> lltG(G);
  if (lltG.info() != Eigen::Success)
    throw std::runtime_error("spectral_pairs: Gram matrix not positive definite");
  const Eigen::MatrixXd Sigma = model.covariance();
  const Eigen::MatrixXd R = lltG.matrixU();
  const Eigen::MatrixXd B = R * Sigma * R.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_pairs: eigensolver failed");

  SpectralPairs out;
  out.eigenvalues.resize(count);
  out.vectors.resize(k, count);
  Eigen::VectorXd z(hm.dim);
  for (int a = 0; a < hm.dim; ++a)
    z[a] = hm.domain.lo[a] + 0.25 * (hm.domain.hi[a] - hm.domain.lo[a]);
  for (int i = 0; i < count; ++i) {
    const Eigen::Index col = k - 1 - i;  // largest covariance first
    out.eigenvalues[i] = 1.0 / es.eigenvalues()[col];
    Eigen::VectorXd a =
        R.triangularView<Eigen::Upper>().solve(es.eigenvectors().col(col));
    // sign convention: the interface evaluated a quarter of the way into the
    // domain is nonnegative
    if (apply(hm, a, z) < 0.0) a = -a;
    out.vectors.col(i) = a;
  }
  return out;
}

// Isometry of the coefficient space mapping `from` onto `to`, identity on the
// orthogonal complement of their span.
struct Rotation {
  bool identity = false;
  Eigen::VectorXd to, from, v, w;

  Eigen::VectorXd operator()(const Eigen::VectorXd& u) const {
    if (identity) return u;
    return u - u.dot(from) * from - u.dot(v) * v + u.dot(from) * to +
           u.dot(v) * w;
  }

  // operator-norm bound on the deviation from the identity for unit inputs
  double deviation_bound() const {
    if (identity) return 0.0;
    return (to - from).squaredNorm() + 2.0 * (1.0 - from.dot(to));
  }
};

inline Rotation build_rotation(const Eigen::VectorXd& to,
                               const Eigen::VectorXd& from) {
  if (to.size() != from.size())
    throw std::invalid_argument("build_rotation: size mismatch");
  if (std::fabs(to.norm() - 1.0) > 1e-10 || std::fabs(from.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("build_rotation: inputs must be normalized");
  Rotation J;
  J.to = to;
  J.from = from;
  const double c = to.dot(from);
  if (c < -1.0 + 1e-12)
    throw std::invalid_argument("build_rotation: antipodal inputs");
  if (1.0 - c * c < 1e-24) {
    J.identity = true;
    return J;
  }
  const double s = std::sqrt(1.0 - c * c);
  J.v = (to - c * from) / s;
  J.w = (c * to - from) / s;
  return J;
}

}  // namespace iflab
