#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace iflab {

enum class ArchetypeKind { IndicatorCube, IndicatorLeft, Tent, CustomMesh };

inline const char* to_string(ArchetypeKind k) {
  switch (k) {
    case ArchetypeKind::IndicatorCube: return "indicator-cube";
    case ArchetypeKind::IndicatorLeft: return "indicator-left";
    case ArchetypeKind::Tent: return "tent";
    case ArchetypeKind::CustomMesh: return "custom-mesh";
  }
  return "?";
}

// Interpolation kernel on R^d with support inside [-1,1]^d.
//
// The built-in kinds are:
//   indicator-cube : 1 on [-1/2,1/2)^d
//   indicator-left : 1 on [-1,0)^d (the piecewise-constant cell kernel)
//   tent           : hat function; d=1 is max(0, 1-|z|), d=2 is the positive
//                    part of the minimum of six affine planes
//   custom-mesh    : piecewise-constant table on a dyadic mesh of [-1,1]^d
//
// `amplitude` rescales the kernel; it exists so that inadmissible variants
// (e.g. half an indicator) can be pushed through the admissibility checker.
struct Archetype {
  int dim = 1;
  ArchetypeKind kind = ArchetypeKind::IndicatorCube;
  double amplitude = 1.0;
  Eigen::VectorXd support_lo, support_hi;

  // custom-mesh payload: values on cells of side 1/cells_per_unit
  int cells_per_unit = 0;
  std::vector<double> table;

  double value(const double* z) const {
    switch (kind) {
      case ArchetypeKind::IndicatorCube:
        for (int a = 0; a < dim; ++a)
          if (z[a] < -0.5 || z[a] >= 0.5) return 0.0;
        return amplitude;
      case ArchetypeKind::IndicatorLeft:
        for (int a = 0; a < dim; ++a)
          if (z[a] < -1.0 || z[a] >= 0.0) return 0.0;
        return amplitude;
      case ArchetypeKind::Tent: {
        if (dim == 1) {
          const double v = 1.0 - std::fabs(z[0]);
          return v > 0.0 ? amplitude * v : 0.0;
        }
        double m = 1e300;
        for (int i = 0; i < dim; ++i) {
          m = std::min(m, 1.0 + z[i]);
          m = std::min(m, 1.0 - z[i]);
          for (int j = 0; j < dim; ++j)
            if (i != j) m = std::min(m, 1.0 + z[i] - z[j]);
        }
        return m > 0.0 ? amplitude * m : 0.0;
      }
      case ArchetypeKind::CustomMesh: {
        std::size_t idx = 0;
        for (int a = 0; a < dim; ++a) {
          const double t = (z[a] + 1.0) * cells_per_unit;
          if (t < 0.0) return 0.0;
          const long c = long(std::floor(t));
          if (c >= 2L * cells_per_unit) return 0.0;
          idx = idx * std::size_t(2 * cells_per_unit) + std::size_t(c);
        }
        return amplitude * table[idx];
      }
    }
    return 0.0;
  }

  double operator()(const Eigen::VectorXd& z) const {
    if (z.size() != dim)
      throw std::invalid_argument("archetype: point dimension mismatch");
    return value(z.data());
  }

  double operator()(double z) const {
    if (dim != 1) throw std::invalid_argument("archetype: expected d=1");
    return value(&z);
  }
};

inline Archetype make_archetype(ArchetypeKind kind, int d) {
  if (d < 1) throw std::invalid_argument("archetype: dimension must be >= 1");
  Archetype a;
  a.dim = d;
  a.kind = kind;
  a.support_lo.resize(d);
  a.support_hi.resize(d);
  switch (kind) {
    case ArchetypeKind::IndicatorCube:
      a.support_lo.setConstant(-0.5);
      a.support_hi.setConstant(0.5);
      break;
    case ArchetypeKind::IndicatorLeft:
      a.support_lo.setConstant(-1.0);
      a.support_hi.setConstant(0.0);
      break;
    case ArchetypeKind::Tent:
      if (d > 2)
        throw std::invalid_argument("archetype: tent supported for d in {1,2}");
      a.support_lo.setConstant(-1.0);
      a.support_hi.setConstant(1.0);
      break;
    case ArchetypeKind::CustomMesh:
      throw std::invalid_argument(
          "archetype: custom-mesh kernels are built from a table file");
  }
  return a;
}

inline Archetype indicator_cube(int d) {
  return make_archetype(ArchetypeKind::IndicatorCube, d);
}
inline Archetype indicator_left(int d) {
  return make_archetype(ArchetypeKind::IndicatorLeft, d);
}
inline Archetype tent(int d) { return make_archetype(ArchetypeKind::Tent, d); }

inline Archetype scaled(Archetype a, double factor) {
  a.amplitude *= factor;
  return a;
}

// Plain-text table format:
//   # comment lines
//   d <dim>
//   step <1/cells_per_unit>
//   <cell indices, one per axis, in [0, 2/step)> <value>
// Unlisted cells are zero; values must lie in [0,1].
inline Archetype load_archetype_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open archetype table: " + path);
  Archetype a;
  a.kind = ArchetypeKind::CustomMesh;
  a.dim = 0;
  double step = 0.0;
  std::string line;
  std::vector<std::pair<std::vector<long>, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "d") {
      ls >> a.dim;
    } else if (key == "step") {
      ls >> step;
    } else {
      if (a.dim <= 0 || step <= 0.0)
        throw std::runtime_error("archetype table: header must precede rows");
      std::vector<long> idx(static_cast<std::size_t>(a.dim));
      idx[0] = std::stol(key);
      for (int i = 1; i < a.dim; ++i) ls >> idx[std::size_t(i)];
      double v;
      ls >> v;
      if (!ls) throw std::runtime_error("archetype table: malformed row");
      if (v < 0.0 || v > 1.0)
        throw std::runtime_error("archetype table: value outside [0,1]");
      rows.emplace_back(idx, v);
    }
  }
  const double m = 1.0 / step;
  if (a.dim < 1 || std::fabs(m - std::nearbyint(m)) > 1e-9)
    throw std::runtime_error("archetype table: step must divide 1");
  a.cells_per_unit = int(std::nearbyint(m));
  const long side = 2L * a.cells_per_unit;
  std::size_t total = 1;
  for (int i = 0; i < a.dim; ++i) total *= std::size_t(side);
  a.table.assign(total, 0.0);
  for (const auto& [idx, v] : rows) {
    std::size_t flat = 0;
    for (int i = 0; i < a.dim; ++i) {
      if (idx[std::size_t(i)] < 0 || idx[std::size_t(i)] >= side)
        throw std::runtime_error("archetype table: cell index out of range");
      flat = flat * std::size_t(side) + std::size_t(idx[std::size_t(i)]);
    }
    a.table[flat] = v;
  }
  a.support_lo = Eigen::VectorXd::Constant(a.dim, -1.0);
  a.support_hi = Eigen::VectorXd::Constant(a.dim, 1.0);
  return a;
}

// ---------------------------------------------------------------------------
// Quadrature.
//
// All built-in kernels are piecewise polynomial on a lattice-shift invariant
// partition (unit intervals in d=1, the standard two-triangle split of unit
// cells in d=2, dyadic cells for tables).  Products of two lattice shifts are
// therefore quadratic per piece, and the fixed low-order rules below
// integrate them exactly.

namespace quad {

// Gauss-Legendre 2-point rule on [a,b]; exact for cubics.
template <class F>
double gauss2_interval(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double x = h / std::sqrt(3.0);
  return h * (f(c - x) + f(c + x));
}

// Mid-edge 3-point rule on a triangle; exact for quadratics.
template <class F>
double midedge_triangle(F&& f, const std::array<double, 2>& A,
                        const std::array<double, 2>& B,
                        const std::array<double, 2>& C) {
  const double area =
      0.5 * std::fabs((B[0] - A[0]) * (C[1] - A[1]) -
                      (C[0] - A[0]) * (B[1] - A[1]));
  double s = 0.0;
  const std::array<std::array<double, 2>, 3> mids = {{
      {0.5 * (A[0] + B[0]), 0.5 * (A[1] + B[1])},
      {0.5 * (B[0] + C[0]), 0.5 * (B[1] + C[1])},
      {0.5 * (A[0] + C[0]), 0.5 * (A[1] + C[1])},
  }};
  for (const auto& m : mids) s += f(m[0], m[1]);
  return s * area / 3.0;
}

// Composite midpoint over a box, n points per axis.  Used for cross-checks
// and custom kernels, not for the exact paths.
template <class F>
double midpoint_box(F&& f, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, int n) {
  const int d = int(lo.size());
  Eigen::VectorXd h(d);
  for (int a = 0; a < d; ++a) h[a] = (hi[a] - lo[a]) / n;
  double cellvol = 1.0;
  for (int a = 0; a < d; ++a) cellvol *= h[a];
  std::vector<int> ix(std::size_t(d), 0);
  Eigen::VectorXd z(d);
  double s = 0.0;
  while (true) {
    for (int a = 0; a < d; ++a) z[a] = lo[a] + (ix[std::size_t(a)] + 0.5) * h[a];
    s += f(z);
    int a = d - 1;
    while (a >= 0 && ++ix[std::size_t(a)] == n) { ix[std::size_t(a)] = 0; --a; }
    if (a < 0) break;
  }
  return s * cellvol;
}

}  // namespace quad

namespace detail {

// Integrates f over the intersection of the supports of Xi(.) and Xi(.-delta)
// using the piece structure of the kernel kind.  f receives a point z.
template <class F>
double piecewise_product_integral(const Archetype& xi,
                                  const Eigen::VectorXi& delta, F&& f) {
  const int d = xi.dim;
  Eigen::VectorXd lo(d), hi(d);
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max(xi.support_lo[a], xi.support_lo[a] + delta[a]);
    hi[a] = std::min(xi.support_hi[a], xi.support_hi[a] + delta[a]);
    if (!(lo[a] < hi[a])) return 0.0;
  }

  switch (xi.kind) {
    case ArchetypeKind::IndicatorCube:
    case ArchetypeKind::IndicatorLeft: {
      // piecewise constant on its support box: midpoint of the overlap box
      double vol = 1.0;
      Eigen::VectorXd mid(d);
      for (int a = 0; a < d; ++a) {
        vol *= hi[a] - lo[a];
        mid[a] = 0.5 * (lo[a] + hi[a]);
      }
      return vol * f(mid);
    }
    case ArchetypeKind::Tent: {
      if (d == 1) {
        double s = 0.0;
        for (int k = int(std::nearbyint(lo[0])); k < int(std::nearbyint(hi[0]));
             ++k) {
          Eigen::VectorXd z(1);
          s += quad::gauss2_interval(
              [&](double x) {
                z[0] = x;
                return f(z);
              },
              double(k), double(k + 1));
        }
        return s;
      }
      // d == 2: two-triangle split of each unit cell
      double s = 0.0;
      Eigen::VectorXd z(2);
      auto g = [&](double x, double y) {
        z[0] = x;
        z[1] = y;
        return f(z);
      };
      for (int k1 = int(std::nearbyint(lo[0])); k1 < int(std::nearbyint(hi[0]));
           ++k1)
        for (int k2 = int(std::nearbyint(lo[1]));
             k2 < int(std::nearbyint(hi[1])); ++k2) {
          const std::array<double, 2> A = {double(k1), double(k2)};
          const std::array<double, 2> B = {double(k1 + 1), double(k2)};
          const std::array<double, 2> C = {double(k1 + 1), double(k2 + 1)};
          const std::array<double, 2> D = {double(k1), double(k2 + 1)};
          s += quad::midedge_triangle(g, A, B, C);
          s += quad::midedge_triangle(g, A, D, C);
        }
      return s;
    }
    case ArchetypeKind::CustomMesh: {
      // cells align under integer shifts, so cell sums are exact
      const int m = xi.cells_per_unit;
      const long side = 2L * m;
      const double cell = 1.0 / m;
      double cellvol = 1.0;
      for (int a = 0; a < d; ++a) cellvol *= cell;
      std::vector<long> c(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        c[std::size_t(a)] = long(std::nearbyint((lo[a] + 1.0) * m));
      std::vector<long> cmax(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        cmax[std::size_t(a)] = long(std::nearbyint((hi[a] + 1.0) * m));
      std::vector<long> ix = c;
      Eigen::VectorXd z(d);
      double s = 0.0;
      bool done = false;
      for (int a = 0; a < d; ++a)
        if (c[std::size_t(a)] >= cmax[std::size_t(a)]) done = true;
      while (!done) {
        bool in = true;
        for (int a = 0; a < d; ++a) {
          if (ix[std::size_t(a)] < 0 || ix[std::size_t(a)] >= side) in = false;
          z[a] = -1.0 + (ix[std::size_t(a)] + 0.5) * cell;
        }
        if (in) s += f(z);
        int a = d - 1;
        while (a >= 0) {
          if (++ix[std::size_t(a)] < cmax[std::size_t(a)]) break;
          ix[std::size_t(a)] = c[std::size_t(a)];
          --a;
        }
        if (a < 0) done = true;
      }
      return s * cellvol;
    }
  }
  return 0.0;
}

}  // namespace detail

// Integral of the kernel over R^d (exact for the stored representation).
inline double integral(const Archetype& xi) {
  Eigen::VectorXi zero = Eigen::VectorXi::Zero(xi.dim);
  return detail::piecewise_product_integral(
      xi, zero, [&](const Eigen::VectorXd& z) { return xi.value(z.data()); });
}

// Gram entry: integral of Xi(z) Xi(z - delta) over R^d.
inline double kernel_overlap(const Archetype& xi, const Eigen::VectorXi& delta) {
  if (delta.size() != xi.dim)
    throw std::invalid_argument("kernel_overlap: offset dimension mismatch");
  Eigen::VectorXd zs(xi.dim);
  return detail::piecewise_product_integral(
      xi, delta, [&](const Eigen::VectorXd& z) {
        for (int a = 0; a < xi.dim; ++a) zs[a] = z[a] - delta[a];
        return xi.value(z.data()) * xi.value(zs.data());
      });
}

struct QuadratureValue {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Integral of the squared kernel.  resolution == 0 selects the exact
// piece-aware path; a positive resolution uses composite midpoint with the
// coarse/fine difference as the error estimate.
inline QuadratureValue l2_square(const Archetype& xi, int resolution = 0) {
  QuadratureValue out;
  if (resolution <= 0) {
    Eigen::VectorXi zero = Eigen::VectorXi::Zero(xi.dim);
    out.value = kernel_overlap(xi, zero);
    out.error_estimate = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::fabs(out.value));
    return out;
  }
  auto f = [&](const Eigen::VectorXd& z) {
    const double v = xi.value(z.data());
    return v * v;
  };
  const double fine = quad::midpoint_box(f, xi.support_lo, xi.support_hi,
                                         resolution);
  const double coarse = quad::midpoint_box(f, xi.support_lo, xi.support_hi,
                                           std::max(1, resolution / 2));
  out.value = fine;
  out.error_estimate = std::fabs(fine - coarse);
  return out;
}

// c = 2 * |Xi|_{L2}^2 - 1, the coercivity floor of the shift Gram form.
inline double coercivity_constant(const Archetype& xi) {
  const double c = 2.0 * l2_square(xi).value - 1.0;
  if (c <= 0.0)
    throw std::runtime_error("coercivity violated: 2*int Xi^2 - 1 <= 0");
  return c;
}

// Gram matrix of the lattice shifts listed in `window`.
inline Eigen::MatrixXd gram_matrix(const Archetype& xi,
                                   const std::vector<Eigen::VectorXi>& window) {
  const std::size_t n = window.size();
  Eigen::MatrixXd A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Eigen::VectorXi delta = window[j] - window[i];
      bool near = true;
      for (int a = 0; a < xi.dim; ++a)
        if (std::abs(delta[a]) > 1) near = false;
      const double v = near ? kernel_overlap(xi, delta) : 0.0;
      A(Eigen::Index(i), Eigen::Index(j)) = v;
      A(Eigen::Index(j), Eigen::Index(i)) = v;
    }
  return A;
}

// Per-criterion admissibility report: support containment, unit mass,
// partition of unity under lattice shifts, and L2 mass above one half.
struct ConditionReport {
  double support_violation = 0.0;
  double integral_value = 0.0;
  double pou_max_deviation = 0.0;
  double l2_value = 0.0;
  double tol = 0.0;
  bool support_ok = false, integral_ok = false, pou_ok = false, l2_ok = false;
  bool pass = false;
};

inline ConditionReport check_condition(const Archetype& xi,
                                       int mesh_per_cell = 1000,
                                       double tol = 1e-9) {
  ConditionReport rep;
  rep.tol = tol;
  const int d = xi.dim;
  const int m = std::max(2, int(std::llround(std::pow(double(mesh_per_cell),
                                                      1.0 / d))));

  // (i) support containment, sampled on a mesh of [-2,2]^d minus [-1,1]^d
  {
    std::vector<int> ix(std::size_t(d), 0);
    const int n = 4 * m;
    Eigen::VectorXd z(d);
    double worst = 0.0;
    while (true) {
      bool inside = true;
      for (int a = 0; a < d; ++a) {
        z[a] = -2.0 + (ix[std::size_t(a)] + 0.5) * (4.0 / n);
        if (z[a] < -1.0 || z[a] > 1.0) inside = false;
      }
      if (!inside) worst = std::max(worst, std::fabs(xi.value(z.data())));
      int a = d - 1;
      while (a >= 0 && ++ix[std::size_t(a)] == n) { ix[std::size_t(a)] = 0; --a; }
      if (a < 0) break;
    }
    rep.support_violation = worst;
    rep.support_ok = worst <= tol;
  }

  // (ii) unit integral
  rep.integral_value = integral(xi);
  rep.integral_ok = std::fabs(rep.integral_value - 1.0) <= tol;

  // (iii) partition of unity over one unit cell; shifts from [-2,2]^d cover
  // every kernel whose support can intersect the cell
  {
    std::vector<int> ix(std::size_t(d), 0);
    Eigen::VectorXd z(d), zs(d);
    double worst = 0.0;
    while (true) {
      for (int a = 0; a < d; ++a) z[a] = (ix[std::size_t(a)] + 0.5) / m;
      double s = 0.0;
      std::vector<int> kx(std::size_t(d), -2);
      while (true) {
        for (int a = 0; a < d; ++a) zs[a] = z[a] - kx[std::size_t(a)];
        s += xi.value(zs.data());
        int a = d - 1;
        while (a >= 0 && ++kx[std::size_t(a)] == 3) { kx[std::size_t(a)] = -2; --a; }
        if (a < 0) break;
      }
      worst = std::max(worst, std::fabs(s - 1.0));
      int a = d - 1;
      while (a >= 0 && ++ix[std::size_t(a)] == m) { ix[std::size_t(a)] = 0; --a; }
      if (a < 0) break;
    }
    rep.pou_max_deviation = worst;
    rep.pou_ok = worst <= tol;
  }

  // (iv) L2 mass strictly above 1/2
  rep.l2_value = l2_square(xi).value;
  rep.l2_ok = rep.l2_value > 0.5 + tol;

  rep.pass = rep.support_ok && rep.integral_ok && rep.pou_ok && rep.l2_ok;
  return rep;
}

}  // namespace iflab
