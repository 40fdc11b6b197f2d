#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace iflab {

// How the exhausting sets D_N are produced from the base rectangle D.
//   FullClosure    : D_N = product of half-open intervals (lo, hi]
//   OpenInterior   : D_N = D itself
//   InteriorMargin : D_N = product of (lo + m/N, hi - m/N)
enum class GridRule { FullClosure, OpenInterior, InteriorMargin };

inline const char* to_string(GridRule r) {
  switch (r) {
    case GridRule::FullClosure: return "full-closure";
    case GridRule::OpenInterior: return "open-interior";
    case GridRule::InteriorMargin: return "interior-margin";
  }
  return "?";
}

inline GridRule grid_rule_from_string(const std::string& s) {
  if (s == "full-closure") return GridRule::FullClosure;
  if (s == "open-interior") return GridRule::OpenInterior;
  if (s == "interior-margin") return GridRule::InteriorMargin;
  throw std::invalid_argument("unknown grid rule: " + s);
}

// Axis-aligned open rectangle with a grid-rule family.  Membership and
// margin questions are answered exactly on this geometry.
struct Domain {
  int dim = 1;
  Eigen::VectorXd lo, hi;
  GridRule rule = GridRule::FullClosure;
  int margin = 0;  // used by InteriorMargin only

  static Domain unit_interval(GridRule rule = GridRule::FullClosure,
                              int margin = 0) {
    Domain d;
    d.dim = 1;
    d.lo = Eigen::VectorXd::Zero(1);
    d.hi = Eigen::VectorXd::Ones(1);
    d.rule = rule;
    d.margin = margin;
    return d;
  }

  static Domain unit_square(GridRule rule = GridRule::InteriorMargin,
                            int margin = 2) {
    Domain d;
    d.dim = 2;
    d.lo = Eigen::VectorXd::Zero(2);
    d.hi = Eigen::VectorXd::Ones(2);
    d.rule = rule;
    d.margin = margin;
    return d;
  }

  void validate() const {
    if (dim < 1) throw std::invalid_argument("domain: dim must be positive");
    if (lo.size() != dim || hi.size() != dim)
      throw std::invalid_argument("domain: bound size mismatch");
    for (int a = 0; a < dim; ++a)
      if (!(lo[a] < hi[a]))
        throw std::invalid_argument("domain: empty rectangle");
    if (rule == GridRule::InteriorMargin && margin < 0)
      throw std::invalid_argument("domain: negative margin");
  }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= hi[a] - lo[a];
    return v;
  }
};

namespace detail {

// Integer p with a < p (strict) or a <= p, robust against a being a
// floating representation of an integer.
inline long long first_lattice_above(double a, bool strict) {
  const double r = std::nearbyint(a);
  if (std::fabs(a - r) < 1e-9) {
    const long long i = (long long)r;
    return strict ? i + 1 : i;
  }
  return (long long)std::ceil(a);
}

inline long long last_lattice_below(double b, bool strict) {
  const double r = std::nearbyint(b);
  if (std::fabs(b - r) < 1e-9) {
    const long long i = (long long)r;
    return strict ? i - 1 : i;
  }
  return (long long)std::floor(b);
}

}  // namespace detail

// G_N = N*D_N intersected with the integer lattice.  For rectangle domains
// this is a box of integer ranges; the index bijection is the row-major
// (lexicographic) enumeration of that box, so runs are reproducible.
struct Grid {
  int N = 1;
  int dim = 1;
  Eigen::VectorXi pmin, pmax;  // inclusive per-axis ranges

  std::ptrdiff_t size() const {
    std::ptrdiff_t k = 1;
    for (int a = 0; a < dim; ++a) k *= std::ptrdiff_t(pmax[a] - pmin[a] + 1);
    return k;
  }

  Eigen::VectorXi point(std::ptrdiff_t i) const {
    Eigen::VectorXi p(dim);
    for (int a = dim - 1; a >= 0; --a) {
      const std::ptrdiff_t w = pmax[a] - pmin[a] + 1;
      p[a] = pmin[a] + int(i % w);
      i /= w;
    }
    return p;
  }

  // -1 when the lattice point is not a grid node.
  std::ptrdiff_t index_of(const Eigen::VectorXi& p) const {
    std::ptrdiff_t i = 0;
    for (int a = 0; a < dim; ++a) {
      if (p[a] < pmin[a] || p[a] > pmax[a]) return -1;
      i = i * std::ptrdiff_t(pmax[a] - pmin[a] + 1) + (p[a] - pmin[a]);
    }
    return i;
  }

  std::vector<Eigen::VectorXi> points() const {
    std::vector<Eigen::VectorXi> out;
    out.reserve(std::size_t(size()));
    for (std::ptrdiff_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
  }
};

inline Grid build_grid(const Domain& dom, int N) {
  dom.validate();
  if (N < 1) throw std::invalid_argument("build_grid: N must be >= 1");
  Grid g;
  g.N = N;
  g.dim = dom.dim;
  g.pmin.resize(dom.dim);
  g.pmax.resize(dom.dim);
  for (int a = 0; a < dom.dim; ++a) {
    double lo = dom.lo[a], hi = dom.hi[a];
    bool lo_strict = true, hi_strict = true;
    switch (dom.rule) {
      case GridRule::FullClosure:
        hi_strict = false;  // (lo, hi]
        break;
      case GridRule::OpenInterior:
        break;  // (lo, hi)
      case GridRule::InteriorMargin:
        lo = lo + double(dom.margin) / N;
        hi = hi - double(dom.margin) / N;
        break;
    }
    const long long p0 = detail::first_lattice_above(N * lo, lo_strict);
    const long long p1 = detail::last_lattice_below(N * hi, hi_strict);
    if (p0 > p1)
      throw std::runtime_error("degenerate grid: no lattice points at N=" +
                               std::to_string(N));
    g.pmin[a] = int(p0);
    g.pmax[a] = int(p1);
  }
  return g;
}

struct MarginReport {
  bool applicable = false;
  bool ok = false;
  double margin_distance = 0.0;  // inf over D_N of distance to complement of D
  double required = 0.0;         // sqrt(d)/N
};

// Exact on the rectangle geometry: the infimum of distances from D_N to the
// complement of D is the per-axis margin m/N.
inline MarginReport margin_check(const Domain& dom, int N) {
  dom.validate();
  MarginReport rep;
  rep.required = std::sqrt(double(dom.dim)) / N;
  if (dom.rule != GridRule::InteriorMargin) return rep;  // not applicable
  rep.applicable = true;
  rep.margin_distance = double(dom.margin) / N;
  for (int a = 0; a < dom.dim; ++a) {
    if (dom.hi[a] - dom.lo[a] <= 2.0 * dom.margin / N) {
      rep.ok = false;
      return rep;
    }
  }
  rep.ok = rep.margin_distance >= rep.required - 1e-15;
  return rep;
}

}  // namespace iflab
