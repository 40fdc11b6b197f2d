#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iflab {

// Bounded smooth part g0 with bounded derivative.  Built-ins are
// amplitude * base(scale * y); custom evaluators carry declared sup bounds.
struct SmoothPart {
  enum class Kind { Zero, Sine, Arctan, ScaledTanh, Custom };
  Kind kind = Kind::Zero;
  double amplitude = 1.0;
  double scale = 1.0;
  std::function<double(double)> fn, dfn;
  double custom_sup_value = 0.0, custom_sup_derivative = 0.0;

  double value(double y) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Sine: return amplitude * std::sin(scale * y);
      case Kind::Arctan: return amplitude * std::atan(scale * y);
      case Kind::ScaledTanh: return amplitude * std::tanh(scale * y);
      case Kind::Custom: return fn(y);
    }
    return 0.0;
  }

  double derivative(double y) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Sine: return amplitude * scale * std::cos(scale * y);
      case Kind::Arctan: {
        const double u = scale * y;
        return amplitude * scale / (1.0 + u * u);
      }
      case Kind::ScaledTanh: {
        const double t = std::tanh(scale * y);
        return amplitude * scale * (1.0 - t * t);
      }
      case Kind::Custom: return dfn(y);
    }
    return 0.0;
  }

  double sup_value() const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Sine: return std::fabs(amplitude);
      case Kind::Arctan: return std::fabs(amplitude) * M_PI / 2.0;
      case Kind::ScaledTanh: return std::fabs(amplitude);
      case Kind::Custom: return custom_sup_value;
    }
    return 0.0;
  }

  double sup_derivative() const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Sine:
      case Kind::Arctan:
      case Kind::ScaledTanh: return std::fabs(amplitude * scale);
      case Kind::Custom: return custom_sup_derivative;
    }
    return 0.0;
  }

  static SmoothPart zero() { return SmoothPart{}; }
  static SmoothPart named(const std::string& name, double amplitude = 1.0,
                          double scale = 1.0) {
    SmoothPart s;
    s.amplitude = amplitude;
    s.scale = scale;
    if (name == "zero") s.kind = Kind::Zero;
    else if (name == "sine") s.kind = Kind::Sine;
    else if (name == "arctan") s.kind = Kind::Arctan;
    else if (name == "scaled-tanh") s.kind = Kind::ScaledTanh;
    else throw std::invalid_argument("unknown smooth part: " + name);
    return s;
  }
};

struct Step {
  double level = 0.0;
  double jump = 0.0;
};

// g(y) = g0(y) + sum_j beta_j 1_{(-inf, y_j]}(y); the value AT a step level
// is the upper value (closed on the left).
struct Potential {
  SmoothPart smooth;
  std::vector<Step> steps;  // strictly increasing levels

  double step_part(double y) const {
    double s = 0.0;
    for (const auto& st : steps)
      if (y <= st.level) s += st.jump;
    return s;
  }

  double eval(double y) const { return smooth.value(y) + step_part(y); }

  // derivative of the smooth part only; the steps carry no classical one
  double smooth_derivative(double y) const { return smooth.derivative(y); }

  double total_jump() const {
    double s = 0.0;
    for (const auto& st : steps) s += std::fabs(st.jump);
    return s;
  }

  // exact sup bound: the step part is piecewise constant with values given
  // by the suffix sums of the jumps (plus 0 to the right of every level)
  double sup_norm_bound() const {
    double worst = 0.0, suffix = 0.0;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
      suffix += it->jump;
      worst = std::max(worst, std::fabs(suffix));
    }
    return smooth.sup_value() + worst;
  }

  bool has_steps() const { return !steps.empty(); }
};

inline Potential make_potential(SmoothPart smooth, std::vector<Step> steps) {
  std::sort(steps.begin(), steps.end(),
            [](const Step& a, const Step& b) { return a.level < b.level; });
  for (std::size_t j = 1; j < steps.size(); ++j)
    if (!(steps[j - 1].level < steps[j].level))
      throw std::invalid_argument("potential: step levels must be distinct");
  Potential p;
  p.smooth = std::move(smooth);
  p.steps = std::move(steps);
  return p;
}

struct TotalVariation {
  double value = 0.0;
  double range = 0.0;   // variation of the smooth part measured on [-range, range]
  int resolution = 0;   // quadrature points used for the smooth part
};

// TV(g) on [-range, range]: quadrature of |g0'| plus the jump masses.
inline TotalVariation total_variation(const Potential& g, double range = 100.0,
                                      int resolution = 200000) {
  TotalVariation tv;
  tv.range = range;
  tv.resolution = resolution;
  double s = 0.0;
  const double h = 2.0 * range / resolution;
  for (int i = 0; i < resolution; ++i)
    s += std::fabs(g.smooth_derivative(-range + (i + 0.5) * h));
  tv.value = s * h + g.total_jump();
  return tv;
}

// Two monotone increasing tables with f1 - f2 = g exactly at the grid points
// (f1 = (V + g)/2, f2 = (V - g)/2 with V the running variation, so
// ||f1||_inf + ||f2||_inf <= ||g||_inf + TV(g)).
struct MonotonePair {
  std::vector<double> grid;
  std::vector<double> f1, f2;
  double sup_f1 = 0.0, sup_f2 = 0.0;
};

inline MonotonePair jordan_decompose(const Potential& g, double lo, double hi,
                                     int grid_points = 2001,
                                     int subdivisions = 64) {
  if (!(lo < hi) || grid_points < 2)
    throw std::invalid_argument("jordan_decompose: bad grid");
  MonotonePair out;
  out.grid.resize(std::size_t(grid_points));
  out.f1.resize(std::size_t(grid_points));
  out.f2.resize(std::size_t(grid_points));
  const double h = (hi - lo) / (grid_points - 1);
  double V = 0.0;
  double prev = lo;
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + i * h;
    if (i > 0) {
      // smooth variation on (prev, x]
      const double hh = (x - prev) / subdivisions;
      for (int q = 0; q < subdivisions; ++q)
        V += std::fabs(g.smooth_derivative(prev + (q + 0.5) * hh)) * hh;
      // jumps with level in [prev, x): the jump at y_j happens just above y_j
      for (const auto& st : g.steps)
        if (st.level >= prev && st.level < x) V += std::fabs(st.jump);
    }
    const double gx = g.eval(x);
    out.grid[std::size_t(i)] = x;
    out.f1[std::size_t(i)] = 0.5 * (V + gx);
    out.f2[std::size_t(i)] = 0.5 * (V - gx);
    out.sup_f1 = std::max(out.sup_f1, std::fabs(out.f1[std::size_t(i)]));
    out.sup_f2 = std::max(out.sup_f2, std::fabs(out.f2[std::size_t(i)]));
    prev = x;
  }
  return out;
}

// Continuous minorant/majorant pair for a bounded monotone function, built
// from a hat partition of unity of width 2/m with the evaluation points
// shifted two cells against the direction of growth.
struct EnvelopePair {
  int m = 1;
  bool increasing = true;
  std::function<double(double)> minorant, majorant;
};

namespace detail {

inline double hat01(double t) {
  const double v = 1.0 - std::fabs(t);
  return v > 0.0 ? v : 0.0;
}

// grid search over |r| < 1/m for the point where g_n(i/m + r) best matches
// g_ref(i/m); `tol` sets the search resolution
inline double envelope_shift(const std::function<double(double)>& g_ref,
                             const std::function<double(double)>& g_n, int m,
                             long i, double tol) {
  const double target = g_ref(double(i) / m);
  const double rmax = 1.0 / m;
  const int half = std::max(1, int(std::ceil(rmax / std::max(tol, 1e-12))));
  double best_r = 0.0, best = std::fabs(target - g_n(double(i) / m));
  for (int k = -half + 1; k < half; ++k) {
    const double r = rmax * double(k) / half;
    const double v = std::fabs(target - g_n(double(i) / m + r));
    if (v < best - 1e-15) {
      best = v;
      best_r = r;
    }
  }
  return best_r;
}

}  // namespace detail

inline EnvelopePair mollified_envelopes(
    const std::function<double(double)>& g_ref,
    const std::function<double(double)>& g_n, bool increasing, int m,
    double shift_tol = 1e-3) {
  if (m < 1) throw std::invalid_argument("mollified_envelopes: m >= 1");
  EnvelopePair env;
  env.m = m;
  env.increasing = increasing;
  auto coeff = [g_ref, g_n, m, shift_tol](long i) {
    const double r = detail::envelope_shift(g_ref, g_n, m, i, shift_tol);
    return g_n(double(i) / m + r);
  };
  // sum_i v_i hat(mx - (i + shift)); only two hats are active at any x
  auto eval = [coeff, m](double x, long shift) {
    const long j = long(std::floor(double(m) * x));
    double s = 0.0;
    for (long t = j; t <= j + 1; ++t)
      s += coeff(t - shift) * detail::hat01(double(m) * x - double(t));
    return s;
  };
  const long smin = increasing ? 2 : -2;
  env.minorant = [eval, smin](double x) { return eval(x, smin); };
  env.majorant = [eval, smin](double x) { return eval(x, -smin); };
  return env;
}

inline EnvelopePair mollified_envelopes(
    const std::function<double(double)>& g, bool increasing, int m,
    double shift_tol = 1e-3) {
  return mollified_envelopes(g, g, increasing, m, shift_tol);
}

// sup over x of inf over |r| <= delta of |g(x) - g_n(x + r)|, both taken on
// uniform grids.
inline double local_shift_distance(const std::function<double(double)>& g,
                                   const std::function<double(double)>& g_n,
                                   double delta, double lo, double hi,
                                   int x_points = 4001, int r_points = 201) {
  if (delta <= 0.0) throw std::invalid_argument("local_shift_distance: delta");
  double worst = 0.0;
  for (int i = 0; i < x_points; ++i) {
    const double x = lo + (hi - lo) * double(i) / (x_points - 1);
    const double gx = g(x);
    double best = 1e300;
    for (int k = 0; k < r_points; ++k) {
      const double r = -delta + 2.0 * delta * double(k) / (r_points - 1);
      best = std::min(best, std::fabs(gx - g_n(x + r)));
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace iflab
