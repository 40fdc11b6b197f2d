// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one pass/fail line per criterion.  Exit status is the number of
// failed criteria.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "iflab/config.hpp"
#include "iflab/convergence.hpp"
#include "iflab/gaussian.hpp"
#include "iflab/heightmap.hpp"
#include "iflab/perturbed.hpp"
#include "iflab/scenarios.hpp"
#include "iflab/sde.hpp"

using namespace iflab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fm(double v) { return format_double(v); }

// ---------------------------------------------------------------------------

Outcome criterion1_archetype_integrals() {
  Outcome out;
  const double t1 = l2_square(tent(1)).value;
  out.check(std::fabs(t1 - 2.0 / 3.0) <= 1e-9,
            "tent-1d squared mass " + fm(t1) + " != 2/3");
  const double t2 = l2_square(tent(2)).value;
  out.check(std::fabs(t2 - 0.75) <= 1e-9,
            "tent-2d squared mass " + fm(t2) + " != 3/4");
  out.check(l2_square(indicator_cube(1)).value == 1.0 &&
                l2_square(indicator_cube(2)).value == 1.0,
            "indicator-cube squared mass != 1");
  return out;
}

Outcome criterion2_condition_checker() {
  Outcome out;
  for (const Archetype& a : {tent(1), tent(2), indicator_cube(1),
                             indicator_cube(2)}) {
    ConditionReport rep = check_condition(a);
    out.check(rep.pass, std::string(to_string(a.kind)) + " d=" +
                            std::to_string(a.dim) + " fails (l2=" +
                            fm(rep.l2_value) + ")");
    out.check(rep.pou_max_deviation <= 1e-9,
              std::string(to_string(a.kind)) + " pou deviation " +
                  fm(rep.pou_max_deviation));
  }
  ConditionReport half = check_condition(scaled(indicator_cube(1), 0.5));
  out.check(!half.integral_ok && !half.pou_ok,
            "halved indicator should fail (ii) and (iii)");
  return out;
}

Outcome criterion3_gram_and_sandwich() {
  Outcome out;
  // principal windows: d=1 up to 200 sites, d=2 up to 15x15
  for (ArchetypeKind kind : {ArchetypeKind::Tent, ArchetypeKind::IndicatorCube}) {
    {
      Archetype a = make_archetype(kind, 1);
      const double c = std::max(0.0, 2.0 * l2_square(a).value - 1.0);
      std::vector<Eigen::VectorXi> window;
      for (int k = 0; k < 200; ++k) {
        Eigen::VectorXi p(1);
        p << k;
        window.push_back(p);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_matrix(a, window));
      out.check(es.eigenvalues().minCoeff() >= c - 1e-8,
                std::string(to_string(kind)) + " d=1 window floor violated");
    }
    {
      Archetype a = make_archetype(kind, 2);
      const double c = std::max(0.0, 2.0 * l2_square(a).value - 1.0);
      std::vector<Eigen::VectorXi> window;
      for (int k = 0; k < 15; ++k)
        for (int l = 0; l < 15; ++l) {
          Eigen::VectorXi p(2);
          p << k, l;
          window.push_back(p);
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_matrix(a, window));
      out.check(es.eigenvalues().minCoeff() >= c - 1e-8,
                std::string(to_string(kind)) + " d=2 window floor violated");
    }
  }
  // norm sandwich on 1000 random states per (N, d, kernel)
  Rng rng(33001);
  for (int d : {1, 2})
    for (ArchetypeKind kind : {ArchetypeKind::Tent, ArchetypeKind::IndicatorCube})
      for (int N : {4, 16, 64}) {
        Domain dom = d == 1 ? Domain::unit_interval(GridRule::OpenInterior)
                            : Domain::unit_square(GridRule::OpenInterior, 0);
        HeightMap hm = make_heightmap(dom, N, make_archetype(kind, d));
        GramStencil st = gram_stencil(hm.xi);
        for (int rep = 0; rep < 1000; ++rep) {
          Eigen::VectorXd x(hm.size());
          for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
          NormSandwich ns = norm_sandwich_check(hm, x, st);
          if (!(ns.applicable && ns.pass)) {
            out.check(false, "sandwich failed at d=" + std::to_string(d) +
                                 " N=" + std::to_string(N) + " " +
                                 to_string(kind));
            break;
          }
        }
      }
  return out;
}

Outcome criterion4_static_limits() {
  Outcome out;
  const int N = 128;
  const Eigen::Index M = 100000;
  // node-aligned evaluation points
  std::vector<int> nodes;
  for (int k = 0; k < 10; ++k)
    nodes.push_back(std::max(1, int(std::lround((0.05 + 0.1 * k) * N))));

  struct Case {
    const char* name;
    GridRule rule;
    bool bridge;
    std::function<double(double, double)> limit;
  };
  std::vector<Case> cases = {
      {"random-walk vs min(s,t)", GridRule::FullClosure, false,
       [](double s, double t) { return std::min(s, t); }},
      {"bridge vs min(s,t)-st", GridRule::OpenInterior, true,
       [](double s, double t) { return std::min(s, t) - s * t; }},
  };
  for (const auto& c : cases) {
    Domain dom = Domain::unit_interval(c.rule);
    Grid grid = build_grid(dom, N);
    QuadraticModel model = c.bridge ? bridge_model(int(grid.size()))
                                    : random_walk_model(int(grid.size()));
    HeightMap hm = make_heightmap(dom, grid, tent(1));
    std::vector<Eigen::VectorXd> mesh;
    std::vector<double> pts;
    for (int node : nodes) {
      Eigen::VectorXd z(1);
      z << double(node) / N;
      mesh.push_back(z);
      pts.push_back(double(node) / N);
    }
    GaussianSampler gs(model, c.bridge ? 41002u : 41001u);
    Eigen::MatrixXd vals(M, Eigen::Index(mesh.size()));
    for (Eigen::Index r = 0; r < M; ++r)
      vals.row(r) = apply_mesh(hm, gs.draw(), mesh).transpose();
    CovarianceReport rep =
        covariance_compare(vals, Eigen::VectorXd(), c.limit, pts);
    out.check(rep.max_studentized <= 3.0,
              std::string(c.name) + ": max studentized deviation " +
                  fm(rep.max_studentized));
  }
  return out;
}

Outcome criterion5_equivalence() {
  Outcome out;
  Domain dom = Domain::unit_interval(GridRule::FullClosure);
  auto fns = default_projections(1, 5);
  auto V = [](double s) { return 0.5 * s * s; };

  std::vector<double> mmds, ps;
  for (int N : {8, 16, 32, 64}) {
    Grid grid = build_grid(dom, N);
    PinningMeasure pm = make_pinning(V, 1.0, int(grid.size()));
    const Eigen::Index thin =
        std::clamp<Eigen::Index>(Eigen::Index(N) * N / 4, 8, 1024);
    PinningResult pr =
        pinning_sampler(pm, 1000, 50000u + std::uint64_t(N), thin, 600);
    HeightMap hA = make_heightmap(dom, grid, tent(1));
    HeightMap hB = make_heightmap(dom, grid, indicator_left(1));
    TwoSampleReport ts = heightmap_equivalence_test(
        pr.ensemble.samples, hA, hB, fns, 200, 51000u + std::uint64_t(N));
    mmds.push_back(ts.mmd);
    ps.push_back(ts.mmd_p);
  }
  out.note("pinning mmd by N: " + fm(mmds[0]) + " " + fm(mmds[1]) + " " +
           fm(mmds[2]) + " " + fm(mmds[3]));
  out.check(mmds.front() > mmds.back(),
            "statistic did not decrease from N=8 to N=64");
  for (std::size_t i = 1; i < mmds.size(); ++i)
    out.check(mmds[i] <= 1.5 * mmds[i - 1] + 1e-12,
              "statistic increased beyond permutation noise at step " +
                  std::to_string(i));
  out.check(ps.back() > 0.05, "significant at N=64 (p = " + fm(ps.back()) + ")");

  // dynamic two-time variant on stationary lattice paths at N=32
  {
    const int N = 32;
    Domain dom2 = Domain::unit_interval(GridRule::OpenInterior);
    Grid grid = build_grid(dom2, N);
    QuadraticModel model = bridge_model(int(grid.size()));
    SkewSDEConfig cfg = make_skew_config(
        model, make_potential(SmoothPart::zero(), {}), N, 1, 2e-3, 1.1);
    GaussianSampler init(model, 52001);
    std::vector<Eigen::VectorXd> starts;
    for (int r = 0; r < 800; ++r) starts.push_back(init.draw());
    const double n2 = double(N) * N;
    PathEnsemble pe = stationary_ensemble_run(
        cfg, [&](int r) { return starts[std::size_t(r)]; }, 800,
        {0.512 / n2, 1.024 / n2}, 52002, 2);
    HeightMap hA = make_heightmap(dom2, grid, tent(1));
    HeightMap hB = make_heightmap(dom2, grid, indicator_cube(1));
    TwoSampleReport ts =
        heightmap_equivalence_test_dynamic(pe, hA, hB, fns, 200, 52003);
    out.check(ts.mmd_p > 0.05,
              "dynamic variant significant at N=32 (p = " + fm(ts.mmd_p) + ")");
  }
  return out;
}

Outcome criterion6_sde_invariance() {
  Outcome out;
  // lattice covariance preserved from a stationary start
  {
    const int n = 16;
    QuadraticModel model = bridge_model(n);
    SkewSDEConfig cfg = make_skew_config(
        model, make_potential(SmoothPart::zero(), {}), n, 1, 5e-3, 1.0);
    GaussianSampler init(model, 61001);
    std::vector<Eigen::VectorXd> starts;
    for (int r = 0; r < 10000; ++r) starts.push_back(init.draw());
    PathEnsemble pe = stationary_ensemble_run(
        cfg, [&](int r) { return starts[std::size_t(r)]; }, 10000,
        {1.0 / double(n * n)}, 61002, 2);
    const Eigen::MatrixXd cov = model.covariance();
    const Eigen::MatrixXd& S = pe.states[0];
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double m1 = 0.0, m2 = 0.0;
        for (Eigen::Index r = 0; r < S.rows(); ++r) {
          const double p = S(r, i) * S(r, j);
          m1 += p;
          m2 += p * p;
        }
        m1 /= double(S.rows());
        m2 /= double(S.rows());
        const double se =
            std::sqrt(std::max(0.0, m2 - m1 * m1) / double(S.rows()));
        if (se > 0.0)
          worst = std::max(worst, std::fabs(m1 - cov(i, j)) / se);
      }
    out.check(worst <= 3.0,
              "covariance drifted: max studentized " + fm(worst));
  }
  // single-particle step-potential stationary law
  {
    Potential pot = make_potential(SmoothPart::zero(), {{0.0, 1.0}});
    Eigen::MatrixXd A1(1, 1);
    A1 << 1.0;
    QuadraticModel scalar = make_quadratic_model("scalar", A1);
    SkewSDEConfig cfg = make_skew_config(scalar, pot, 1, 1, 5e-4, 1.0);
    PerturbedMeasure target = make_perturbed_measure(scalar, pot, 1, 1);
    Rng rng(61003);
    Eigen::VectorXd x(1);
    x << 0.2;
    Eigen::MatrixXd lt = Eigen::MatrixXd::Zero(1, 1);
    StepDiagnostics diag;
    const long burn = std::lround(20.0 / cfg.dt);
    for (long s = 0; s < burn; ++s) step(cfg, x, lt, rng, diag);
    const Eigen::Index M = 100000;
    const long spacing = std::lround(0.5 / cfg.dt);
    std::vector<double> xs(static_cast<std::size_t>(M));
    for (Eigen::Index i = 0; i < M; ++i) {
      for (long s = 0; s < spacing; ++s) step(cfg, x, lt, rng, diag);
      xs[std::size_t(i)] = x[0];
    }
    // quadrature oracle for the cdf, independent of the sampler machinery
    const int nq = 800000;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / nq;
    std::vector<double> cum(std::size_t(nq) + 1, 0.0);
    for (int i = 0; i < nq; ++i) {
      const double t = lo + (i + 0.5) * h;
      const double dens = std::exp(-t * t - (t <= 0.0 ? 1.0 : 0.0));
      cum[std::size_t(i) + 1] = cum[std::size_t(i)] + dens * h;
    }
    for (auto& c : cum) c /= cum.back();
    auto cdf = [&](double v) {
      if (v <= lo) return 0.0;
      if (v >= hi) return 1.0;
      const double t = (v - lo) / (hi - lo) * nq;
      const std::size_t i = std::size_t(t);
      const double f = t - double(i);
      return cum[i] * (1.0 - f) + cum[std::min<std::size_t>(i + 1, nq)] * f;
    };
    const double ks = ks_vs_cdf(xs, cdf);
    out.check(ks < 0.02, "single-particle KS " + fm(ks) + " >= 0.02");
    out.note("single-particle KS = " + fm(ks));
  }
  return out;
}

Outcome criterion7_increment_slope() {
  Outcome out;
  const int N = 16;
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  Grid grid = build_grid(dom, N);
  QuadraticModel model = bridge_model(int(grid.size()));
  HeightMap hm = make_heightmap(dom, grid, tent(1));
  DualNormSpec dual = make_dual_norm(1, 8);
  SkewSDEConfig cfg = make_skew_config(
      model, make_potential(SmoothPart::zero(), {}), N, 1, 2e-3, 0.42);
  GaussianSampler init(model, 71001);
  std::vector<Eigen::VectorXd> starts;
  for (int r = 0; r < 6000; ++r) starts.push_back(init.draw());
  const double n2 = double(N) * N;
  std::vector<double> times = {0.0};
  for (double s : {0.04, 0.08, 0.16, 0.32, 0.4}) times.push_back(s / n2);
  PathEnsemble pe = stationary_ensemble_run(
      cfg, [&](int r) { return starts[std::size_t(r)]; }, 6000, times, 71002,
      2);
  SlopeReport rep = increment_moment_slope(pe, hm, dual);
  out.check(!rep.degenerate, "degenerate moment sequence");
  if (!rep.degenerate) {
    out.check(rep.fit.slope >= 1.75 && rep.fit.slope <= 2.25,
              "slope " + fm(rep.fit.slope) + " outside [1.75, 2.25]");
    out.note("slope = " + fm(rep.fit.slope) + " +- " + fm(rep.fit.slope_stderr));
  }
  return out;
}

Outcome criterion8_form_convergence() {
  Outcome out;
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  auto f = [](const Eigen::VectorXd& z) { return std::sin(M_PI * z[0]); };
  CylinderFunctional L = linear_functional(f);
  CylinderFunctional S = sine_functional(f);

  // deterministic linear identity at N=128: (1/2) N sum <xi,f>^2 vs |f|^2/2
  {
    Grid grid = build_grid(dom, 128);
    HeightMap hm = make_heightmap(dom, grid, tent(1));
    Eigen::MatrixXd dummy = Eigen::MatrixXd::Zero(1, grid.size());
    const double est = form_estimate(dummy, Eigen::VectorXd(), hm, L, L);
    out.check(std::fabs(est - 0.25) <= 0.01 * 0.25,
              "linear identity " + fm(est) + " vs 0.25");
  }
  // nonlinear: N=64 against the matched-seed larger-N reference
  {
    auto sample_at = [&](int N) {
      Grid grid = build_grid(dom, N);
      QuadraticModel m = bridge_model(int(grid.size()));
      HeightMap hm = make_heightmap(dom, grid, tent(1));
      Ensemble e = sample_gaussian(m, 20000, 81001);
      return std::pair<HeightMap, Eigen::MatrixXd>(hm, e.samples);
    };
    auto [hm64, s64] = sample_at(64);
    const double est64 = form_estimate(s64, Eigen::VectorXd(), hm64, S, S);
    auto [hm128, s128] = sample_at(128);
    const double ref =
        form_limit_estimate(s128, Eigen::VectorXd(), hm128, S, S);
    out.check(std::fabs(est64 - ref) <= 0.05 * std::fabs(ref),
              "nonlinear estimate " + fm(est64) + " vs reference " + fm(ref));
    out.note("sine functional: " + fm(est64) + " vs " + fm(ref));
  }
  return out;
}

Outcome criterion9_spectral() {
  Outcome out;
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  Grid grid = build_grid(dom, 256);
  QuadraticModel model = bridge_model(int(grid.size()));
  HeightMap hm = make_heightmap(dom, grid, indicator_cube(1));
  SpectralPairs sp = spectral_pairs(model, hm, 2);
  const double pi2 = M_PI * M_PI;
  out.check(std::fabs(sp.eigenvalues[0] - pi2) <= 0.02 * pi2,
            "mode 1: " + fm(sp.eigenvalues[0]) + " vs " + fm(pi2));
  out.check(std::fabs(sp.eigenvalues[1] - 4.0 * pi2) <= 0.03 * 4.0 * pi2,
            "mode 2: " + fm(sp.eigenvalues[1]) + " vs " + fm(4.0 * pi2));
  return out;
}

Outcome criterion10_appendix() {
  Outcome out;
  // envelope sandwich with shrinking bands
  auto g = [](double y) { return y >= 0.0 ? 1.0 : 0.0; };
  double prev_band = 1e300;
  for (int m : {4, 8, 16, 32}) {
    EnvelopePair env = mollified_envelopes(g, true, m);
    double band = 0.0;
    bool sandwich = true;
    for (int i = 0; i <= 10000; ++i) {
      const double x = -2.0 + 4.0 * i / 10000.0;
      const double gm = env.minorant(x), gM = env.majorant(x);
      sandwich = sandwich && gm <= g(x) + 1e-12 && gM >= g(x) - 1e-12;
      band = std::max(band, gM - gm);
    }
    out.check(sandwich, "envelope sandwich violated at m=" + std::to_string(m));
    // the disagreement region has width O(1/m); measure where the gap is big
    double width = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double x = -2.0 + 4.0 * i / 20000.0;
      if (env.majorant(x) - env.minorant(x) > 0.5) width += 4.0 / 20000.0;
    }
    out.check(width < prev_band, "band did not shrink at m=" + std::to_string(m));
    prev_band = width;
  }

  // near-level occupation of bridge interfaces
  {
    const int N = 64;
    Domain dom = Domain::unit_interval(GridRule::OpenInterior);
    Grid grid = build_grid(dom, N);
    QuadraticModel model = bridge_model(int(grid.size()));
    HeightMap hm = make_heightmap(dom, grid, tent(1));
    Ensemble e = sample_gaussian(model, 1000, 101001);
    Mesh mesh = make_mesh(dom, 2048);
    InterfaceEnsemble ie =
        pushforward(e.samples, Eigen::VectorXd(), hm, mesh);
    LevelSetReport rep = level_set_decay(ie.values, mesh.cell_volume, 0.1,
                                         {0.02, 0.04, 0.08, 0.16});
    bool decreasing = true;
    for (std::size_t i = 1; i < rep.mean_measure.size(); ++i)
      decreasing = decreasing && rep.mean_measure[i] > rep.mean_measure[i - 1];
    out.check(decreasing && rep.mean_measure.front() < rep.mean_measure.back(),
              "near-level measure not shrinking with eps");
    out.check(!rep.fit.degenerate && rep.fit.slope >= 0.8 &&
                  rep.fit.slope <= 1.2,
              "level-set slope " + fm(rep.fit.slope) + " outside [0.8, 1.2]");
    out.note("level-set slope = " + fm(rep.fit.slope));
  }
  return out;
}

Outcome criterion11_determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const std::vector<std::string> configs = {
      R"({"scenario":"condition-check","seed":111,
          "domain":{"dim":1,"rule":"open-interior"},
          "archetype":{"kind":"tent"},"archetype_b":{"kind":"indicator-cube"}})",
      R"({"scenario":"level-set","seed":222,
          "domain":{"dim":1,"rule":"open-interior"},
          "archetype":{"kind":"tent"},
          "model":{"kind":"bridge","N":[32]},
          "sampler":{"count":200},
          "analysis":{"mesh":512,"level":0.1,"eps":[0.04,0.08,0.16]}})",
  };
  for (const std::string& text : configs) {
    RunConfig cfg = parse_config(text);
    const fs::path a = fs::temp_directory_path() / "iflab_acc_a";
    const fs::path b = fs::temp_directory_path() / "iflab_acc_b";
    fs::remove_all(a);
    fs::remove_all(b);
    run_scenario(cfg, a.string());
    run_scenario(cfg, b.string());
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), a);
      if (!fs::exists(b / rel)) {
        out.check(false, "missing artifact on rerun: " + rel.string());
        continue;
      }
      out.check(read_file(entry.path()) == read_file(b / rel),
                cfg.scenario + ": " + rel.string() + " differs between runs");
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "archetype integrals", criterion1_archetype_integrals},
      {2, "admissibility checker", criterion2_condition_checker},
      {3, "gram floors and norm sandwich", criterion3_gram_and_sandwich},
      {4, "static covariance limits", criterion4_static_limits},
      {5, "kernel equivalence (static and dynamic)", criterion5_equivalence},
      {6, "sde invariance", criterion6_sde_invariance},
      {7, "increment fourth-moment slope", criterion7_increment_slope},
      {8, "form convergence", criterion8_form_convergence},
      {9, "spectral convergence", criterion9_spectral},
      {10, "envelopes and level sets", criterion10_appendix},
      {11, "determinism", criterion11_determinism},
  };
  int failures = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n",
                out.pass ? "PASS" : "FAIL", e.id, e.name, secs,
                out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", int(entries.size()) - failures,
              entries.size());
  return failures;
}
