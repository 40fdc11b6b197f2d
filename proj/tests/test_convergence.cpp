#include <catch2/catch.hpp>

#include "iflab/convergence.hpp"
#include "test_oracles.hpp"

using namespace iflab;

TEST_CASE("dual norm spec") {
  DualNormSpec d1 = make_dual_norm(1, 64);
  // truncated weight sum approaches pi^2/6 within the tail bound 1/K
  REQUIRE(std::fabs(d1.hs_norm_sq() - M_PI * M_PI / 6.0) <= 1.0 / 64.0);
  REQUIRE(d1.hs_norm_sq() < M_PI * M_PI / 6.0);

  DualNormSpec d2 = make_dual_norm(2, 4);
  REQUIRE(d2.mode_count() == 16);
  REQUIRE(d2.weights[0] == 1.0);
  REQUIRE(d2.weights[5] == Approx(0.25));  // (k,l)=(2,2)

  Eigen::VectorXd c = Eigen::VectorXd::Ones(d1.mode_count());
  REQUIRE(d1.dual_norm_sq(c) == Approx(d1.hs_norm_sq()));
}

TEST_CASE("covariance compare: zero ensemble and MC rate") {
  std::vector<double> pts = {0.25, 0.5, 0.75};
  auto bm = [](double s, double t) { return std::min(s, t); };
  Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(100, 3);
  auto repz = covariance_compare(zeros, Eigen::VectorXd(), bm, pts);
  REQUIRE(repz.empirical.cwiseAbs().maxCoeff() == 0.0);

  // stderr halves when samples quadruple (within noise)
  Domain dom = Domain::unit_interval(GridRule::FullClosure);
  const int N = 32;
  QuadraticModel m = random_walk_model(N);
  HeightMap hm = make_heightmap(dom, N, tent(1));
  std::vector<Eigen::VectorXd> mesh;
  for (double p : pts) {
    Eigen::VectorXd z(1);
    z << p;
    mesh.push_back(z);
  }
  auto run = [&](Eigen::Index M, std::uint64_t seed) {
    Ensemble e = sample_gaussian(m, M, seed);
    Eigen::MatrixXd vals(M, 3);
    for (Eigen::Index r = 0; r < M; ++r)
      vals.row(r) =
          apply_mesh(hm, e.samples.row(r).transpose(), mesh).transpose();
    return covariance_compare(vals, Eigen::VectorXd(), bm, pts);
  };
  auto small = run(2000, 1);
  auto large = run(8000, 2);
  const double ratio = large.stderr_.maxCoeff() / small.stderr_.maxCoeff();
  REQUIRE(ratio == Approx(0.5).margin(0.12));
}

TEST_CASE("two-sample statistics vanish for identical inputs") {
  Rng rng(8);
  Eigen::MatrixXd A(60, 2);
  for (Eigen::Index r = 0; r < 60; ++r)
    for (int c = 0; c < 2; ++c) A(r, c) = rng.normal();
  TwoSampleReport rep = two_sample_test(A, A, 99, 5);
  REQUIRE(rep.mmd <= 1e-12);
  REQUIRE(rep.mmd >= -1e-12);
  REQUIRE(rep.max_ks == 0.0);
  REQUIRE(rep.mmd_p == 1.0);
  REQUIRE(rep.min_ks_p == 1.0);
}

TEST_CASE("permutation p-values are super-uniform under the null") {
  Rng rng(99);
  int mmd_hits = 0, ks_hits = 0;
  const int reps = 60;
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::MatrixXd A(80, 1), B(80, 1);
    for (Eigen::Index r = 0; r < 80; ++r) {
      A(r, 0) = rng.normal();
      B(r, 0) = rng.normal();
    }
    TwoSampleReport t = two_sample_test(A, B, 79, 1000 + std::uint64_t(rep));
    if (t.mmd_p <= 0.05) ++mmd_hits;
    if (t.ks_p[0] <= 0.05) ++ks_hits;
    REQUIRE(t.mmd >= -1e-12);
  }
  // expect about 3 hits at level 0.05; allow generous binomial slack
  REQUIRE(mmd_hits <= 9);
  REQUIRE(ks_hits <= 9);
}

TEST_CASE("equivalence test: identical kernels give a degenerate null") {
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  HeightMap hm = make_heightmap(dom, 16, tent(1));
  Ensemble e = sample_gaussian(bridge_model(15), 200, 7);
  auto fns = default_projections(1, 3);
  TwoSampleReport rep = heightmap_equivalence_test(e.samples, hm, hm, fns, 99, 3);
  REQUIRE(rep.mmd <= 1e-12);
  REQUIRE(rep.mmd_p == 1.0);
  REQUIRE_THROWS(heightmap_equivalence_test(e.samples, hm, hm, {}, 99, 3));
}

TEST_CASE("equivalence statistic shrinks with N for tent vs indicator") {
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  auto fns = default_projections(1, 4);
  double prev = 1e300;
  for (int N : {8, 64}) {
    Grid grid = build_grid(dom, N);
    QuadraticModel m = bridge_model(int(grid.size()));
    HeightMap hA = make_heightmap(dom, grid, tent(1));
    HeightMap hB = make_heightmap(dom, grid, indicator_cube(1));
    Ensemble e = sample_gaussian(m, 600, 11);
    TwoSampleReport rep =
        heightmap_equivalence_test(e.samples, hA, hB, fns, 60, 13);
    REQUIRE(rep.mmd < prev);
    prev = rep.mmd;
  }
}

TEST_CASE("increment slope: synthetic quartic growth and weight invariance") {
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  HeightMap hm = make_heightmap(dom, 8, tent(1));
  DualNormSpec dual = make_dual_norm(1, 4);

  PathEnsemble pe;
  pe.times = {0.0, 0.01, 0.02, 0.04, 0.08, 0.1};
  Rng rng(4);
  Eigen::MatrixXd base(50, hm.size()), dir(50, hm.size());
  for (Eigen::Index r = 0; r < 50; ++r)
    for (Eigen::Index i = 0; i < hm.size(); ++i) {
      base(r, i) = rng.normal();
      dir(r, i) = rng.normal();
    }
  for (double t : pe.times) pe.states.push_back(base + t * dir);

  SlopeReport rep = increment_moment_slope(pe, hm, dual);
  REQUIRE_FALSE(rep.degenerate);
  REQUIRE(rep.fit.slope == Approx(4.0).margin(1e-6));

  DualNormSpec scaled = dual;
  for (auto& w : scaled.weights) w *= 3.0;
  SlopeReport rep2 = increment_moment_slope(pe, hm, scaled);
  REQUIRE(rep2.fit.slope == Approx(rep.fit.slope).margin(1e-9));

  // constant paths are degenerate
  PathEnsemble flat;
  flat.times = pe.times;
  for (std::size_t j = 0; j < pe.times.size(); ++j) flat.states.push_back(base);
  REQUIRE(increment_moment_slope(flat, hm, dual).degenerate);
}

TEST_CASE("increment slope: stationary lattice diffusion") {
  const int n = 8;
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  Grid grid = build_grid(dom, n + 1);
  QuadraticModel m = bridge_model(n);
  HeightMap hm = make_heightmap(dom, grid, tent(1));
  DualNormSpec dual = make_dual_norm(1, 6);
  SkewSDEConfig cfg = make_skew_config(
      m, make_potential(SmoothPart::zero(), {}), n + 1, 1, 2e-3, 1.0);
  GaussianSampler init(m, 21);
  std::vector<Eigen::VectorXd> starts;
  for (int r = 0; r < 2000; ++r) starts.push_back(init.draw());
  const double n2 = double((n + 1) * (n + 1));
  std::vector<double> times = {0.0};
  for (double lag : {0.081, 0.162, 0.324, 0.648, 0.81})
    times.push_back(lag / n2);
  PathEnsemble pe = stationary_ensemble_run(
      cfg, [&](int r) { return starts[std::size_t(r)]; }, 2000, times, 22, 2);
  SlopeReport rep = increment_moment_slope(pe, hm, dual);
  REQUIRE_FALSE(rep.degenerate);
  REQUIRE(rep.fit.slope > 1.5);
  REQUIRE(rep.fit.slope < 2.5);
}

TEST_CASE("form estimates: constants, the linear identity, nonlinear proxy") {
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  auto f = [](const Eigen::VectorXd& z) { return std::sin(M_PI * z[0]); };

  // constant functional: exactly zero at every N
  CylinderFunctional C;
  C.directions = {f};
  C.value = [](const Eigen::VectorXd&) { return 1.0; };
  C.gradient = [](const Eigen::VectorXd&) {
    Eigen::VectorXd g(1);
    g << 0.0;
    return g;
  };

  for (int N : {16, 64}) {
    Grid grid = build_grid(dom, N);
    QuadraticModel m = bridge_model(int(grid.size()));
    HeightMap hm = make_heightmap(dom, grid, tent(1));
    Ensemble e = sample_gaussian(m, 50, 3);

    REQUIRE(form_estimate(e.samples, Eigen::VectorXd(), hm, C, C) == 0.0);

    // linear functional: (1/2) N^d sum <xi,f>^2 -> (1/2)|f|^2 = 1/4
    CylinderFunctional L = linear_functional(f);
    const double est = form_estimate(e.samples, Eigen::VectorXd(), hm, L, L);
    REQUIRE(est == Approx(0.25).epsilon(N >= 64 ? 0.01 : 0.05));
  }

  // nonlinear: N=32 against the larger-N reference with matched seeds
  CylinderFunctional S = sine_functional(f);
  auto run = [&](int N) {
    Grid grid = build_grid(dom, N);
    QuadraticModel m = bridge_model(int(grid.size()));
    HeightMap hm = make_heightmap(dom, grid, tent(1));
    Ensemble e = sample_gaussian(m, 20000, 777);
    return form_estimate(e.samples, Eigen::VectorXd(), hm, S, S);
  };
  const double at32 = run(32);
  Grid grid = build_grid(dom, 64);
  QuadraticModel m = bridge_model(int(grid.size()));
  HeightMap hm = make_heightmap(dom, grid, tent(1));
  Ensemble e = sample_gaussian(m, 20000, 777);
  const double limit = form_limit_estimate(e.samples, Eigen::VectorXd(), hm, S, S);
  REQUIRE(at32 == Approx(limit).epsilon(0.05));
}

TEST_CASE("eigen table: bridge family errors shrink") {
  Domain dom = Domain::unit_interval(GridRule::OpenInterior);
  auto solve = [&](int N) {
    Grid grid = build_grid(dom, N);
    return spectral_pairs(bridge_model(int(grid.size())),
                          make_heightmap(dom, grid, indicator_cube(1)), 3);
  };
  EigenTable t = eigen_convergence_table(solve, {16, 32, 64}, 3,
                                         LimitKind::BrownianBridge);
  REQUIRE(t.limits[0] == Approx(M_PI * M_PI));
  for (int i = 0; i < 3; ++i)
    for (std::size_t r = 1; r < 3; ++r)
      REQUIRE(t.rel_errors(Eigen::Index(r), i) <
              t.rel_errors(Eigen::Index(r - 1), i));
  // eigenvalues increase with the mode index at every N
  for (Eigen::Index r = 0; r < 3; ++r) {
    REQUIRE(t.lambdas(r, 0) < t.lambdas(r, 1));
    REQUIRE(t.lambdas(r, 1) < t.lambdas(r, 2));
  }
}

TEST_CASE("level sets of the linear function") {
  const int mesh = 8192;
  Eigen::MatrixXd vals(1, mesh);
  for (int c = 0; c < mesh; ++c) vals(0, c) = (c + 0.5) / mesh;  // h(z) = z
  LevelSetReport rep =
      level_set_decay(vals, 1.0 / mesh, 0.5, {0.02, 0.04, 0.08, 0.16});
  for (std::size_t j = 0; j < rep.eps.size(); ++j)
    REQUIRE(rep.mean_measure[j] == Approx(2.0 * rep.eps[j]).margin(2.0 / mesh));
  REQUIRE(rep.fit.slope == Approx(1.0).margin(0.02));

  // constant sample at the level: measure is the whole domain
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(1, mesh, 0.5);
  LevelSetReport repf =
      level_set_decay(flat, 1.0 / mesh, 0.5, {0.02, 0.04, 0.08});
  for (double mm : repf.mean_measure) REQUIRE(mm == Approx(1.0));
}

TEST_CASE("component density") {
  // flat density: ratio is identically one
  auto flat = [](double) { return 1.0; };
  for (double r : {-1.0, 0.0, 0.7})
    REQUIRE(component_density(flat, 2.0, r) == Approx(1.0).margin(1e-10));

  // perpendicular-only dependence cancels
  auto scaled = [](double) { return 3.7; };
  REQUIRE(component_density(scaled, 1.0, 0.3) == Approx(1.0).margin(1e-10));

  // 1d step perturbation against an independent split quadrature oracle
  const double beta = 0.8, y = 0.3, lambda = 1.0;
  auto rho = [&](double r) { return std::exp(-beta * (r <= y ? 1.0 : 0.0)); };
  auto oracle_norm = [&]() {
    // naive Riemann on each side of the jump
    const double sd = 1.0 / std::sqrt(lambda);
    auto gpart = [&](double a, double b) {
      return oracle::integrate_1d(
          [&](double t) {
            return rho(t) * std::sqrt(lambda / (2.0 * M_PI)) *
                   std::exp(-0.5 * lambda * t * t);
          },
          a, b, 1000000);
    };
    return gpart(-12.0 * sd, y) + gpart(y, 12.0 * sd);
  }();
  for (double r : {-0.5, 0.29, 0.31, 1.2}) {
    const double lib = component_density(rho, lambda, r, {y});
    REQUIRE(lib == Approx(rho(r) / oracle_norm).margin(1e-8));
  }

  // normalization: integral of the ratio against N(0, 1/lambda) is one
  const double Z = component_density_normalizer(rho, lambda, {y});
  double total = 0.0;
  const int n = 400000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (i + 0.5) * h;
    total += rho(t) / Z * std::sqrt(lambda / (2.0 * M_PI)) *
             std::exp(-0.5 * lambda * t * t) * h;
  }
  REQUIRE(total == Approx(1.0).margin(1e-6));
}

TEST_CASE("equivalence statistic shrinks for the 2d membrane pairing") {
  Domain dom = Domain::unit_square(GridRule::InteriorMargin, 2);
  auto fns = default_projections(2, 4);
  double prev = 1e300;
  for (int N : {8, 16}) {
    Grid grid = build_grid(dom, N);
    QuadraticModel m = membrane_model(grid, 2.0 * N * N);
    HeightMap hA = make_heightmap(dom, grid, tent(2));
    HeightMap hB = make_heightmap(dom, grid, indicator_cube(2));
    Ensemble e = sample_gaussian(m, 400, 29);
    TwoSampleReport rep =
        heightmap_equivalence_test(e.samples, hA, hB, fns, 60, 31);
    REQUIRE(rep.mmd >= -1e-12);
    REQUIRE(rep.mmd < prev);
    prev = rep.mmd;
  }
}
