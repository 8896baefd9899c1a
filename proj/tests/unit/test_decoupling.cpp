#include "example_setup.hpp"
#include "oracles.hpp"

#include <hetsync/decoupling.hpp>
#include <hetsync/errors.hpp>
#include <hetsync/spectral.hpp>

#include <doctest.h>

#include <Eigen/LU>

using namespace hetsync;

TEST_CASE("uncoupled blocks evolve by matrix powers") {
  Rng rng(3);
  DecomposedSystem sys;
  sys.a_star = with_spectral_radius(rng.matrix(2, 2), 1.3);
  sys.a_stable = with_spectral_radius(rng.matrix(3, 3), 0.6);
  const Vector x0 = rng.vector(5);
  const DecomposedTrajectory tr = simulate_decomposed(sys, x0, 25);
  Matrix ys = Matrix::Identity(2, 2), zs = Matrix::Identity(3, 3);
  for (std::size_t t = 0; t <= 25; ++t) {
    CHECK((tr.y[t] - ys * x0.head(2)).norm() <= 1e-12 * std::max(1.0, tr.y[t].norm()));
    CHECK((tr.z[t] - zs * x0.tail(3)).norm() <= 1e-14);
    CHECK(tr.z_norm[t] == doctest::Approx(tr.z[t].norm()));
    ys = sys.a_star * ys;
    zs = sys.a_stable * zs;
  }
}

TEST_CASE("scalar blocks with geometric coupling") {
  DecomposedSystem sys;
  sys.a_star = Matrix::Constant(1, 1, 2.0);
  sys.a_stable = Matrix::Constant(1, 1, 0.5);
  sys.perturbation = [](std::size_t t) {
    return BlockPerturbation{Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                             Matrix::Constant(1, 1, 0.1 * std::pow(0.4, static_cast<double>(t))), Matrix::Zero(1, 1)};
  };
  const double y0 = 0.7, z0 = -0.3;
  const DecomposedTrajectory tr = simulate_decomposed(sys, Vector{{y0, z0}}, 80);
  // z_{t+1} = 0.5 z_t + 0.1 y0 0.8^t
  for (std::size_t t = 0; t <= 80; ++t) {
    const double ref = oracle::recurrence_closed_form(0.1 * y0, 0.8, 0.5, z0, t);
    CHECK(std::abs(tr.z[t](0) - ref) <= 1e-10 * std::abs(ref) + 1e-300);
    CHECK(tr.y[t](0) == doctest::Approx(y0 * std::pow(2.0, static_cast<double>(t))).epsilon(1e-14));
  }
  CHECK(check_decay(tr.z_norm, 0.85).passed);
}

TEST_CASE("decomposed simulation validation and overflow") {
  DecomposedSystem sys;
  sys.a_star = Matrix::Constant(1, 1, 3.0);
  sys.a_stable = Matrix::Constant(1, 1, 0.5);
  CHECK_THROWS_AS(simulate_decomposed(sys, Vector::Ones(3), 5), InvalidArgument);
  try {
    simulate_decomposed(sys, Vector::Ones(2), 400);
    FAIL("expected overflow");
  } catch (const OverflowError& e) {
    CHECK(e.step() == 315);  // 3^314 < 1e150 < 3^315
  }
  sys.perturbation = [](std::size_t) {
    return BlockPerturbation{Matrix::Zero(2, 2), Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  };
  CHECK_THROWS_AS(simulate_decomposed(sys, Vector::Ones(2), 5), InvalidArgument);
}

TEST_CASE("check decay examples") {
  std::vector<double> half, slow;
  for (int t = 0; t <= 300; ++t) {
    half.push_back(std::pow(0.5, t));
    slow.push_back(std::pow(0.9, t));
  }
  const DecayCertificate ok = check_decay(half, 0.6);
  CHECK(ok.passed);
  CHECK(ok.empirical_sup == doctest::Approx(1.0));
  CHECK(ok.sup_index == 0);
  CHECK(ok.tail_start == 100);
  const DecayCertificate bad = check_decay(slow, 0.8);
  CHECK_FALSE(bad.passed);
  CHECK_FALSE(bad.bounded);
  CHECK(bad.sup_index == 300);
  CHECK_THROWS_AS(check_decay(half, 1.0), InvalidArgument);
  CHECK_THROWS_AS(check_decay(std::vector<double>{}, 0.5), InvalidArgument);
  // Zero sequences are trivially bounded.
  CHECK(check_decay(std::vector<double>(50, 0.0), 0.5).passed);
}

TEST_CASE("product ratio: diagonal and jordan closed forms") {
  const Matrix d = Vector{{0.9, -0.4, 0.2}}.asDiagonal();
  const ProductRatio pd = perturbed_product_ratio(d, {}, 0.1, 200);
  CHECK(pd.sup == doctest::Approx(1.0));
  for (std::size_t t = 0; t <= 200; ++t) {
    CHECK(pd.ratios[t] == doctest::Approx(std::pow(0.9, static_cast<double>(t))).epsilon(1e-10));
  }

  const double rho = 0.8, eps = 0.05;
  Matrix j(2, 2);
  j << rho, 1, 0, rho;
  const ProductRatio pj = perturbed_product_ratio(j, {}, eps, 300);
  for (std::size_t t = 1; t <= 300; ++t) {
    const double td = static_cast<double>(t);
    // J^t = [[rho^t, t rho^(t-1)], [0, rho^t]]
    const double ref = oracle::upper_triangular_2x2_norm(std::pow(rho, td), td * std::pow(rho, td - 1), std::pow(rho, td)) /
                       std::pow(rho + eps, td);
    CHECK(std::abs(pj.ratios[t] - ref) <= 1e-10 * ref);
  }
  CHECK(pj.argmax > 0);
  CHECK(pj.argmax < 100);
  CHECK(std::isfinite(pj.sup));
  CHECK_THROWS_AS(perturbed_product_ratio(j, {}, 0.0, 10), InvalidArgument);
}

TEST_CASE("product ratio: vanishing random perturbations stay bounded") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    const Eigen::Index n = rng.integer(2, 5);
    const Matrix a = with_spectral_radius(rng.matrix(n, n), rng.uniform(0.5, 1.5));
    const Matrix r = rng.matrix(n, n);
    auto p = [&r](std::size_t t) -> Matrix { return r / static_cast<double>(t + 1); };
    const ProductRatio short_run = perturbed_product_ratio(a, p, 0.1, 500);
    const ProductRatio long_run = perturbed_product_ratio(a, p, 0.1, 1000);
    CHECK(std::isfinite(short_run.sup));
    // Doubling the horizon must not raise the supremum.
    CHECK(long_run.sup == doctest::Approx(short_run.sup).epsilon(1e-12));
    CHECK(short_run.ratios.back() < short_run.sup);
  }
}

TEST_CASE("forced recurrence: closed forms and converging coefficients") {
  auto constant = [](double v) { return [v](std::size_t) { return v; }; };
  const std::vector<double> zero_forcing = forced_recurrence({0.0, 0.5}, constant(0.6), 2.0, 100);
  for (std::size_t t = 0; t <= 100; ++t) {
    CHECK(zero_forcing[t] == doctest::Approx(2.0 * std::pow(0.6, static_cast<double>(t))).epsilon(1e-12));
  }
  CHECK(forced_recurrence_bound({0.0, 0.5}, constant(0.6), 0.6, 2.0, 0.65, 300).passed);

  for (auto [m, beta, lambda] : {std::tuple{1.0, 0.7, 0.4}, std::tuple{3.0, 0.3, 0.8}, std::tuple{0.5, 0.9, 0.85}}) {
    const std::vector<double> a = forced_recurrence({m, beta}, constant(lambda), 1.5, 200);
    for (std::size_t t = 0; t <= 200; ++t) {
      const double ref = oracle::recurrence_closed_form(m, beta, lambda, 1.5, t);
      CHECK(std::abs(a[t] - ref) <= 1e-10 * std::abs(ref));
    }
    CHECK(forced_recurrence_bound({m, beta}, constant(lambda), lambda, 1.5, std::max(beta, lambda) + 0.03, 500).passed);
  }

  auto from_above = [](std::size_t t) { return 0.5 + 1.0 / static_cast<double>(t + 1); };
  const DecayCertificate c = forced_recurrence_bound({1.0, 0.4}, from_above, 0.5, 1.0, 0.6, 500);
  CHECK(c.passed);
  CHECK_THROWS_AS(forced_recurrence_bound({1.0, 0.7}, constant(0.5), 0.5, 1.0, 0.6, 10), InvalidArgument);
}

TEST_CASE("random trials respect their construction") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CAPTURE(seed);
    const DecouplingTrial tr = make_decoupling_trial(seed);
    CHECK(tr.system.satisfies_hypothesis());
    CHECK(spectral_radius(tr.system.a_star) == doctest::Approx(tr.rho_star).epsilon(1e-10));
    CHECK(spectral_radius(tr.system.a_stable) == doctest::Approx(tr.rho_stable).epsilon(1e-10));
    CHECK(tr.rho_star >= 1.0);
    CHECK(tr.rho_stable <= 0.9);
    CHECK(tr.system.kappa * tr.rho_star <= 0.95);
    for (std::size_t t : {0u, 10u, 100u}) {
      const BlockPerturbation p = tr.system.perturbation(t);
      CHECK(operator_norm(p.p3) <=
            tr.system.bound * std::pow(tr.system.kappa, static_cast<double>(t)) * (1 + 1e-12));
      // The other blocks only decay like 1/(t+1).
      CHECK(operator_norm(p.p4) * static_cast<double>(t + 1) == doctest::Approx(operator_norm(tr.system.perturbation(0).p4)));
    }
    // Same seed, same instance.
    const DecouplingTrial again = make_decoupling_trial(seed);
    CHECK((again.system.a_star - tr.system.a_star).norm() == 0.0);
    CHECK((again.x0 - tr.x0).norm() == 0.0);
  }
}

TEST_CASE("negative control fails") {
  const DecouplingTrial bad = make_violating_trial();
  CHECK_FALSE(bad.system.satisfies_hypothesis());
  const TrialOutcome out = run_trial(bad);
  CHECK_FALSE(out.passed);
  CHECK_FALSE(out.hypothesis);
  CHECK_THROWS_AS(run_decouple_suite(1, 0), InvalidArgument);
}

TEST_CASE("disagreement dynamics equal the decomposed system") {
  const LaplacianSpectrum spec = setup::example_spectrum();
  const ProtocolDesign d = setup::example_design(spec);
  const DisagreementTransform tr = DisagreementTransform::spectral(spec);
  const Matrix t = tr.kron(3);
  const Matrix lam = t.transpose() * limit_closed_loop(spec.laplacian, d) * t;

  const std::size_t horizon = 60;
  const std::vector<Vector> x0 = setup::uniform_states(2024, 4, 3);
  AgentEnsemble ens(oracle::example_dynamics(), x0, oracle::example_input());
  std::vector<Matrix> perturb;
  for (std::size_t k = 0; k < horizon; ++k) {
    perturb.push_back(t.transpose() * closed_loop_perturbation(ens, spec.laplacian, d) * t);
    ens.advance(spec.laplacian, d);
  }
  DecomposedSystem sys;
  sys.a_star = lam.topLeftCorner(3, 3);
  sys.a_stable = lam.bottomRightCorner(9, 9);
  sys.perturbation = [&perturb](std::size_t k) {
    const Matrix& p = perturb[k];
    return BlockPerturbation{p.topLeftCorner(3, 3), p.topRightCorner(3, 9), p.bottomLeftCorner(9, 3),
                             p.bottomRightCorner(9, 9)};
  };
  CHECK(spectral_radius(sys.a_stable) < 1.0);
  const Disagreement c0 = disagreement(x0, tr);
  Vector start(12);
  start << c0.sigma, c0.zeta;
  const DecomposedTrajectory dec = simulate_decomposed(sys, start, horizon);

  SimulationOptions opts;
  opts.horizon = horizon;
  const Trajectory traj = simulate(spec.laplacian, AgentEnsemble(oracle::example_dynamics(), x0, oracle::example_input()), d, opts);
  double worst = 0.0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    const Vector zeta = disagreement(traj, k, tr).zeta;
    worst = std::max(worst, (dec.z[k] - zeta).norm() / zeta.norm());
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("property: decoupling suite passes at the predicted rate") {
  const std::vector<TrialOutcome> rows = run_decouple_suite(42, 100);
  REQUIRE(rows.size() == 100);
  for (const TrialOutcome& r : rows) {
    CAPTURE(r.seed);
    CHECK(r.hypothesis);
    CHECK(r.passed);
    CHECK(r.rate_tested == doctest::Approx(std::max(r.rho_stable, r.kappa * r.rho_star) + 0.03));
  }
}
