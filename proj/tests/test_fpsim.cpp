#include <gtest/gtest.h>

#include <cmath>

#include "wignerkit/fpsim.hpp"
#include "wignerkit/master_equation.hpp"
#include "wignerkit/wigner.hpp"

using namespace wignerkit;

namespace {

const char* kDamped =
    "-(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad) - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)";

FpSpec damped_fp() { return extract_fp(compile_generator(parse_master_equation(kDamped))); }

OuParams ou(double gamma, double nbar, double s) {
    OuParams p;
    p.gamma = gamma;
    p.nbar = nbar;
    p.s = s;
    return p;
}

}  // namespace

TEST(Philox, KnownAnswers) {
    EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (Philox4x32{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (Philox4x32{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (Philox4x32{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, GaussianPairMoments) {
    NeumaierSum m1, m2, c12;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = gaussian_pair(99, static_cast<std::uint64_t>(i), 3, StreamPurpose::Step);
        m1.add(a);
        m2.add(a * a + b * b);
        c12.add(a * b);
    }
    EXPECT_LT(std::abs(m1.value() / n), 4.0 / std::sqrt(double(n)));
    EXPECT_NEAR(m2.value() / (2.0 * n), 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_LT(std::abs(c12.value() / n), 4.0 / std::sqrt(double(n)));
    // streams differ by purpose and step
    EXPECT_NE(gaussian_pair(1, 0, 0, StreamPurpose::Init), gaussian_pair(1, 0, 0, StreamPurpose::Step));
    EXPECT_NE(gaussian_pair(1, 0, 1, StreamPurpose::Step), gaussian_pair(1, 0, 2, StreamPurpose::Step));
}

TEST(RealizeSde, DampedOscillatorExamples) {
    const FpSpec fp = damped_fp();
    const OuParams p = realize_sde(fp, {{"g", 1.0}, {"N", 0.0}, {"s", 0.0}});
    EXPECT_NEAR(p.gamma / 2.0, 0.5, 1e-15);
    EXPECT_NEAR(p.axis_diffusion(), 1.0 / 8.0, 1e-15);
    EXPECT_NEAR(p.stationary_variance(), 0.25, 1e-15);
    EXPECT_NEAR(p.nbar, 0.0, 1e-15);
    EXPECT_EQ(p.omega, 0.0);
    const OuParams p1 = realize_sde(fp, {{"g", 1.0}, {"N", 1.0}, {"s", 0.0}});
    EXPECT_NEAR(p1.axis_diffusion(), 3.0 / 8.0, 1e-15);
    EXPECT_NEAR(p1.nbar, 1.0, 1e-15);
    const OuParams p2 = realize_sde(fp, {{"g", 0.3}, {"N", 2.0}, {"s", -0.5}});
    EXPECT_NEAR(p2.gamma, 0.3, 1e-15);
    EXPECT_NEAR(p2.nbar, 2.0, 1e-13);
    EXPECT_NEAR(p2.s, -0.5, 0.0);
}

TEST(RealizeSde, Rejections) {
    const FpSpec fp = damped_fp();
    EXPECT_THROW(realize_sde(fp, {{"g", 1.0}, {"N", 0.5}, {"s", 2.0}}), ValidationError);  // s = 2N+1
    EXPECT_THROW(realize_sde(fp, {{"g", 1.0}, {"N", 0.0}, {"s", 1.5}}), ValidationError);
    EXPECT_THROW(realize_sde(fp, {{"g", 1.0}, {"N", 0.0}}), ValidationError);
    EXPECT_THROW(realize_sde(fp, {{"g", -1.0}, {"N", 0.0}, {"s", 0.0}}), ValidationError);
    const FpSpec two = extract_fp(
        compile_generator(parse_master_equation("a^2*rho*ad^2 - (ad^2*a^2*rho + rho*ad^2*a^2)/2")));
    EXPECT_THROW(realize_sde(two, {{"s", 0.0}}), ValidationError);
    const FpSpec rot = extract_fp(compile_generator(parse_master_equation("-i*(ad*a*rho - rho*ad*a)")));
    EXPECT_THROW(realize_sde(rot, {{"s", 0.0}}), ValidationError);  // no damping, no diffusion
}

TEST(RealizeSde, DampingWithRotation) {
    const FpSpec fp = extract_fp(compile_generator(parse_master_equation(
        "-i*w*(ad*a*rho - rho*ad*a) + g*(a*rho*ad - (ad*a*rho + rho*ad*a)/2)")));
    const OuParams p = realize_sde(fp, {{"g", 0.4}, {"w", 2.0}, {"s", -0.2}});
    EXPECT_NEAR(p.gamma, 0.4, 1e-15);
    EXPECT_NEAR(p.omega, 2.0, 1e-15);
    EXPECT_NEAR(p.nbar, 0.0, 1e-15);
}

TEST(ExactGaussian, Examples) {
    GaussianMoments g{2.0, Eigen::Matrix2d::Identity() * 0.25};
    const auto out = evolve_exact_gaussian(g, ou(1.0, 0.0, 0.0), 1.0);
    EXPECT_NEAR(out.mean.real(), 2.0 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(out.mean.imag(), 0.0, 1e-15);
    EXPECT_LT((out.cov - g.cov).cwiseAbs().maxCoeff(), 1e-15);
    const auto same = evolve_exact_gaussian(g, ou(1.0, 0.0, 0.0), 0.0);
    EXPECT_EQ(same.mean, g.mean);
    EXPECT_LT((same.cov - g.cov).cwiseAbs().maxCoeff(), 1e-16);
    const auto late = evolve_exact_gaussian(g, ou(1.0, 1.0, 0.0), 60.0);
    EXPECT_LT((late.cov - 0.75 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(evolve_exact_gaussian(g, ou(1.0, 0.0, 0.0), -1.0), ValidationError);
}

TEST(ExactGaussian, SemigroupAndRotation) {
    OuParams p = ou(0.7, 0.3, -0.4);
    p.omega = 1.3;
    Eigen::Matrix2d c;
    c << 0.4, 0.1, 0.1, 0.2;
    const GaussianMoments g{{0.5, -1.0}, c};
    const auto once = evolve_exact_gaussian(g, p, 1.7);
    const auto twice = evolve_exact_gaussian(evolve_exact_gaussian(g, p, 0.5), p, 1.2);
    EXPECT_LT(std::abs(once.mean - twice.mean), 1e-14);
    EXPECT_LT((once.cov - twice.cov).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(std::abs(once.mean - g.mean * std::exp(-cplx(0.35, 1.3) * 1.7)), 1e-14);
}

TEST(Simulate, ZeroStepsLeaveEnsembleUnchanged) {
    const auto e = sample_initial(parse_initial_law("thermal:1", 0.0), 100, 0.0, 5);
    const auto out = simulate(e, ou(1.0, 0.0, 0.0), 0.1, 0, Scheme::ExactGaussian);
    EXPECT_EQ(out.samples, e.samples);
    EXPECT_EQ(out.weights, e.weights);
    EXPECT_EQ(out.time, 0.0);
}

TEST(Simulate, DeltaMeanDecay) {
    const std::size_t n = 100000;
    const auto e = sample_initial(parse_initial_law("delta:2,0", 0.0), n, 0.0, 11);
    const auto out = simulate(e, ou(1.0, 0.0, 0.0), 0.1, 10, Scheme::ExactGaussian);
    EXPECT_NEAR(out.time, 1.0, 1e-12);
    const auto m = ensemble_moments(out);
    EXPECT_NEAR(m.mean.real(), 2.0 * std::exp(-0.5), 3.0 * 0.5 / std::sqrt(double(n)));
    EXPECT_NEAR(m.mean.imag(), 0.0, 3.0 * 0.5 / std::sqrt(double(n)));
    EXPECT_NEAR(m.mean.real(), 1.213, 3.0 * m.mean_stderr.real() + 5e-4);
}

TEST(Simulate, MeanDecayAcrossSeeds) {
    const OuParams p = ou(1.0, 0.5, 0.0);
    const double expect = 1.5 * std::exp(-p.gamma * 0.8 / 2.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto e = sample_initial(parse_initial_law("coherent:1.5,0", 0.0), 20000, 0.0, seed);
        const auto m = ensemble_moments(simulate(e, p, 0.2, 4, Scheme::ExactGaussian));
        EXPECT_LE(std::abs(m.mean.real() - expect), 3.0 * m.mean_stderr.real()) << "seed " << seed;
    }
}

TEST(Simulate, StationaryVariance) {
    const std::size_t n = 100000;
    for (auto [nbar, s] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {1.0, 0.5}}) {
        const OuParams p = ou(1.0, nbar, s);
        const auto e = sample_initial(parse_initial_law("delta:1,-1", s), n, s, 17);
        const auto m = ensemble_moments(simulate(e, p, 1.0, 30, Scheme::ExactGaussian));
        const double v = (2.0 * nbar + 1.0 - s) / 4.0;
        EXPECT_LE(std::abs(m.cov(0, 0) - v), 3.0 * m.var_stderr(0)) << nbar << " " << s;
        EXPECT_LE(std::abs(m.cov(1, 1) - v), 3.0 * m.var_stderr(1)) << nbar << " " << s;
    }
}

TEST(Simulate, EulerMaruyamaMatchesExact) {
    const std::size_t n = 100000;
    const OuParams p = ou(1.0, 1.0, 0.0);
    const auto e = sample_initial(parse_initial_law("coherent:1,0.5", 0.0), n, 0.0, 23);
    const auto em = ensemble_moments(simulate(e, p, 0.01, 100, Scheme::EulerMaruyama));
    const auto exact = evolve_exact_gaussian({{1.0, 0.5}, Eigen::Matrix2d::Identity() * 0.25}, p, 1.0);
    // first-order weak bias of the scheme: |1 - gamma dt / 2 - e^{-gamma dt / 2}| per step
    const double bias = 1.0 * 0.01 * 0.5;
    EXPECT_LE(std::abs(em.mean.real() - exact.mean.real()), 3.0 * em.mean_stderr.real() + bias);
    EXPECT_LE(std::abs(em.mean.imag() - exact.mean.imag()), 3.0 * em.mean_stderr.imag() + bias);
    EXPECT_LE(std::abs(em.cov(0, 0) - exact.cov(0, 0)), 3.0 * em.var_stderr(0) + bias);
    EXPECT_LE(std::abs(em.cov(1, 1) - exact.cov(1, 1)), 3.0 * em.var_stderr(1) + bias);
}

TEST(Simulate, Preconditions) {
    const auto e = sample_initial(parse_initial_law("vacuum", 0.0), 10, 0.0, 1);
    EXPECT_THROW(simulate(e, ou(1.0, 0.0, 0.0), 0.0, 1, Scheme::ExactGaussian), ValidationError);
    EXPECT_THROW(simulate(e, ou(1.0, 0.0, 0.0), 0.2, 1, Scheme::EulerMaruyama), ValidationError);
    EXPECT_NO_THROW(simulate(e, ou(1.0, 0.0, 0.0), 0.1, 1, Scheme::EulerMaruyama));
    EXPECT_NO_THROW(simulate(e, ou(1.0, 0.0, 0.0), 5.0, 1, Scheme::ExactGaussian));
    EXPECT_THROW(simulate(e, ou(1.0, 0.0, 1.0), 0.1, 1, Scheme::ExactGaussian), ValidationError);
    TrajectoryEnsemble bad = e;
    bad.weights[0] = 0.5;
    EXPECT_THROW(simulate(bad, ou(1.0, 0.0, 0.0), 0.1, 1, Scheme::ExactGaussian), ValidationError);
    EXPECT_THROW(parse_scheme("rk4"), ValidationError);
    EXPECT_EQ(parse_scheme("exact-gaussian-step"), Scheme::ExactGaussian);
    EXPECT_EQ(parse_scheme("euler-maruyama"), Scheme::EulerMaruyama);
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
    const auto e = sample_initial(parse_initial_law("thermal:0.5", 0.0), 5000, 0.0, 77, 1);
    const auto e3 = sample_initial(parse_initial_law("thermal:0.5", 0.0), 5000, 0.0, 77, 3);
    EXPECT_EQ(e.samples, e3.samples);
    const OuParams p = ou(1.0, 0.5, 0.0);
    const auto a = simulate(e, p, 0.05, 40, Scheme::EulerMaruyama, 1);
    const auto b = simulate(e, p, 0.05, 40, Scheme::EulerMaruyama, 4);
    EXPECT_EQ(a.samples, b.samples);
    // split runs continue the same streams
    const auto c = simulate(simulate(e, p, 0.05, 15, Scheme::EulerMaruyama, 2), p, 0.05, 25, Scheme::EulerMaruyama, 3);
    EXPECT_EQ(a.samples, c.samples);
    const auto grid = PhaseSpaceGrid::square(-3.0, 3.0, 31);
    const auto fa = estimate_field(a, grid, 0.2, 1);
    const auto fb = estimate_field(a, grid, 0.2, 4);
    EXPECT_TRUE((fa.values.array() == fb.values.array()).all());
}

TEST(InitialLaw, ParsingAndErrors) {
    EXPECT_EQ(parse_initial_law("delta:0.5,-1", 0.0).variance, 0.0);
    EXPECT_EQ(parse_initial_law("delta:0.5,-1", 0.0).mean, cplx(0.5, -1.0));
    EXPECT_DOUBLE_EQ(parse_initial_law("vacuum", -1.0).variance, 0.5);
    EXPECT_DOUBLE_EQ(parse_initial_law("thermal:1", 0.5).variance, 0.625);
    EXPECT_THROW(parse_initial_law("coherent:1", 0.0), ValidationError);
    EXPECT_THROW(parse_initial_law("coherent:1,x", 0.0), ValidationError);
    EXPECT_THROW(parse_initial_law("fock:1", 0.0), ValidationError);
    EXPECT_THROW(parse_initial_law("vacuum", 1.0), ValidationError);
    EXPECT_THROW(parse_initial_law("thermal:-1", 0.0), ValidationError);
    EXPECT_THROW(sample_initial(parse_initial_law("vacuum", 0.0), 0, 0.0, 1), ValidationError);
}

TEST(EstimateField, SingleSampleHasUnitMass) {
    TrajectoryEnsemble e;
    e.samples = {{0.3, -0.2}};
    e.weights = {1.0};
    const auto grid = PhaseSpaceGrid::square(-3.0, 3.0, 121);
    const auto f = estimate_field(e, grid, 0.25);
    EXPECT_NEAR(f.mass(), 1.0, 1e-10);
    int i = 0, j = 0;
    f.values.maxCoeff(&i, &j);
    EXPECT_NEAR(std::abs(grid.node(i, j) - cplx(0.3, -0.2)), 0.0, 1e-12);
    EXPECT_THROW(estimate_field(e, grid, 0.0), ValidationError);
    EXPECT_THROW(estimate_field(TrajectoryEnsemble{}, grid, 0.1), ValidationError);
}

TEST(EstimateField, VacuumKde) {
    const auto e = sample_initial(parse_initial_law("vacuum", 0.0), 1000000, 0.0, 2024);
    const auto grid = PhaseSpaceGrid::square(-2.5, 2.5, 51);
    const auto f = estimate_field(e, grid, 0.05);
    EXPECT_EQ(f.s, 0.0);
    const auto exact = gaussian_field(grid, 0.0, 0.0, 0.25);
    EXPECT_LE((f.values - exact.values).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Reconstruct, EquilibriumPhotonNumber) {
    const OuParams p = ou(1.0, 1.0, 0.0);
    const auto e = simulate(sample_initial(parse_initial_law("vacuum", 0.0), 100000, 0.0, 8), p, 1.0, 25,
                            Scheme::ExactGaussian);
    const FockDim dim(25);
    const auto est = estimate_expectation(e.as_samples(), 0.0, dim, number_operator(dim).matrix());
    EXPECT_LE(std::abs(est.mean - 1.0), 3.0 * est.stderr_value);
    const auto r = reconstruct(e, 0.0, FockDim(6));
    // geometric populations nbar^n / (nbar+1)^{n+1}
    for (int n = 0; n <= 3; ++n)
        EXPECT_LE(std::abs(r.rho(n, n).real() - std::pow(0.5, n + 1)), 3.0 * r.stderr_entries(n, n) + 1e-3) << n;
}

TEST(Reconstruct, CoherentStaysCoherent) {
    const OuParams p = ou(1.0, 0.0, 0.0);
    const auto e = simulate(sample_initial(parse_initial_law("coherent:1,0", 0.0), 200000, 0.0, 4), p, 0.5, 4,
                            Scheme::ExactGaussian);
    const FockDim dim(8);
    const auto r = reconstruct(e, 0.0, dim);
    const CVector target = coherent_amplitudes(std::exp(-1.0), dim).normalized();
    EXPECT_GE(fidelity_with_pure(r.rho, target), 0.99);
}

TEST(Reconstruct, Errors) {
    const auto e = sample_initial(parse_initial_law("vacuum", 0.0), 10, 0.0, 1);
    EXPECT_THROW(reconstruct(e, -0.5, FockDim(3)), ValidationError);
    EXPECT_THROW(reconstruct(TrajectoryEnsemble{}, 0.0, FockDim(3)), ValidationError);
}

TEST(Reconstruct, AgreesWithAnalyticFieldInversion) {
    const double s = -0.3;
    const OuParams p = ou(1.0, 0.5, s);
    const auto e0 = sample_initial(parse_initial_law("coherent:0.8,-0.4", s), 200000, s, 12);
    const auto e = simulate(e0, p, 0.3, 2, Scheme::ExactGaussian);
    const auto g = evolve_exact_gaussian({{0.8, -0.4}, Eigen::Matrix2d::Identity() * ((1.0 - s) / 4.0)}, p, 0.6);
    ASSERT_LT(std::abs(g.cov(0, 1)), 1e-15);
    ASSERT_LT(std::abs(g.cov(0, 0) - g.cov(1, 1)), 1e-15);
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 101);
    const FockDim dim(5);
    const auto analytic = rho_from_field(gaussian_field(grid, s, g.mean, g.cov(0, 0)), dim);
    const auto mc = reconstruct(e, s, dim);
    for (int r = 0; r <= 5; ++r)
        for (int c = 0; c <= 5; ++c)
            EXPECT_LE(std::abs(mc.rho(r, c) - analytic.rho(r, c)), 4.0 * mc.stderr_entries(r, c) + 1e-6)
                << r << "," << c;
}
