#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wignerkit/wigner.hpp"

using namespace wignerkit;

namespace {

constexpr double kTwoOverPi = 2.0 / kPi;

struct FockRef {
    int n;
    double s, x, y, value;
};

// Closed-form Fock-state W_s, evaluated in 30-digit arithmetic.
const FockRef kFockRefs[] = {
    {1, 0.0, 0.0, 0.0, -0.63661977236758134308},
    {1, -0.5, 0.5, 0.25, 0.062175647397580350859},
    {2, 0.0, 0.3, -0.4, -0.19306470526010782794},
    {3, 0.4, 0.7, 0.7, -1.4023976512510969796},
    {5, -0.9, 1.2, -0.3, 0.0031184612283288635077},
    {8, 0.0, 1.5, 1.0, 0.12476201984989203668},
    {4, 0.4, 0.0, 0.0, 31.451112622521876225},
};

}  // namespace

TEST(TraceForms, SpecExamples) {
    const FockDim dim(10);
    const auto vac = fock_state(0, dim);
    const auto one = fock_state(1, dim);
    EXPECT_NEAR(wigner_w1(vac, 0.0, 0.0), kTwoOverPi, 1e-15);
    EXPECT_NEAR(wigner_w2(vac, 0.0, 0.0), kTwoOverPi, 1e-15);
    EXPECT_NEAR(wigner_w3(vac, 0.0, 0.0), kTwoOverPi, 1e-15);
    EXPECT_NEAR(wigner_w1(one, 0.0, 0.0), -kTwoOverPi, 1e-15);
    EXPECT_NEAR(wigner_w3(one, 0.0, -0.5), -(2.0 / (kPi * 1.5)) * (0.5 / 1.5), 1e-15);
    EXPECT_NEAR(wigner_w1(thermal_state(1.0, FockDim(60)), 0.0, 0.0), 2.0 / (3.0 * kPi), 1e-12);
    EXPECT_NEAR(wigner_w2(coherent_state(1.0, FockDim(30)), 1.0, 0.0), kTwoOverPi, 1e-12);
    const auto cat = cat_state(2.0, 1, FockDim(30));
    const double c1 = wigner_w1(cat, 0.0, 0.0), c3 = wigner_w3(cat, 0.0, 0.0);
    EXPECT_GT(c3, 0.0);
    EXPECT_NEAR(c1, c3, 1e-9);
}

TEST(TraceForms, PreconditionErrors) {
    const auto vac = fock_state(0, FockDim(3));
    EXPECT_THROW(wigner_w1(vac, 0.0, 1.0), ValidationError);
    EXPECT_THROW(wigner_w2(vac, 0.0, -1.0), ValidationError);
    EXPECT_THROW(wigner_w2(vac, 0.0, 1.0), ValidationError);
    EXPECT_THROW(wigner_w3(vac, 0.0, -1.0), ValidationError);
    EXPECT_THROW(wigner_w3(vac, 0.0, 1.0), ValidationError);
    EXPECT_THROW(wigner_char(vac, 0.0, 1.0), ValidationError);
    EXPECT_NO_THROW(wigner_w1(vac, 0.0, -1.0));
}

TEST(TraceForms, FockStateClosedForm) {
    for (const auto& r : kFockRefs) {
        const auto rho = fock_state(r.n, FockDim(r.n + 4));
        const cplx a{r.x, r.y};
        const double tol = 1e-12 * std::max(1.0, std::abs(r.value));
        EXPECT_NEAR(wigner_w1(rho, a, r.s), r.value, tol) << "n=" << r.n << " s=" << r.s;
        EXPECT_NEAR(wigner_w2(rho, a, r.s), r.value, tol) << "n=" << r.n << " s=" << r.s;
        EXPECT_NEAR(wigner_w3(rho, a, r.s), r.value, tol) << "n=" << r.n << " s=" << r.s;
    }
}

TEST(TraceForms, GaussianStatesClosedForm) {
    const cplx beta{0.8, -0.6};
    const auto coh = coherent_state(beta, FockDim(40));
    const auto th = thermal_state(0.5, FockDim(80));
    // s = 0.3 keeps the thermal series sum_n (n/(n+1))^n ((1+s)/(1-s))^n convergent
    for (double s : {-0.9, -0.3, 0.0, 0.3})
        for (cplx a : {cplx(0.0, 0.0), cplx(1.1, 0.2), cplx(-0.7, -1.3)}) {
            const double wc = 2.0 / (kPi * (1.0 - s)) * std::exp(-2.0 * std::norm(a - beta) / (1.0 - s));
            const double wt = 2.0 / (kPi * (2.0 - s)) * std::exp(-2.0 * std::norm(a) / (2.0 - s));
            EXPECT_NEAR(wigner_w1(coh, a, s), wc, 1e-11);
            EXPECT_NEAR(wigner_w3(coh, a, s), wc, 1e-11);
            EXPECT_NEAR(wigner_w1(th, a, s), wt, 1e-11);
            EXPECT_NEAR(wigner_w2(th, a, s), wt, 1e-11);
        }
}

TEST(TraceForms, AgreeOnRandomStatesAndAreReal) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto rho = testsupport::random_density(10, seed);
        for (double s : {-0.9, -0.5, 0.0, 0.4})
            for (cplx a : {cplx(0.0, 0.0), cplx(1.0, -1.0), cplx(-2.0, 0.5), cplx(0.3, 1.9)}) {
                const cplx w1 = wigner_w1_complex(rho, a, s);
                const cplx w2 = wigner_w2_complex(rho, a, s);
                const cplx w3 = wigner_w3_complex(rho, a, s);
                EXPECT_NEAR(w1.real(), w3.real(), 1e-8);
                EXPECT_NEAR(w1.real(), w2.real(), 1e-8);
                EXPECT_LT(std::abs(w1.imag()), 1e-9);
                EXPECT_LT(std::abs(w2.imag()), 1e-9);
                EXPECT_LT(std::abs(w3.imag()), 1e-9);
            }
    }
}

TEST(TraceForms, OriginDiagonalFormula) {
    const auto rho = testsupport::random_density(12, 7);
    for (double s : {-0.9, -0.5, 0.0, 0.4, 0.8})
        EXPECT_NEAR(wigner_w1(rho, 0.0, s), wigner_origin_diagonal(rho, s),
                    1e-10 * std::max(1.0, std::abs(wigner_origin_diagonal(rho, s))));
}

TEST(Oracle, Examples) {
    EXPECT_NEAR(wigner_char(fock_state(0, FockDim(4)), 0.0, 0.0), kTwoOverPi, 1e-7);
    const auto f2 = fock_state(2, FockDim(6));
    EXPECT_NEAR(wigner_char(f2, 0.5, -0.5), wigner_w1(f2, 0.5, -0.5), 1e-6);
    const auto th = thermal_state(0.5, FockDim(60));
    EXPECT_NEAR(wigner_char(th, 0.0, -1.0), th(0, 0).real() / kPi, 1e-6);
}

TEST(Oracle, MatchesTraceFormOnRandomState) {
    const auto rho = testsupport::random_density(8, 11);
    for (double s : {-0.5, 0.0, 0.4}) {
        const CharacteristicOracle oracle(rho, s);
        for (cplx a : {cplx(0.2, -0.1), cplx(1.5, 1.0), cplx(-1.2, 0.7)})
            EXPECT_NEAR(oracle.evaluate(a), wigner_w1(rho, a, s), 1e-5);
    }
}

TEST(QFunction, Examples) {
    const FockDim dim(30);
    EXPECT_NEAR(q_function(fock_state(0, dim), 0.0), 1.0 / kPi, 1e-15);
    const cplx beta{1.0, 0.5};
    const cplx a{0.2, -0.3};
    EXPECT_NEAR(q_function(coherent_state(beta, dim), a), std::exp(-std::norm(a - beta)) / kPi, 1e-13);
    EXPECT_NEAR(q_function(fock_state(1, dim), 0.0), 0.0, 1e-16);
}

TEST(QFunction, EqualsW1AtMinusOne) {
    const auto rho = testsupport::random_density(10, 5);
    for (cplx a : {cplx(0.0, 0.0), cplx(0.5, 1.5), cplx(-1.8, -0.4)})
        EXPECT_NEAR(wigner_w1(rho, a, -1.0), q_function(rho, a), 1e-10);
}

TEST(ParityForm, EqualsWignerAtZero) {
    const auto rho = testsupport::random_density(10, 6);
    for (cplx a : {cplx(0.0, 0.0), cplx(0.5, 1.5), cplx(-1.8, -0.4)})
        EXPECT_NEAR(wigner_w1(rho, a, 0.0), wigner_parity_form(rho, a), 1e-10);
}

TEST(Methods, ParseAndDispatch) {
    EXPECT_EQ(parse_method("w2"), WignerMethod::W2);
    EXPECT_THROW(parse_method("w4"), ValidationError);
    EXPECT_EQ(resolve_auto(0.0), WignerMethod::W1);
    EXPECT_EQ(resolve_auto(-0.5), WignerMethod::W1);
    EXPECT_EQ(resolve_auto(0.3), WignerMethod::W3);
}

TEST(FieldOnGrid, Examples) {
    const auto grid = PhaseSpaceGrid::square(-3.0, 3.0, 41);
    const auto vac = field_on_grid(fock_state(0, FockDim(6)), grid, 0.0);
    EXPECT_EQ(vac.method, "auto:w1");
    EXPECT_NEAR(vac.mass(), 1.0, 1e-3);
    const auto one = field_on_grid(fock_state(1, FockDim(6)), grid, 0.0);
    EXPECT_NEAR(one.values.minCoeff(), -kTwoOverPi, 1e-14);
    EXPECT_NEAR(one.values(20, 20), -kTwoOverPi, 1e-14);
    EXPECT_THROW(field_on_grid(fock_state(0, FockDim(6)), grid, -1.0, WignerMethod::W2), ValidationError);
    EXPECT_THROW(field_on_grid(fock_state(0, FockDim(6)), grid, 0.995), ValidationError);
    EXPECT_EQ(field_on_grid(fock_state(0, FockDim(6)), grid, 0.5).method, "auto:w3");
}

TEST(FieldOnGrid, NormalizationAcrossOrderings) {
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 61);
    const auto rho = testsupport::random_density(4, 9);
    for (double s : {-1.0, -0.5, 0.0, 0.5}) EXPECT_NEAR(field_on_grid(rho, grid, s).mass(), 1.0, 1e-3);
}

TEST(FieldOnGrid, ThreadCountDoesNotChangeValues) {
    const auto grid = PhaseSpaceGrid::square(-2.0, 2.0, 21);
    const auto rho = testsupport::random_density(6, 2);
    FieldOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = field_on_grid(rho, grid, -0.3, WignerMethod::W2, one);
    const auto b = field_on_grid(rho, grid, -0.3, WignerMethod::W2, four);
    EXPECT_TRUE((a.values.array() == b.values.array()).all());
}

TEST(Convolution, ZeroToQ) {
    const auto grid = PhaseSpaceGrid::square(-6.0, 6.0, 121);
    const auto rho = fock_state(1, FockDim(6));
    const auto w0 = field_on_grid(rho, grid, 0.0);
    const auto conv = s_convolve(w0, -1.0);
    EXPECT_LT(conv.leakage, 1e-6);
    double maxdiff = 0.0;
    for (int i = 20; i < 101; ++i)
        for (int j = 20; j < 101; ++j)
            maxdiff = std::max(maxdiff, std::abs(conv.field.values(i, j) - q_function(rho, grid.node(i, j))));
    EXPECT_LT(maxdiff, 1e-4);
    EXPECT_GT(conv.field.values.minCoeff(), -1e-6);
    EXPECT_THROW(s_convolve(w0, 0.0), ValidationError);
    EXPECT_THROW(s_convolve(w0, 0.2), ValidationError);
}

TEST(Convolution, Semigroup) {
    const auto grid = PhaseSpaceGrid::square(-6.0, 6.0, 121);
    const auto w0 = field_on_grid(testsupport::random_density(4, 3), grid, 0.0);
    const auto direct = s_convolve(w0, -1.0).field;
    const auto twostep = s_convolve(s_convolve(w0, -0.4).field, -1.0).field;
    EXPECT_LT((direct.values - twostep.values).block(20, 20, 81, 81).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Moments, Examples) {
    const auto grid = PhaseSpaceGrid::square(-6.0, 6.0, 121);
    const auto vac = fock_state(0, FockDim(4));
    for (double s : {-1.0, -0.5, 0.0}) {
        const auto f = field_on_grid(vac, grid, s);
        EXPECT_NEAR(expectation_s(f, 0, 0).real(), 1.0, 1e-6);
        EXPECT_NEAR(expectation_s(f, 1, 1).real(), (1.0 - s) / 2.0, 1e-4);
    }
    const cplx beta{0.8, -0.4};
    const auto coh = coherent_state(beta, FockDim(30));
    for (double s : {-1.0, 0.0, 0.5}) {
        const cplx m = expectation_s(field_on_grid(coh, grid, s), 0, 1);
        EXPECT_LT(std::abs(m - beta), 1e-6);
    }
    EXPECT_THROW(expectation_s(field_on_grid(vac, grid, 0.0), -1, 0), ValidationError);
}

TEST(Marginal, VacuumAndOneMatchHermiteFunctions) {
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 128);
    const auto pv = [](double x) { return std::sqrt(2.0 / kPi) * std::exp(-2.0 * x * x); };
    const auto p1 = [&](double x) { return 4.0 * x * x * pv(x); };
    const auto mv = marginal(field_on_grid(fock_state(0, FockDim(4)), grid, 0.0), 0.0);
    const auto m1 = marginal(field_on_grid(fock_state(1, FockDim(4)), grid, 0.0), 0.7);
    for (std::size_t i = 0; i < mv.x.size(); ++i) {
        EXPECT_NEAR(mv.p[i], pv(mv.x[i]), 1e-4);
        EXPECT_NEAR(m1.p[i], p1(m1.x[i]), 1e-4);
    }
}

TEST(Marginal, RotationInvariantForVacuum) {
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 101);
    const auto f = field_on_grid(fock_state(0, FockDim(4)), grid, 0.0);
    const auto a = marginal(f, 0.0);
    const auto b = marginal(f, kPi / 3.0);
    for (std::size_t i = 0; i < a.p.size(); ++i) EXPECT_NEAR(a.p[i], b.p[i], 1e-6);
}

TEST(Marginal, OneVanishesAtOrigin) {
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 101);
    const auto m = marginal(field_on_grid(fock_state(1, FockDim(4)), grid, 0.0), 0.0);
    EXPECT_NEAR(m.p[50], 0.0, 1e-8);
}

TEST(Marginal, Preconditions) {
    const auto grid = PhaseSpaceGrid::square(-5.0, 5.0, 65);
    const auto f = field_on_grid(fock_state(0, FockDim(4)), grid, -0.5);
    EXPECT_THROW(marginal(f, 0.0), ValidationError);
    const auto off = field_on_grid(fock_state(0, FockDim(4)), PhaseSpaceGrid(-4.0, 5.0, 65, -5.0, 5.0, 65), 0.0);
    EXPECT_THROW(marginal(off, 0.0), ValidationError);
}
