#pragma once

// Stochastic simulation of linear-drift, constant-diffusion Fokker-Planck
// equations for W_s:
//
//   d_t W = [k d_a a + conj(k) d_ac ac + D d_a d_ac] W
//
// With a = x + i y, d_a d_ac = (d_xx + d_yy)/4, so each quadrature follows an
// Ornstein-Uhlenbeck process dx = -(gamma/2) x dt + sqrt(2 D/4) dB, rotated by
// omega = Im k, where gamma = 2 Re k.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wignerkit/diffform.hpp"
#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/inversion.hpp"
#include "wignerkit/numeric.hpp"
#include "wignerkit/rng.hpp"

namespace wignerkit {

struct OuParams {
    double gamma = 1.0;  ///< damping rate
    double nbar = 0.0;   ///< thermal occupation
    double s = 0.0;      ///< ordering of the simulated quasi-probability
    double omega = 0.0;  ///< rotation frequency (a -> a e^{-i omega t})

    /// Coefficient of d_a d_ac: gamma (2 nbar + 1 - s) / 2.
    double diffusion() const { return gamma * (2.0 * nbar + 1.0 - s) / 2.0; }
    /// Diffusion constant of each real quadrature.
    double axis_diffusion() const { return diffusion() / 4.0; }
    /// Stationary variance of each real quadrature.
    double stationary_variance() const { return (2.0 * nbar + 1.0 - s) / 4.0; }

    void validate() const {
        require(gamma > 0.0 && std::isfinite(gamma), "OuParams: gamma must be positive");
        require(nbar >= 0.0, "OuParams: nbar must be non-negative");
        if (!(diffusion() > 0.0))
            throw ValidationError("OuParams: diffusion coefficient gamma(2nbar+1-s)/2 must be positive (s < 2nbar+1)");
    }
};

/// Reads an OU process from the Fokker-Planck content of a compiled generator.
/// `bindings` must give every parameter and the ordering `s`.
inline OuParams realize_sde(const FpSpec& fp, const std::map<std::string, cplx>& bindings) {
    if (!fp.residual_terms.empty()) throw ValidationError("realize_sde: derivative terms of order > 2 cannot be simulated");
    if (!fp.other_terms.empty()) throw ValidationError("realize_sde: drift/diffusion terms outside the linear-drift form");
    if (!fp.zero_order_terms.empty()) throw ValidationError("realize_sde: generator is not trace preserving");
    auto it = bindings.find("s");
    if (it == bindings.end()) throw ValidationError("realize_sde: ordering parameter s must be bound");
    const double s = it->second.real();
    const cplx ka = fp.drift_alpha.evaluate(bindings);
    const cplx kc = fp.drift_conj.evaluate(bindings);
    const cplx dc = fp.diffusion.evaluate(bindings);
    const double tol = 1e-12 * std::max(1.0, std::abs(ka));
    if (std::abs(ka - std::conj(kc)) > tol) throw ValidationError("realize_sde: drift coefficients are not conjugate");
    if (std::abs(dc.imag()) > 1e-12 * std::max(1.0, std::abs(dc)))
        throw ValidationError("realize_sde: diffusion coefficient is not real");
    if (!(ka.real() > 0.0)) throw ValidationError("realize_sde: drift must be damping (Re > 0)");
    if (!(dc.real() > 0.0)) throw ValidationError("realize_sde: diffusion coefficient must be positive");
    OuParams p;
    p.gamma = 2.0 * ka.real();
    p.omega = ka.imag();
    p.s = s;
    p.nbar = (2.0 * dc.real() / p.gamma - 1.0 + s) / 2.0;
    if (p.nbar < 0.0 && p.nbar > -1e-12) p.nbar = 0.0;
    p.validate();
    return p;
}

struct GaussianMoments {
    cplx mean;
    Eigen::Matrix2d cov;  ///< of (x, y)
};

/// Exact OU transition of a Gaussian law over time t.
inline GaussianMoments evolve_exact_gaussian(const GaussianMoments& g, const OuParams& p, double t) {
    require(t >= 0.0, "evolve_exact_gaussian: t must be non-negative");
    p.validate();
    const double decay = std::exp(-p.gamma * t / 2.0);
    const double th = -p.omega * t;
    Eigen::Matrix2d rot;
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    GaussianMoments out;
    out.mean = g.mean * std::polar(decay, th);
    const double relax = -std::expm1(-p.gamma * t);
    out.cov = decay * decay * (rot * g.cov * rot.transpose()) +
              p.stationary_variance() * relax * Eigen::Matrix2d::Identity();
    return out;
}

enum class Scheme { EulerMaruyama, ExactGaussian };

inline std::string to_string(Scheme s) { return s == Scheme::EulerMaruyama ? "euler-maruyama" : "exact-gaussian-step"; }

inline Scheme parse_scheme(const std::string& name) {
    if (name == "euler-maruyama" || name == "em") return Scheme::EulerMaruyama;
    if (name == "exact-gaussian-step" || name == "exact") return Scheme::ExactGaussian;
    throw ValidationError("unknown scheme '" + name + "'");
}

struct TrajectoryEnsemble {
    std::vector<cplx> samples;
    std::vector<double> weights;  ///< sum to 1
    double time = 0.0;
    double s = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t steps_taken = 0;  ///< offsets the step counter of later runs
    std::string scheme = "none";
    double dt = 0.0;

    std::size_t size() const { return samples.size(); }

    void validate() const {
        require(!samples.empty(), "TrajectoryEnsemble: empty ensemble");
        require(weights.size() == samples.size(), "TrajectoryEnsemble: weight count mismatch");
        NeumaierSum tot;
        for (double w : weights) {
            require(w >= 0.0 && std::isfinite(w), "TrajectoryEnsemble: negative or non-finite weight");
            tot.add(w);
        }
        require(std::abs(tot.value() - 1.0) <= 1e-12, "TrajectoryEnsemble: weights must sum to 1");
    }

    WeightedSamples as_samples() const { return {samples, weights}; }
};

// ---------------------------------------------------------------------------
// Initial ensembles

/// Gaussian initial law for W_s: `delta` (point mass), or the exact W_s of a
/// coherent / thermal state (isotropic variance (2 nbar + 1 - s)/4).
struct InitialLaw {
    cplx mean{};
    double variance = 0.0;  ///< per quadrature
    std::string description;
};

inline InitialLaw parse_initial_law(const std::string& spec, double s) {
    auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto numbers = [&](std::size_t expected) {
        std::vector<double> v;
        std::size_t pos = 0;
        while (pos < args.size()) {
            std::size_t next = args.find(',', pos);
            if (next == std::string::npos) next = args.size();
            try {
                std::size_t used = 0;
                const std::string tok = args.substr(pos, next - pos);
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError("initial state '" + spec + "': malformed number");
            }
            pos = next + 1;
        }
        if (v.size() != expected) throw ValidationError("initial state '" + spec + "': wrong argument count");
        return v;
    };
    InitialLaw law;
    law.description = spec;
    if (kind == "delta") {
        const auto v = numbers(2);
        law.mean = {v[0], v[1]};
    } else if (kind == "coherent") {
        const auto v = numbers(2);
        law.mean = {v[0], v[1]};
        law.variance = (1.0 - s) / 4.0;
    } else if (kind == "vacuum") {
        numbers(0);
        law.variance = (1.0 - s) / 4.0;
    } else if (kind == "thermal") {
        const auto v = numbers(1);
        require(v[0] >= 0.0, "initial state: nbar must be non-negative");
        law.variance = (2.0 * v[0] + 1.0 - s) / 4.0;
    } else {
        throw ValidationError("unknown initial state kind '" + kind + "' (delta, coherent, vacuum, thermal)");
    }
    if (kind != "delta" && !(law.variance > 0.0))
        throw ValidationError("initial state: W_s is not a positive Gaussian at this s");
    return law;
}

inline TrajectoryEnsemble sample_initial(const InitialLaw& law, std::size_t n, double s, std::uint64_t seed,
                                         int threads = 0) {
    require(n >= 1, "sample_initial: need at least one trajectory");
    TrajectoryEnsemble e;
    e.samples.resize(n);
    e.weights.assign(n, 1.0 / static_cast<double>(n));
    e.s = s;
    e.seed = seed;
    const double sd = std::sqrt(law.variance);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        if (sd == 0.0) {
            e.samples[i] = law.mean;
            return;
        }
        const auto [g1, g2] = gaussian_pair(seed, i, 0, StreamPurpose::Init);
        e.samples[i] = law.mean + sd * cplx(g1, g2);
    });
    return e;
}

// ---------------------------------------------------------------------------
// Time stepping

inline TrajectoryEnsemble simulate(const TrajectoryEnsemble& in, const OuParams& p, double dt, std::uint64_t n_steps,
                                   Scheme scheme, int threads = 0) {
    in.validate();
    p.validate();
    require(dt > 0.0 && std::isfinite(dt), "simulate: dt must be positive");
    if (scheme == Scheme::EulerMaruyama && p.gamma * dt > 0.1)
        throw ValidationError("simulate: euler-maruyama requires gamma*dt <= 0.1");
    if (in.steps_taken + n_steps > 0xFFFFFFFFull) throw ValidationError("simulate: step counter exhausted");
    TrajectoryEnsemble out = in;
    if (n_steps == 0) return out;
    const cplx kappa{p.gamma / 2.0, p.omega};
    const cplx prop = std::exp(-kappa * dt);
    const double exact_sd = std::sqrt(p.stationary_variance() * -std::expm1(-p.gamma * dt));
    const double em_sd = std::sqrt(2.0 * p.axis_diffusion() * dt);
    const std::uint64_t seed = in.seed;
    const std::uint64_t offset = in.steps_taken;
    parallel_for(out.size(), resolve_threads(threads), [&](std::size_t i) {
        cplx a = out.samples[i];
        for (std::uint64_t k = 0; k < n_steps; ++k) {
            const auto [g1, g2] =
                gaussian_pair(seed, i, static_cast<std::uint32_t>(offset + k + 1), StreamPurpose::Step);
            if (scheme == Scheme::ExactGaussian)
                a = a * prop + exact_sd * cplx(g1, g2);
            else
                a = a - kappa * a * dt + em_sd * cplx(g1, g2);
        }
        out.samples[i] = a;
    });
    out.time = in.time + static_cast<double>(n_steps) * dt;
    out.steps_taken = in.steps_taken + n_steps;
    out.scheme = to_string(scheme);
    out.dt = dt;
    return out;
}

struct EnsembleMoments {
    cplx mean;
    cplx mean_stderr;  ///< per component
    Eigen::Matrix2d cov;
    Eigen::Vector2d var_stderr;
};

/// Weighted sample moments with standard errors (normal-theory for variances).
inline EnsembleMoments ensemble_moments(const TrajectoryEnsemble& e) {
    e.validate();
    NeumaierSum mx, my;
    double w2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        mx.add(e.weights[i] * e.samples[i].real());
        my.add(e.weights[i] * e.samples[i].imag());
        w2 += e.weights[i] * e.weights[i];
    }
    const cplx mean{mx.value(), my.value()};
    NeumaierSum cxx, cyy, cxy, kx, ky;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double dx = e.samples[i].real() - mean.real();
        const double dy = e.samples[i].imag() - mean.imag();
        cxx.add(e.weights[i] * dx * dx);
        cyy.add(e.weights[i] * dy * dy);
        cxy.add(e.weights[i] * dx * dy);
        kx.add(e.weights[i] * dx * dx * dx * dx);
        ky.add(e.weights[i] * dy * dy * dy * dy);
    }
    const double corr = w2 < 1.0 ? 1.0 / (1.0 - w2) : 1.0;
    EnsembleMoments m;
    m.mean = mean;
    m.cov << cxx.value() * corr, cxy.value() * corr, cxy.value() * corr, cyy.value() * corr;
    m.mean_stderr = {std::sqrt(m.cov(0, 0) * w2), std::sqrt(m.cov(1, 1) * w2)};
    // Var of the sample variance ~ (m4 - sigma^4) * sum w^2
    m.var_stderr << std::sqrt(std::max(0.0, kx.value() - cxx.value() * cxx.value()) * w2),
        std::sqrt(std::max(0.0, ky.value() - cyy.value() * cyy.value()) * w2);
    return m;
}

// ---------------------------------------------------------------------------
// Density estimation and reconstruction

/// Separable Gaussian kernel density estimate on the grid (kernel cut at
/// 8 bandwidths). Each node sums samples in index order.
inline WignerField estimate_field(const TrajectoryEnsemble& e, const PhaseSpaceGrid& grid, double bandwidth,
                                  int threads = 0) {
    if (e.samples.empty()) throw ValidationError("estimate_field: empty ensemble");
    if (!(bandwidth > 0.0)) throw ValidationError("estimate_field: bandwidth must be positive");
    grid.validate();
    const double cut = 8.0 * bandwidth;
    const double norm = 1.0 / (std::sqrt(2.0 * kPi) * bandwidth);
    WignerField f;
    f.grid = grid;
    f.s = e.s;
    f.method = "kde";
    f.values = Eigen::MatrixXd::Zero(grid.n_re, grid.n_im);
    const double sum_w = [&] {
        NeumaierSum t;
        for (std::size_t i = 0; i < e.size(); ++i) t.add(e.weights.empty() ? 1.0 : e.weights[i]);
        return t.value();
    }();
    const unsigned nthreads = resolve_threads(threads);
    const std::size_t blocks = std::min<std::size_t>(static_cast<std::size_t>(grid.n_re), nthreads);
    const int rows_per = (grid.n_re + static_cast<int>(blocks) - 1) / static_cast<int>(blocks);
    parallel_for(blocks, nthreads, [&](std::size_t b) {
        const int i_lo = static_cast<int>(b) * rows_per;
        const int i_hi = std::min(grid.n_re, i_lo + rows_per);
        std::vector<double> kx, ky;
        for (std::size_t n = 0; n < e.size(); ++n) {
            const double w = (e.weights.empty() ? 1.0 : e.weights[n]) / sum_w;
            const double sx = e.samples[n].real();
            const double sy = e.samples[n].imag();
            const int a0 = std::max(i_lo, static_cast<int>(std::ceil((sx - cut - grid.re_min) / grid.h_re())));
            const int a1 = std::min(i_hi - 1, static_cast<int>(std::floor((sx + cut - grid.re_min) / grid.h_re())));
            if (a0 > a1) continue;
            const int b0 = std::max(0, static_cast<int>(std::ceil((sy - cut - grid.im_min) / grid.h_im())));
            const int b1 = std::min(grid.n_im - 1, static_cast<int>(std::floor((sy + cut - grid.im_min) / grid.h_im())));
            if (b0 > b1) continue;
            kx.resize(static_cast<std::size_t>(a1 - a0 + 1));
            ky.resize(static_cast<std::size_t>(b1 - b0 + 1));
            for (int a = a0; a <= a1; ++a) {
                const double z = (grid.x(a) - sx) / bandwidth;
                kx[static_cast<std::size_t>(a - a0)] = w * norm * std::exp(-0.5 * z * z);
            }
            for (int c = b0; c <= b1; ++c) {
                const double z = (grid.y(c) - sy) / bandwidth;
                ky[static_cast<std::size_t>(c - b0)] = norm * std::exp(-0.5 * z * z);
            }
            for (int a = a0; a <= a1; ++a)
                for (int c = b0; c <= b1; ++c)
                    f.values(a, c) += kx[static_cast<std::size_t>(a - a0)] * ky[static_cast<std::size_t>(c - b0)];
        }
    });
    return f;
}

/// Density matrix from the ensemble, read as draws from W_s.
inline SampleInversionResult reconstruct(const TrajectoryEnsemble& e, double s, FockDim dim,
                                         const InversionOptions& opt = {}) {
    if (e.samples.empty()) throw ValidationError("reconstruct: empty ensemble");
    if (s != e.s)
        throw ValidationError("reconstruct: ensemble samples W_s at s=" + std::to_string(e.s) +
                              ", requested s=" + std::to_string(s));
    return rho_from_samples(e.as_samples(), s, dim, opt);
}

}  // namespace wignerkit
