#pragma once

// Density-matrix reconstruction from s-ordered Wigner functions:
// rho = int d^2a W_s(a) K(a; s), with
// K(a; s) = (2/(1+s)) e^{-2|a|^2/(1+s)} e^{u a^+} T^{N} e^{conj(u) a},
// u = 2a/(1+s), T = (s-1)/(s+1).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/numeric.hpp"

namespace wignerkit {

namespace detail {

inline void check_inversion_s(double s) {
    if (!(s > -1.0) || s > 1.0) throw ValidationError("inversion: requires -1 < s <= 1 (got " + std::to_string(s) + ")");
}

}  // namespace detail

/// All kernel entries K_nm(a; s) for n, m <= n_max.
///
/// For n >= m:
///   K_nm = (2/(1+s)) e^{-2|a|^2/(1+s)} sqrt(m!/n!) u^{n-m} T^m L_m^{(n-m)}(4|a|^2/(1-s^2)),
/// and K_mn = conj(K_nm). At s = 1 the kernel is the coherent projector.
inline CMatrix kernel_matrix(cplx alpha, double s, FockDim dim) {
    detail::check_inversion_s(s);
    const int d = dim.size();
    CMatrix k = CMatrix::Zero(d, d);
    const double a2 = std::norm(alpha);
    const double log_pref = std::log(2.0 / (1.0 + s)) - 2.0 * a2 / (1.0 + s);
    const cplx u = 2.0 * alpha / (1.0 + s);
    const double log_u = std::log(std::abs(u));
    const double arg_u = std::arg(u);
    if (s == 1.0) {
        // projector onto the coherent state |a>
        for (int n = 0; n < d; ++n)
            for (int m = 0; m <= n; ++m) {
                if (u == cplx(0.0, 0.0) && (n + m) > 0) continue;
                const double lm = log_pref + (n + m > 0 ? (n + m) * log_u : 0.0) -
                                  0.5 * (log_factorial(n) + log_factorial(m));
                const cplx v = std::polar(std::exp(lm), (n - m) * arg_u);
                k(n, m) = v;
                k(m, n) = std::conj(v);
            }
        return k;
    }
    const double t = (s - 1.0) / (s + 1.0);
    const double log_t = std::log(std::abs(t));
    const double x = 4.0 * a2 / (1.0 - s * s);
    for (int diff = 0; diff < d; ++diff) {
        if (diff > 0 && u == cplx(0.0, 0.0)) break;
        const auto lag = laguerre_sequence(d - 1 - diff, diff, x);
        for (int m = 0; m + diff < d; ++m) {
            const int n = m + diff;
            const ScaledReal& l = lag[static_cast<std::size_t>(m)];
            if (l.mantissa == 0.0) continue;
            const double lm = log_pref + 0.5 * (log_factorial(m) - log_factorial(n)) +
                              (diff > 0 ? diff * log_u : 0.0) + m * log_t + l.log_abs();
            double sign = l.sign();
            if (t < 0 && (m % 2)) sign = -sign;
            const cplx v = std::polar(sign * std::exp(lm), diff * arg_u);
            k(n, m) = v;
            if (diff > 0) k(m, n) = std::conj(v);
        }
    }
    return k;
}

inline cplx inversion_kernel(int n, int m, cplx alpha, double s) {
    require(n >= 0 && m >= 0, "inversion_kernel: indices must be non-negative");
    return kernel_matrix(alpha, s, FockDim(std::max(n, m)))(n, m);
}

/// The same kernel from the truncated ladder exponentials (exact on the
/// block), summed in extended precision:
/// K_nm = pref sum_j u^{n-j} sqrt(n!/j!)/(n-j)! T^j conj(u)^{m-j} sqrt(m!/j!)/(m-j)!.
inline CMatrix kernel_matrix_product(cplx alpha, double s, FockDim dim) {
    detail::check_inversion_s(s);
    using ld = long double;
    using lc = std::complex<ld>;
    const int d = dim.size();
    const lc u = lc(2.0L * alpha.real(), 2.0L * alpha.imag()) / (1.0L + ld(s));
    const ld t = (ld(s) - 1.0L) / (ld(s) + 1.0L);
    const ld pref = 2.0L / (1.0L + ld(s)) * std::exp(-2.0L * ld(std::norm(alpha)) / (1.0L + ld(s)));
    std::vector<ld> fact(static_cast<std::size_t>(d), 1.0L);
    for (int k = 1; k < d; ++k) fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k - 1)] * ld(k);
    // e_{nj} = u^{n-j} sqrt(n!/j!)/(n-j)!
    std::vector<lc> e(static_cast<std::size_t>(d * d), lc(0.0L));
    for (int n = 0; n < d; ++n)
        for (int j = 0; j <= n; ++j)
            e[static_cast<std::size_t>(n * d + j)] =
                std::pow(u, n - j) * std::sqrt(fact[static_cast<std::size_t>(n)] / fact[static_cast<std::size_t>(j)]) /
                fact[static_cast<std::size_t>(n - j)];
    CMatrix k(d, d);
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m) {
            lc acc = 0.0L;
            ld tj = 1.0L;  // 0^0 = 1 at s = 1
            for (int j = 0; j <= std::min(n, m); ++j) {
                acc += e[static_cast<std::size_t>(n * d + j)] * tj * std::conj(e[static_cast<std::size_t>(m * d + j)]);
                tj *= t;
            }
            acc *= pref;
            k(n, m) = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
        }
    return k;
}

struct InversionOptions {
    double s_cap = kDefaultSCap;
    bool clip_eigenvalues = false;
    double max_trace_defect = 0.05;
    double kernel_warning = 1e6;
    int threads = 0;
};

struct InversionDiagnostics {
    double hermiticity_defect = 0.0;  ///< ||rho - rho^+||_F / 2 before hermitizing
    double trace_defect = 0.0;        ///< |tr rho - 1| before any correction
    double max_kernel = 0.0;          ///< largest |K_nm| met during quadrature
    double min_eigenvalue = 0.0;      ///< of the hermitized estimate, before clipping
    bool clipped = false;
    std::vector<std::string> warnings;
};

struct InversionResult {
    DensityMatrix rho;
    InversionDiagnostics diagnostics;
};

namespace detail {

inline DensityMatrix finish_inversion(CMatrix raw, FockDim dim, const InversionOptions& opt,
                                      InversionDiagnostics& diag) {
    diag.hermiticity_defect = 0.5 * (raw - raw.adjoint()).norm();
    diag.trace_defect = std::abs(raw.trace() - cplx(1.0, 0.0));
    if (diag.max_kernel > opt.kernel_warning)
        diag.warnings.push_back("kernel magnitude " + std::to_string(diag.max_kernel) +
                                " exceeds the conditioning threshold; reduce n_max or raise s");
    if (diag.trace_defect > opt.max_trace_defect)
        throw NumericalError("reconstruction failed: trace defect " + std::to_string(diag.trace_defect) +
                             " (grid too small or too coarse for the state)");
    CMatrix h = 0.5 * (raw + raw.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    diag.min_eigenvalue = es.eigenvalues().minCoeff();
    if (opt.clip_eigenvalues && diag.min_eigenvalue < 0.0) {
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        ev /= ev.sum();
        h = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        diag.clipped = true;
    }
    return DensityMatrix(dim, h);
}

}  // namespace detail

/// Un-hermitized quadrature sum over grid nodes (trapezoid weights). Rows of
/// the grid are accumulated separately and then added in row order.
inline CMatrix invert_raw(const WignerField& field, FockDim dim, double* max_kernel = nullptr, int threads = 0) {
    detail::check_inversion_s(field.s);
    const PhaseSpaceGrid& g = field.grid;
    const int d = dim.size();
    std::vector<CMatrix> rows(static_cast<std::size_t>(g.n_re), CMatrix::Zero(d, d));
    std::vector<double> kmax(static_cast<std::size_t>(g.n_re), 0.0);
    parallel_for(static_cast<std::size_t>(g.n_re), resolve_threads(threads), [&](std::size_t i) {
        CMatrix& acc = rows[i];
        for (int j = 0; j < g.n_im; ++j) {
            const double w = field.values(static_cast<int>(i), j) * g.weight(static_cast<int>(i), j);
            const CMatrix k = kernel_matrix(g.node(static_cast<int>(i), j), field.s, dim);
            kmax[i] = std::max(kmax[i], k.cwiseAbs().maxCoeff());
            if (w != 0.0) acc += w * k;
        }
    });
    CMatrix total = CMatrix::Zero(d, d);
    double km = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        total += rows[i];
        km = std::max(km, kmax[i]);
    }
    if (max_kernel) *max_kernel = km;
    return total;
}

inline InversionResult rho_from_field(const WignerField& field, FockDim dim, const InversionOptions& opt = {}) {
    detail::check_inversion_s(field.s);
    if (field.s > opt.s_cap)
        throw ValidationError("rho_from_field: s=" + std::to_string(field.s) + " exceeds s_cap");
    InversionDiagnostics diag;
    CMatrix raw = invert_raw(field, dim, &diag.max_kernel, opt.threads);
    DensityMatrix rho = detail::finish_inversion(std::move(raw), dim, opt, diag);
    return {std::move(rho), std::move(diag)};
}

// ---------------------------------------------------------------------------
// Monte-Carlo reconstruction

/// Phase-space points with non-negative weights (empty weights: uniform).
struct WeightedSamples {
    std::vector<cplx> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
};

namespace detail {

inline std::vector<double> normalized_weights(const WeightedSamples& samples) {
    if (samples.points.empty()) throw ValidationError("sample reconstruction: empty ensemble");
    if (!samples.weights.empty() && samples.weights.size() != samples.points.size())
        throw ValidationError("sample reconstruction: weight count does not match point count");
    std::vector<double> w(samples.size());
    NeumaierSum total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = samples.weight(i);
        if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw ValidationError("sample reconstruction: negative or non-finite weight");
        total.add(w[i]);
    }
    if (!(total.value() > 0.0)) throw ValidationError("sample reconstruction: weights sum to zero");
    for (double& x : w) x /= total.value();
    return w;
}

inline double effective_correction(const std::vector<double>& w) {
    // N/(N-1) bias correction, with N the effective sample size
    double s2 = 0.0;
    for (double x : w) s2 += x * x;
    const double n_eff = 1.0 / s2;
    return n_eff > 1.0 ? n_eff / (n_eff - 1.0) : 0.0;
}

}  // namespace detail

struct SampleInversionResult {
    DensityMatrix rho;
    Eigen::MatrixXd stderr_entries;  ///< standard error of each |rho_nm| estimate
    InversionDiagnostics diagnostics;
};

/// rho_nm = sum_i w_i K_nm(a_i; s) / sum_i w_i for draws a_i ~ W_s.
inline SampleInversionResult rho_from_samples(const WeightedSamples& samples, double s, FockDim dim,
                                              const InversionOptions& opt = {}) {
    detail::check_inversion_s(s);
    const std::vector<double> w = detail::normalized_weights(samples);
    const int d = dim.size();
    const std::size_t chunk = 4096;
    const std::size_t nchunks = (samples.size() + chunk - 1) / chunk;
    std::vector<CMatrix> means(nchunks, CMatrix::Zero(d, d));
    std::vector<double> kmax(nchunks, 0.0);
    parallel_for(nchunks, resolve_threads(opt.threads), [&](std::size_t c) {
        for (std::size_t i = c * chunk; i < std::min(samples.size(), (c + 1) * chunk); ++i) {
            const CMatrix k = kernel_matrix(samples.points[i], s, dim);
            kmax[c] = std::max(kmax[c], k.cwiseAbs().maxCoeff());
            means[c] += w[i] * k;
        }
    });
    CMatrix mean = CMatrix::Zero(d, d);
    InversionDiagnostics diag;
    for (std::size_t c = 0; c < nchunks; ++c) {
        mean += means[c];
        diag.max_kernel = std::max(diag.max_kernel, kmax[c]);
    }
    std::vector<Eigen::MatrixXd> vars(nchunks, Eigen::MatrixXd::Zero(d, d));
    parallel_for(nchunks, resolve_threads(opt.threads), [&](std::size_t c) {
        for (std::size_t i = c * chunk; i < std::min(samples.size(), (c + 1) * chunk); ++i) {
            const CMatrix k = kernel_matrix(samples.points[i], s, dim);
            vars[c] += (w[i] * w[i]) * (k - mean).cwiseAbs2();
        }
    });
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : vars) var += v;
    var *= detail::effective_correction(w);
    Eigen::MatrixXd se = var.cwiseSqrt();
    se = 0.5 * (se + se.transpose()).eval();
    InversionOptions relaxed = opt;
    relaxed.max_trace_defect = std::max(opt.max_trace_defect, 1e300);  // sampling noise is reported, not fatal
    DensityMatrix rho = detail::finish_inversion(mean, dim, relaxed, diag);
    return {std::move(rho), std::move(se), std::move(diag)};
}

struct Estimate {
    double mean = 0.0;
    double stderr_value = 0.0;
};

/// Monte-Carlo estimate of Re Tr[rho O] with rho reconstructed from samples.
inline Estimate estimate_expectation(const WeightedSamples& samples, double s, FockDim dim, const CMatrix& op) {
    detail::check_inversion_s(s);
    require(op.rows() == dim.size() && op.cols() == dim.size(), "estimate_expectation: operator shape mismatch");
    const std::vector<double> w = detail::normalized_weights(samples);
    std::vector<double> vals(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        vals[i] = (kernel_matrix(samples.points[i], s, dim) * op).trace().real();
    NeumaierSum m;
    for (std::size_t i = 0; i < vals.size(); ++i) m.add(w[i] * vals[i]);
    const double mean = m.value();
    NeumaierSum v;
    for (std::size_t i = 0; i < vals.size(); ++i) v.add(w[i] * w[i] * (vals[i] - mean) * (vals[i] - mean));
    return {mean, std::sqrt(v.value() * detail::effective_correction(w))};
}

}  // namespace wignerkit
