#pragma once

// Truncated single-mode Fock space: states, ladder operators, the displacement
// operator and density-matrix diagnostics. Basis |0>..|n_max>.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "wignerkit/errors.hpp"
#include "wignerkit/numeric.hpp"

namespace wignerkit {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct FockDim {
    int n_max = 0;

    FockDim() = default;
    explicit FockDim(int n) : n_max(n) { require(n >= 0, "FockDim: n_max must be non-negative"); }

    int size() const { return n_max + 1; }
    friend bool operator==(FockDim, FockDim) = default;
};

struct Tolerances {
    double herm = 1e-10;
    double trace = 1e-10;
    double psd = 1e-8;
    double tail = 1e-8;
};

enum class TruncationPolicy { Throw, Allow };

class FockOperator {
public:
    FockOperator() = default;
    FockOperator(FockDim dim, CMatrix m) : dim_(dim), m_(std::move(m)) {
        require(m_.rows() == dim_.size() && m_.cols() == dim_.size(),
                "FockOperator: matrix shape does not match dimension");
    }
    static FockOperator identity(FockDim dim) {
        return {dim, CMatrix::Identity(dim.size(), dim.size())};
    }

    FockDim dim() const { return dim_; }
    const CMatrix& matrix() const { return m_; }
    cplx operator()(int r, int c) const { return m_(r, c); }

    FockOperator operator*(const FockOperator& o) const {
        require(dim_ == o.dim_, "FockOperator: dimension mismatch");
        return {dim_, m_ * o.m_};
    }
    FockOperator adjoint() const { return {dim_, m_.adjoint()}; }

private:
    FockDim dim_;
    CMatrix m_;
};

/// Density matrix in a truncated basis. Construction only checks shape;
/// physical validity is reported by validate_density().
class DensityMatrix {
public:
    DensityMatrix() = default;
    DensityMatrix(FockDim dim, CMatrix m) : dim_(dim), m_(std::move(m)) {
        require(m_.rows() == dim_.size() && m_.cols() == dim_.size(),
                "DensityMatrix: matrix shape does not match dimension");
    }

    FockDim dim() const { return dim_; }
    const CMatrix& matrix() const { return m_; }
    cplx operator()(int r, int c) const { return m_(r, c); }
    int size() const { return dim_.size(); }

    /// Same operator embedded in (or cut to) a different truncation.
    DensityMatrix resized(FockDim dim) const {
        CMatrix out = CMatrix::Zero(dim.size(), dim.size());
        const int k = std::min(dim.size(), dim_.size());
        out.topLeftCorner(k, k) = m_.topLeftCorner(k, k);
        return {dim, out};
    }

private:
    FockDim dim_;
    CMatrix m_;
};

struct DensityDiagnostics {
    double hermiticity_defect = 0.0;
    double trace_defect = 0.0;
    double min_eigenvalue = 0.0;
    double tail_mass = 0.0;
    bool hermitian_ok = true;
    bool trace_ok = true;
    bool psd_ok = true;
    bool tail_ok = true;

    bool ok() const { return hermitian_ok && trace_ok && psd_ok && tail_ok; }
};

inline DensityDiagnostics validate_density(const DensityMatrix& rho, const Tolerances& tol = {}) {
    const CMatrix& m = rho.matrix();
    DensityDiagnostics d;
    d.hermiticity_defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
    d.trace_defect = std::abs(m.trace() - cplx(1.0, 0.0));
    const CMatrix herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    d.tail_mass = std::abs(m(rho.dim().n_max, rho.dim().n_max));
    d.hermitian_ok = d.hermiticity_defect <= tol.herm;
    d.trace_ok = d.trace_defect <= tol.trace;
    d.psd_ok = d.min_eigenvalue >= -tol.psd;
    d.tail_ok = d.tail_mass <= tol.tail;
    return d;
}

namespace detail {

inline DensityMatrix projector(FockDim dim, const CVector& v) {
    return {dim, v * v.adjoint()};
}

inline void check_tail(const DensityMatrix& rho, const Tolerances& tol, TruncationPolicy policy,
                       const char* what) {
    const double tail = std::abs(rho(rho.dim().n_max, rho.dim().n_max));
    if (policy == TruncationPolicy::Throw && tail > tol.tail)
        throw ValidationError(std::string(what) + ": truncation tail mass " + std::to_string(tail) +
                              " exceeds tolerance; increase n_max");
}

}  // namespace detail

/// Unnormalized truncated coherent amplitudes e^{-|b|^2/2} b^n / sqrt(n!).
inline CVector coherent_amplitudes(cplx beta, FockDim dim) {
    CVector c(dim.size());
    const double r = std::abs(beta);
    const double ph = std::arg(beta);
    for (int n = 0; n < dim.size(); ++n) {
        if (r == 0.0) {
            c(n) = n == 0 ? 1.0 : 0.0;
            continue;
        }
        const double logm = -0.5 * r * r + n * std::log(r) - 0.5 * log_factorial(n);
        c(n) = std::polar(std::exp(logm), n * ph);
    }
    return c;
}

inline DensityMatrix fock_state(int n, FockDim dim) {
    if (n < 0 || n > dim.n_max)
        throw ValidationError("fock_state: n=" + std::to_string(n) + " outside 0.." +
                              std::to_string(dim.n_max));
    CVector v = CVector::Zero(dim.size());
    v(n) = 1.0;
    return detail::projector(dim, v);
}

inline DensityMatrix coherent_state(cplx beta, FockDim dim, const Tolerances& tol = {},
                                    TruncationPolicy policy = TruncationPolicy::Throw) {
    CVector c = coherent_amplitudes(beta, dim);
    c /= c.norm();
    DensityMatrix rho = detail::projector(dim, c);
    detail::check_tail(rho, tol, policy, "coherent_state");
    return rho;
}

inline DensityMatrix thermal_state(double nbar, FockDim dim, const Tolerances& tol = {},
                                   TruncationPolicy policy = TruncationPolicy::Throw) {
    require(nbar >= 0.0, "thermal_state: nbar must be non-negative");
    CMatrix m = CMatrix::Zero(dim.size(), dim.size());
    if (nbar == 0.0) {
        m(0, 0) = 1.0;
        return {dim, m};
    }
    const double q = nbar / (nbar + 1.0);
    double norm = 0.0;
    for (int n = 0; n < dim.size(); ++n) {
        const double p = std::pow(q, n);
        m(n, n) = p;
        norm += p;
    }
    m /= norm;
    DensityMatrix rho{dim, m};
    detail::check_tail(rho, tol, policy, "thermal_state");
    return rho;
}

/// Projector on the normalized superposition |beta> + sign |-beta>.
inline DensityMatrix cat_state(cplx beta, int sign, FockDim dim, const Tolerances& tol = {},
                               TruncationPolicy policy = TruncationPolicy::Throw) {
    require(sign == 1 || sign == -1, "cat_state: sign must be +1 or -1");
    CVector v = coherent_amplitudes(beta, dim) + double(sign) * coherent_amplitudes(-beta, dim);
    const double norm = v.norm();
    if (norm < 1e-12) throw ValidationError("cat_state: superposition vanishes (degenerate normalization)");
    v /= norm;
    DensityMatrix rho = detail::projector(dim, v);
    detail::check_tail(rho, tol, policy, "cat_state");
    return rho;
}

inline FockOperator annihilation(FockDim dim) {
    CMatrix m = CMatrix::Zero(dim.size(), dim.size());
    for (int n = 1; n < dim.size(); ++n) m(n - 1, n) = std::sqrt(double(n));
    return {dim, m};
}

inline FockOperator creation(FockDim dim) { return annihilation(dim).adjoint(); }

inline FockOperator number_operator(FockDim dim) {
    CMatrix m = CMatrix::Zero(dim.size(), dim.size());
    for (int n = 0; n < dim.size(); ++n) m(n, n) = double(n);
    return {dim, m};
}

/// diag(kappa^n), with 0^0 = 1.
inline FockOperator number_power_diag(cplx kappa, FockDim dim) {
    CMatrix m = CMatrix::Zero(dim.size(), dim.size());
    cplx p = 1.0;
    for (int n = 0; n < dim.size(); ++n) {
        m(n, n) = p;
        p *= kappa;
    }
    return {dim, m};
}

/// exp(c a) as the finite upper-triangular sum; entries are exact for the
/// infinite-dimensional operator restricted to the truncation.
inline FockOperator exp_annihilation(cplx c, FockDim dim) {
    CMatrix m = CMatrix::Zero(dim.size(), dim.size());
    const double r = std::abs(c);
    const double ph = std::arg(c);
    for (int row = 0; row < dim.size(); ++row) {
        m(row, row) = 1.0;
        if (r == 0.0) continue;
        for (int col = row + 1; col < dim.size(); ++col) {
            const int k = col - row;
            const double logm = k * std::log(r) + 0.5 * (log_factorial(col) - log_factorial(row)) -
                                log_factorial(k);
            m(row, col) = std::polar(std::exp(logm), k * ph);
        }
    }
    return {dim, m};
}

/// exp(c a^dagger), lower triangular.
inline FockOperator exp_creation(cplx c, FockDim dim) {
    return exp_annihilation(std::conj(c), dim).adjoint();
}

/// Displacement matrix in log-magnitude / phase form:
/// <m|D(lambda)|n> = phase(m,n) * exp(log_mag(m,n)).
struct LogMatrix {
    Eigen::MatrixXd log_mag;
    CMatrix phase;

    CMatrix to_matrix() const {
        CMatrix out(phase.rows(), phase.cols());
        for (Eigen::Index i = 0; i < phase.rows(); ++i)
            for (Eigen::Index j = 0; j < phase.cols(); ++j)
                out(i, j) = phase(i, j) * std::exp(log_mag(i, j));
        return out;
    }
};

/// Closed form with associated Laguerre polynomials:
///   m >= n: sqrt(n!/m!) lambda^{m-n} e^{-|lambda|^2/2} L_n^{(m-n)}(|lambda|^2)
///   m <  n: sqrt(m!/n!) (-conj lambda)^{n-m} e^{-|lambda|^2/2} L_m^{(n-m)}(|lambda|^2)
inline LogMatrix displacement_log(cplx lambda, FockDim dim) {
    const int d = dim.size();
    LogMatrix out{Eigen::MatrixXd::Constant(d, d, -std::numeric_limits<double>::infinity()),
                  CMatrix::Zero(d, d)};
    const double r = std::abs(lambda);
    const double x = r * r;
    const double ph = std::arg(lambda);
    const double logr = r > 0 ? std::log(r) : -std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k) {
        if (k > 0 && r == 0.0) continue;
        const auto lag = laguerre_sequence(d - 1 - k, k, x);
        for (int lo = 0; lo + k < d; ++lo) {
            const int hi = lo + k;
            const ScaledReal& L = lag[static_cast<std::size_t>(lo)];
            if (L.mantissa == 0.0) continue;
            const double logm = 0.5 * (log_factorial(lo) - log_factorial(hi)) +
                                (k > 0 ? k * logr : 0.0) - 0.5 * x + L.log_abs();
            // below the diagonal (row hi, col lo): lambda^k
            out.log_mag(hi, lo) = logm;
            out.phase(hi, lo) = std::polar(L.sign(), k * ph);
            if (k > 0) {
                // above the diagonal (row lo, col hi): (-conj lambda)^k
                out.log_mag(lo, hi) = logm;
                out.phase(lo, hi) = std::polar(L.sign() * (k % 2 ? -1.0 : 1.0), -k * ph);
            }
        }
    }
    return out;
}

inline FockOperator displacement_matrix(cplx lambda, FockDim dim) {
    return {dim, displacement_log(lambda, dim).to_matrix()};
}

/// D(lambda) = e^{-|lambda|^2/2} exp(lambda a^dagger) exp(-conj(lambda) a), evaluated
/// with the exact triangular ladder exponentials.
inline FockOperator displacement_matrix_factorized(cplx lambda, FockDim dim) {
    const FockOperator ec = exp_creation(lambda, dim);
    const FockOperator ea = exp_annihilation(-std::conj(lambda), dim);
    return {dim, std::exp(-0.5 * std::norm(lambda)) * (ec.matrix() * ea.matrix())};
}

/// Tr[rho O].
inline cplx expectation(const DensityMatrix& rho, const FockOperator& op) {
    require(rho.dim() == op.dim(), "expectation: dimension mismatch");
    return (rho.matrix() * op.matrix()).trace();
}

inline double mean_photon_number(const DensityMatrix& rho) {
    return expectation(rho, number_operator(rho.dim())).real();
}

inline double purity(const DensityMatrix& rho) {
    return (rho.matrix() * rho.matrix()).trace().real();
}

inline double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
    require(a.dim() == b.dim(), "frobenius_distance: dimension mismatch");
    return (a.matrix() - b.matrix()).norm();
}

/// <psi|rho|psi> for a normalized pure reference state.
inline double fidelity_with_pure(const DensityMatrix& rho, const CVector& psi) {
    require(psi.size() == rho.size(), "fidelity_with_pure: dimension mismatch");
    return (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
}

}  // namespace wignerkit
