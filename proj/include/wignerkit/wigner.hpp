#pragma once

// s-ordered Wigner functions from a density matrix.
//
// Three trace forms are provided (normal-ladder form, antinormal-ladder form,
// and the displaced-parity form), together with a characteristic-function
// quadrature used as an independent reference. Grid helpers cover evaluation
// on a PhaseSpaceGrid, Gaussian smoothing between orderings, s-ordered moments
// and quadrature marginals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "wignerkit/bigfloat.hpp"
#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/numeric.hpp"

namespace wignerkit {

enum class WignerMethod { W1, W2, W3, Char, Auto };

inline std::string to_string(WignerMethod m) {
    switch (m) {
        case WignerMethod::W1: return "w1";
        case WignerMethod::W2: return "w2";
        case WignerMethod::W3: return "w3";
        case WignerMethod::Char: return "char";
        case WignerMethod::Auto: return "auto";
    }
    return "auto";
}

inline WignerMethod parse_method(const std::string& name) {
    if (name == "w1") return WignerMethod::W1;
    if (name == "w2") return WignerMethod::W2;
    if (name == "w3") return WignerMethod::W3;
    if (name == "char") return WignerMethod::Char;
    if (name == "auto") return WignerMethod::Auto;
    throw ValidationError("unknown Wigner method '" + name + "'");
}

/// Method used by `Auto`: the normal-ladder form for s <= 0, the displaced
/// parity form above (it splits the ((1+s)/(1-s))^n growth symmetrically).
inline WignerMethod resolve_auto(double s) { return s <= 0.0 ? WignerMethod::W1 : WignerMethod::W3; }

namespace detail {

inline void check_finite(cplx v, const char* what) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError(std::string(what) + ": non-finite intermediate (ill-conditioned ordering parameter)");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trace forms (complex results; imaginary part is roundoff for Hermitian rho)

/// (2/(pi(1-s))) e^{-2|a|^2/(1-s)} Tr[((s+1)/(s-1))^N e^{2 conj(a) a_op/(1-s)} rho e^{2 a a_op^+/(1-s)}]
inline cplx wigner_w1_complex(const DensityMatrix& rho, cplx alpha, double s) {
    require(s < 1.0, "wigner_w1: requires s < 1");
    // The alternating K^n weights cancel for s > 0, so the sum runs in
    // extended precision: sum_n K^n/n! sum_kl x^{k-n}/(k-n)! sqrt(k! l!) rho_kl y^{l-n}/(l-n)!
    using ld = long double;
    using lc = std::complex<ld>;
    const int d = rho.size();
    const ld g = 2.0L / (1.0L - ld(s));
    const ld kappa = (ld(s) + 1.0L) / (ld(s) - 1.0L);
    const lc x = g * lc(alpha.real(), -alpha.imag());
    const lc y = g * lc(alpha.real(), alpha.imag());
    std::vector<ld> sqf(static_cast<std::size_t>(d), 1.0L);
    std::vector<ld> fact(static_cast<std::size_t>(d), 1.0L);
    for (int k = 1; k < d; ++k) {
        fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k - 1)] * ld(k);
        sqf[static_cast<std::size_t>(k)] = std::sqrt(fact[static_cast<std::size_t>(k)]);
    }
    std::vector<lc> xp(static_cast<std::size_t>(d)), yp(static_cast<std::size_t>(d));
    xp[0] = yp[0] = 1.0L;
    for (int j = 1; j < d; ++j) {
        xp[static_cast<std::size_t>(j)] = xp[static_cast<std::size_t>(j - 1)] * x / ld(j);
        yp[static_cast<std::size_t>(j)] = yp[static_cast<std::size_t>(j - 1)] * y / ld(j);
    }
    const CMatrix& m = rho.matrix();
    std::vector<lc> sigma(static_cast<std::size_t>(d * d));
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
            sigma[static_cast<std::size_t>(k * d + l)] =
                lc(m(k, l).real(), m(k, l).imag()) * sqf[static_cast<std::size_t>(k)] * sqf[static_cast<std::size_t>(l)];
    lc total = 0.0L;
    ld kn = 1.0L;  // 0^0 = 1 at s = -1
    for (int n = 0; n < d; ++n) {
        lc acc = 0.0L;
        for (int k = n; k < d; ++k) {
            lc row = 0.0L;
            for (int l = n; l < d; ++l) row += sigma[static_cast<std::size_t>(k * d + l)] * yp[static_cast<std::size_t>(l - n)];
            acc += xp[static_cast<std::size_t>(k - n)] * row;
        }
        total += kn / fact[static_cast<std::size_t>(n)] * acc;
        kn *= kappa;
    }
    const lc scaled = (g / ld(kPi)) * std::exp(-g * ld(std::norm(alpha))) * total;
    const cplx out(static_cast<double>(scaled.real()), static_cast<double>(scaled.imag()));
    detail::check_finite(out, "wigner_w1");
    return out;
}

/// Options for the antinormal-ladder form. That form sums an infinite series
/// in the Fock index whose terms cancel to many orders of magnitude, so it is
/// evaluated in adaptive multiprecision.
struct W2Options {
    long min_precision_bits = 128;
    long max_precision_bits = 1L << 18;
    int max_terms = 200000;
};

/// (2/(pi(1-s))) e^{2|a|^2/(1+s)} Tr[((s+1)/(s-1))^N e^{-2 a a_op^+/(1+s)} rho e^{-2 conj(a) a_op/(1+s)}]
inline cplx wigner_w2_complex(const DensityMatrix& rho, cplx alpha, double s, const W2Options& opt = {}) {
    require(s < 1.0, "wigner_w2: requires s < 1");
    require(s != -1.0, "wigner_w2: singular at s = -1");
    const int d = rho.size();
    const CMatrix& m = rho.matrix();

    // |mu| = |K| |y|^2 sets the size of the cancelling terms (~e^{|mu|}).
    const double y_abs2_d = std::norm(2.0 * alpha / (1.0 + s));
    const double mu_abs = std::abs((s + 1.0) / (s - 1.0)) * y_abs2_d;
    long prec = std::max(opt.min_precision_bits, 96L + static_cast<long>(std::ceil(2.9 * mu_abs)));

    for (;;) {
        const mpfr_prec_t p = prec;
        const BigFloat one(p, 1.0);
        const BigFloat sv(p, s);
        BigFloat kappa = sv + one;
        kappa /= (sv - one);
        BigFloat denom = sv + one;
        // -y = -2 alpha / (1 + s)
        BigComplex neg_y(p, -2.0 * alpha.real(), -2.0 * alpha.imag());
        neg_y.re /= denom;
        neg_y.im /= denom;
        BigFloat y_abs2 = neg_y.re * neg_y.re + neg_y.im * neg_y.im;

        // rho_kl / sqrt(k! l!)
        std::vector<BigComplex> rt;
        rt.reserve(static_cast<std::size_t>(d * d));
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                BigComplex v(p, m(k, l).real(), m(k, l).imag());
                BigFloat f(p, 1.0);
                for (int j = 2; j <= k; ++j) f *= double(j);
                for (int j = 2; j <= l; ++j) f *= double(j);
                mpfr_sqrt(f.raw(), f.raw(), MPFR_RNDN);
                v.re /= f;
                v.im /= f;
                rt.push_back(std::move(v));
            }
        auto rt_at = [&](int k, int l) -> const BigComplex& { return rt[static_cast<std::size_t>(k * d + l)]; };

        BigComplex total(p);
        long max_exp = -(1L << 40);

        // sum_kl u_k rt_kl conj(u_l) over the first `len` indices, times `scale`.
        // Every summand's size enters max_exp so that internal cancellation is
        // caught by the precision check below.
        auto quad_form = [&](const std::vector<BigComplex>& u, int len, const BigFloat& scale) {
            const long se = scale.exponent();
            BigComplex acc(p);
            for (int k = 0; k < len; ++k) {
                const BigComplex& uk = u[static_cast<std::size_t>(k)];
                if (uk.re.is_zero() && uk.im.is_zero()) continue;
                BigComplex row(p);
                for (int l = 0; l < len; ++l) {
                    const BigComplex& ul = u[static_cast<std::size_t>(l)];
                    BigComplex cl(p);
                    cl.re = ul.re;
                    cl.im = -ul.im;
                    BigComplex t = rt_at(k, l) * cl;
                    t *= uk;
                    max_exp = std::max(max_exp, t.exponent() + se);
                    row += t;
                }
                acc += row;
            }
            acc *= scale;
            max_exp = std::max(max_exp, acc.exponent());
            total += acc;
            return acc;
        };

        // n < d: v_k = (-y)^{n-k}/(n-k)!, term K^n n! v^T rt conj(v).
        BigFloat kn(p, 1.0);
        BigFloat nfact(p, 1.0);
        std::vector<BigComplex> v;
        v.reserve(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) v.emplace_back(p);
        for (int n = 0; n < d; ++n) {
            if (n > 0) {
                kn *= kappa;
                nfact *= double(n);
            }
            v[static_cast<std::size_t>(n)] = BigComplex(p, 1.0);
            for (int k = n - 1; k >= 0; --k) {
                BigComplex t = v[static_cast<std::size_t>(k + 1)] * neg_y;
                t.re /= double(n - k);
                t.im /= double(n - k);
                v[static_cast<std::size_t>(k)] = std::move(t);
            }
            quad_form(v, n + 1, kn * nfact);
        }

        // n >= d: term_n = K^n |y|^{2(n-d)} / n! * u^T rt conj(u) with
        // u_k = (-y)^{d-k} n (n-1) ... (n-k+1).
        std::vector<BigComplex> w;
        w.reserve(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) w.emplace_back(p);
        w[static_cast<std::size_t>(d - 1)] = neg_y;
        for (int k = d - 2; k >= 0; --k) w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k + 1)] * neg_y;

        // t_d = K^d / d!
        BigFloat tn = kn * kappa;
        tn /= nfact;
        tn /= double(d);
        BigFloat ratio = kappa * y_abs2;

        // u_k = w_k fall_k(n) with real falling factorials, so the quadratic
        // form is sum_kl fall_k fall_l C_kl with C_kl = w_k rt_kl conj(w_l).
        const std::size_t dd = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
        std::vector<BigFloat> c_re, c_im;
        std::vector<long> c_exp(dd);
        c_re.reserve(dd);
        c_im.reserve(dd);
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const BigComplex& wl = w[static_cast<std::size_t>(l)];
                BigComplex cl(p);
                cl.re = wl.re;
                cl.im = -wl.im;
                BigComplex t = rt_at(k, l) * cl;
                t *= w[static_cast<std::size_t>(k)];
                c_exp[static_cast<std::size_t>(k * d + l)] = t.exponent();
                c_re.push_back(std::move(t.re));
                c_im.push_back(std::move(t.im));
            }
        std::vector<BigFloat> fall;
        std::vector<long> fall_exp(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) fall.emplace_back(p, 1.0);
        BigFloat row_re(p), row_im(p), acc_re(p), acc_im(p);
        constexpr long kZeroExp = -(1L << 40);
        int quiet = 0;
        for (int n = d; n < d + opt.max_terms; ++n) {
            if (n > d) {
                tn *= ratio;
                tn /= double(n);
            }
            fall_exp[0] = fall[0].exponent();
            for (int k = 1; k < d; ++k) {
                mpfr_mul_si(fall[static_cast<std::size_t>(k)].raw(), fall[static_cast<std::size_t>(k - 1)].raw(),
                            n - k + 1, MPFR_RNDN);
                fall_exp[static_cast<std::size_t>(k)] = fall[static_cast<std::size_t>(k)].exponent();
            }
            mpfr_set_zero(acc_re.raw(), 1);
            mpfr_set_zero(acc_im.raw(), 1);
            long summand_exp = kZeroExp;
            for (int k = 0; k < d; ++k) {
                mpfr_set_zero(row_re.raw(), 1);
                mpfr_set_zero(row_im.raw(), 1);
                long row_max = kZeroExp;
                for (int l = 0; l < d; ++l) {
                    const std::size_t kl = static_cast<std::size_t>(k * d + l);
                    const BigFloat& f = fall[static_cast<std::size_t>(l)];
                    mpfr_fma(row_re.raw(), c_re[kl].raw(), f.raw(), row_re.raw(), MPFR_RNDN);
                    mpfr_fma(row_im.raw(), c_im[kl].raw(), f.raw(), row_im.raw(), MPFR_RNDN);
                    row_max = std::max(row_max, c_exp[kl] + fall_exp[static_cast<std::size_t>(l)]);
                }
                const BigFloat& f = fall[static_cast<std::size_t>(k)];
                mpfr_fma(acc_re.raw(), row_re.raw(), f.raw(), acc_re.raw(), MPFR_RNDN);
                mpfr_fma(acc_im.raw(), row_im.raw(), f.raw(), acc_im.raw(), MPFR_RNDN);
                if (row_max > kZeroExp / 2)
                    summand_exp = std::max(summand_exp, row_max + fall_exp[static_cast<std::size_t>(k)]);
            }
            BigComplex term(p);
            mpfr_mul(term.re.raw(), acc_re.raw(), tn.raw(), MPFR_RNDN);
            mpfr_mul(term.im.raw(), acc_im.raw(), tn.raw(), MPFR_RNDN);
            if (summand_exp > kZeroExp / 2 && !tn.is_zero()) max_exp = std::max(max_exp, summand_exp + tn.exponent());
            max_exp = std::max(max_exp, term.exponent());
            total += term;
            const long e = term.exponent();
            if (n > d + 2 && static_cast<double>(n) > mu_abs + 2.0 && e < max_exp - static_cast<long>(p) - 16) {
                if (++quiet >= 4) break;
            } else {
                quiet = 0;
            }
            if (tn.is_zero()) break;
        }

        const long res_exp = total.exponent();
        const long needed = (res_exp < -(1L << 39)) ? 0 : (max_exp - res_exp) + 64;
        if (needed > prec) {
            if (needed > opt.max_precision_bits)
                throw NumericalError("wigner_w2: cancellation exceeds the multiprecision budget");
            prec = needed + 32;
            continue;
        }

        const double log_pref = std::log(2.0 / (kPi * (1.0 - s))) + 2.0 * std::norm(alpha) / (1.0 + s);
        auto finish = [&](const BigFloat& part) {
            if (part.is_zero()) return 0.0;
            const auto [mant, ex] = part.frexp();
            return mant * std::exp(static_cast<double>(ex) * std::log(2.0) + log_pref);
        };
        const cplx out{finish(total.re), finish(total.im)};
        detail::check_finite(out, "wigner_w2");
        return out;
    }
}

/// (2/(pi(1-s))) e^{-2s|a|^2/(1-s^2)} Tr[R^N D(2a/sqrt(1-s^2)) R^N (-1)^N rho], R = sqrt((1+s)/(1-s))
inline cplx wigner_w3_complex(const DensityMatrix& rho, cplx alpha, double s) {
    require(s > -1.0 && s < 1.0, "wigner_w3: requires -1 < s < 1");
    const int d = rho.size();
    const double one_minus_s2 = 1.0 - s * s;
    const double log_r = 0.5 * std::log((1.0 + s) / (1.0 - s));
    const cplx beta = 2.0 * alpha / std::sqrt(one_minus_s2);
    const LogMatrix dlog = displacement_log(beta, rho.dim());
    const double base = std::log(2.0 / (kPi * (1.0 - s))) - 2.0 * s * std::norm(alpha) / one_minus_s2;
    const CMatrix& m = rho.matrix();
    ComplexNeumaierSum acc;
    for (int n = 0; n < d; ++n)
        for (int k = 0; k < d; ++k) {
            const cplx r = m(k, n);
            if (r == cplx(0.0, 0.0)) continue;
            const double lm = dlog.log_mag(n, k);
            if (!std::isfinite(lm)) continue;
            const double mag = std::exp(base + (n + k) * log_r + lm);
            const double parity = (k % 2) ? -1.0 : 1.0;
            acc.add(mag * parity * dlog.phase(n, k) * r);
        }
    const cplx out = acc.value();
    detail::check_finite(out, "wigner_w3");
    return out;
}

inline double wigner_w1(const DensityMatrix& rho, cplx alpha, double s) { return wigner_w1_complex(rho, alpha, s).real(); }
inline double wigner_w2(const DensityMatrix& rho, cplx alpha, double s) { return wigner_w2_complex(rho, alpha, s).real(); }
inline double wigner_w3(const DensityMatrix& rho, cplx alpha, double s) { return wigner_w3_complex(rho, alpha, s).real(); }

// ---------------------------------------------------------------------------
// Characteristic-function reference

struct CharOracleOptions {
    int radial_nodes = 0;       ///< 0: automatic
    int angular_nodes = 0;      ///< 0: automatic, per evaluation point
    double radius = 0.0;        ///< 0: (9 + 2 sqrt(n_max)) / sqrt(1 - s)
    double max_abs_alpha = 4.0; ///< sizes the automatic radial rule
};

/// Quadrature of W_s(a) = int d^2l/pi^2 e^{a conj(l) - conj(a) l + s|l|^2/2} Tr[D(l) rho]
/// in polar coordinates: Gauss-Legendre in |l|, trapezoidal in arg(l).
/// Tr[D(r e^{it}) rho] = sum_k c_k(r) e^{ikt} is precomputed on the radial nodes.
class CharacteristicOracle {
public:
    CharacteristicOracle(const DensityMatrix& rho, double s, const CharOracleOptions& opt = {})
        : s_(s), opt_(opt), d_(rho.size()) {
        require(s < 1.0, "wigner_char: requires s < 1 (integrand diverges otherwise)");
        const int n_max = rho.dim().n_max;
        radius_ = opt.radius > 0 ? opt.radius
                                 : (9.0 + 2.0 * std::sqrt(double(n_max))) / std::sqrt(1.0 - s);
        const int nr = opt.radial_nodes > 0
                           ? opt.radial_nodes
                           : 48 + 4 * n_max + static_cast<int>(std::ceil(1.2 * opt.max_abs_alpha * radius_));
        const QuadratureRule rule = gauss_legendre(nr, 0.0, radius_);
        radii_ = rule.nodes;
        coeff_.assign(radii_.size(), std::vector<cplx>(static_cast<std::size_t>(2 * d_ - 1), 0.0));
        const CMatrix& m = rho.matrix();
        for (std::size_t i = 0; i < radii_.size(); ++i) {
            const double r = radii_[i];
            const LogMatrix dl = displacement_log(cplx(r, 0.0), rho.dim());
            const double w = rule.weights[i] * r / (kPi * kPi);
            for (int row = 0; row < d_; ++row)
                for (int col = 0; col < d_; ++col) {
                    const double lm = dl.log_mag(row, col);
                    if (!std::isfinite(lm)) continue;
                    // <row|D|col> rho(col,row) carries phase e^{i(row-col)t}
                    const double mag = std::exp(lm + 0.5 * s * r * r);
                    coeff_[i][static_cast<std::size_t>(row - col + d_ - 1)] +=
                        w * mag * dl.phase(row, col).real() * m(col, row);
                }
        }
    }

    double radius() const { return radius_; }

    cplx evaluate_complex(cplx alpha) const {
        const int nt = opt_.angular_nodes > 0
                           ? opt_.angular_nodes
                           : std::max(64, static_cast<int>(std::ceil(2.0 * std::abs(alpha) * radius_)) +
                                              2 * d_ + 48);
        const double dt = 2.0 * kPi / nt;
        ComplexNeumaierSum total;
        std::vector<cplx> rot(static_cast<std::size_t>(2 * d_ - 1));
        for (int j = 0; j < nt; ++j) {
            const double t = j * dt;
            const double ct = std::cos(t);
            const double st = std::sin(t);
            const cplx e1{ct, st};
            // e^{ikt} for k = -(d-1)..(d-1)
            cplx p = std::pow(std::conj(e1), d_ - 1);
            for (int k = 0; k < 2 * d_ - 1; ++k) {
                rot[static_cast<std::size_t>(k)] = p;
                p *= e1;
            }
            const double im_proj = alpha.imag() * ct - alpha.real() * st;  // Im(a e^{-it})
            cplx ang_sum = 0.0;
            for (std::size_t i = 0; i < radii_.size(); ++i) {
                cplx chi = 0.0;
                const auto& c = coeff_[i];
                for (int k = 0; k < 2 * d_ - 1; ++k) chi += c[static_cast<std::size_t>(k)] * rot[static_cast<std::size_t>(k)];
                const double phase = 2.0 * radii_[i] * im_proj;
                ang_sum += chi * cplx(std::cos(phase), std::sin(phase));
            }
            total.add(ang_sum * dt);
        }
        return total.value();
    }

    double evaluate(cplx alpha) const { return evaluate_complex(alpha).real(); }

private:
    double s_;
    CharOracleOptions opt_;
    int d_;
    double radius_ = 0.0;
    std::vector<double> radii_;
    std::vector<std::vector<cplx>> coeff_;
};

inline double wigner_char(const DensityMatrix& rho, cplx alpha, double s, const CharOracleOptions& opt = {}) {
    CharOracleOptions o = opt;
    o.max_abs_alpha = std::max(o.max_abs_alpha, std::abs(alpha));
    return CharacteristicOracle(rho, s, o).evaluate(alpha);
}

// ---------------------------------------------------------------------------
// Special cases

/// <a|rho|a>/pi with the (unnormalized) coherent amplitudes restricted to the
/// truncation; exact for any rho supported on |0>..|n_max>.
inline double q_function(const DensityMatrix& rho, cplx alpha) {
    const CVector c = coherent_amplitudes(alpha, rho.dim());
    return (c.adjoint() * rho.matrix() * c)(0, 0).real() / kPi;
}

/// W_s(0) = (2/(pi(1-s))) sum_n rho_nn ((s+1)/(s-1))^n.
inline double wigner_origin_diagonal(const DensityMatrix& rho, double s) {
    require(s < 1.0, "wigner_origin_diagonal: requires s < 1");
    const double kappa = (s + 1.0) / (s - 1.0);
    NeumaierSum acc;
    double kn = 1.0;
    for (int n = 0; n < rho.size(); ++n) {
        acc.add(rho(n, n).real() * kn);
        kn *= kappa;
    }
    return 2.0 / (kPi * (1.0 - s)) * acc.value();
}

/// (2/pi) Tr[rho D(2a) (-1)^N], the s = 0 displaced-parity form.
inline double wigner_parity_form(const DensityMatrix& rho, cplx alpha) {
    const FockOperator d = displacement_matrix(2.0 * alpha, rho.dim());
    const FockOperator parity = number_power_diag(-1.0, rho.dim());
    return (2.0 / kPi) * (rho.matrix() * d.matrix() * parity.matrix()).trace().real();
}

// ---------------------------------------------------------------------------
// Grid evaluation

struct FieldOptions {
    double s_cap = kDefaultSCap;
    int threads = 0;
    CharOracleOptions oracle{};
};

inline WignerField field_on_grid(const DensityMatrix& rho, const PhaseSpaceGrid& grid, double s,
                                 WignerMethod method = WignerMethod::Auto, const FieldOptions& opt = {}) {
    grid.validate();
    if (s > opt.s_cap)
        throw ValidationError("field_on_grid: s=" + std::to_string(s) + " exceeds s_cap=" + std::to_string(opt.s_cap));
    const WignerMethod used = method == WignerMethod::Auto ? resolve_auto(s) : method;
    switch (used) {
        case WignerMethod::W2:
            require(s != -1.0, "wigner_w2: singular at s = -1");
            break;
        case WignerMethod::W3:
            require(s > -1.0, "wigner_w3: requires -1 < s < 1");
            break;
        default: break;
    }
    std::optional<CharacteristicOracle> oracle;
    if (used == WignerMethod::Char) {
        CharOracleOptions o = opt.oracle;
        const double ext = std::max({std::abs(grid.re_min), std::abs(grid.re_max), std::abs(grid.im_min),
                                     std::abs(grid.im_max)});
        o.max_abs_alpha = std::max(o.max_abs_alpha, ext * std::sqrt(2.0));
        oracle.emplace(rho, s, o);
    }
    WignerField field;
    field.grid = grid;
    field.s = s;
    field.values.resize(grid.n_re, grid.n_im);
    field.method = method == WignerMethod::Auto ? "auto:" + to_string(used) : to_string(used);
    std::vector<double> imag(grid.size(), 0.0);
    parallel_for(grid.size(), resolve_threads(opt.threads), [&](std::size_t idx) {
        const int i = static_cast<int>(idx / static_cast<std::size_t>(grid.n_im));
        const int j = static_cast<int>(idx % static_cast<std::size_t>(grid.n_im));
        const cplx a = grid.node(i, j);
        cplx v;
        switch (used) {
            case WignerMethod::W1: v = wigner_w1_complex(rho, a, s); break;
            case WignerMethod::W2: v = wigner_w2_complex(rho, a, s); break;
            case WignerMethod::W3: v = wigner_w3_complex(rho, a, s); break;
            default: v = oracle->evaluate_complex(a); break;
        }
        field.values(i, j) = v.real();
        imag[idx] = std::abs(v.imag());
    });
    field.imag_residue = *std::max_element(imag.begin(), imag.end());
    return field;
}

/// Analytic W_s of a Gaussian state with mean `mean` and per-quadrature
/// variance `var` (isotropic), sampled on a grid.
inline WignerField gaussian_field(const PhaseSpaceGrid& grid, double s, cplx mean, double var) {
    require(var > 0.0, "gaussian_field: variance must be positive");
    WignerField f;
    f.grid = grid;
    f.s = s;
    f.method = "gaussian";
    f.values.resize(grid.n_re, grid.n_im);
    for (int i = 0; i < grid.n_re; ++i)
        for (int j = 0; j < grid.n_im; ++j)
            f.values(i, j) = std::exp(-std::norm(grid.node(i, j) - mean) / (2.0 * var)) / (2.0 * kPi * var);
    return f;
}

// ---------------------------------------------------------------------------
// Between orderings

struct ConvolutionResult {
    WignerField field;
    /// |1 - mass_out / mass_in|: kernel mass lost across the grid boundary.
    double leakage = 0.0;
};

/// W_s = W_{s'} * (2/(pi(s'-s))) e^{-2|a-b|^2/(s'-s)} on the same grid,
/// trapezoid-weighted. The kernel factorizes over the two axes.
inline ConvolutionResult s_convolve(const WignerField& field, double s) {
    const double width = field.s - s;
    if (!(width > 0.0)) throw ValidationError("s_convolve: target s must be below the source ordering");
    const PhaseSpaceGrid& g = field.grid;
    auto kernel_1d = [&](int n, double h, double lo) {
        Eigen::MatrixXd k(n, n);
        const double norm = std::sqrt(2.0 / (kPi * width));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double dx = (lo + a * h) - (lo + b * h);
                const double wb = (b == 0 || b == n - 1) ? 0.5 * h : h;
                k(a, b) = norm * std::exp(-2.0 * dx * dx / width) * wb;
            }
        return k;
    };
    const Eigen::MatrixXd kx = kernel_1d(g.n_re, g.h_re(), g.re_min);
    const Eigen::MatrixXd ky = kernel_1d(g.n_im, g.h_im(), g.im_min);
    ConvolutionResult out;
    out.field.grid = g;
    out.field.s = s;
    out.field.method = "convolve(" + field.method + ")";
    out.field.values = kx * field.values * ky.transpose();
    const double m_in = field.mass();
    const double m_out = out.field.mass();
    out.leakage = m_in != 0.0 ? std::abs(1.0 - m_out / m_in) : 0.0;
    return out;
}

/// Grid quadrature of conj(a)^n a^m W_s: the s-ordered moment <{(a^+)^n a^m}_s>.
inline cplx expectation_s(const WignerField& field, int n, int m) {
    require(n >= 0 && m >= 0, "expectation_s: exponents must be non-negative");
    ComplexNeumaierSum acc;
    const PhaseSpaceGrid& g = field.grid;
    for (int i = 0; i < g.n_re; ++i)
        for (int j = 0; j < g.n_im; ++j) {
            const cplx a = g.node(i, j);
            acc.add(std::pow(std::conj(a), n) * std::pow(a, m) * field.values(i, j) * g.weight(i, j));
        }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Quadrature marginals

/// Local tensor-product Lagrange interpolation of a gridded field; nodes
/// outside the grid contribute zero.
inline double interpolate(const WignerField& f, double x, double y, int stencil) {
    const PhaseSpaceGrid& g = f.grid;
    const double fx = (x - g.re_min) / g.h_re();
    const double fy = (y - g.im_min) / g.h_im();
    const int half = stencil / 2;
    const int bx = static_cast<int>(std::floor(fx)) - (half - 1);
    const int by = static_cast<int>(std::floor(fy)) - (half - 1);
    if (bx + stencil <= 0 || by + stencil <= 0 || bx >= g.n_re || by >= g.n_im) return 0.0;
    auto weights = [stencil](double t, int base) {
        std::vector<double> w(static_cast<std::size_t>(stencil), 1.0);
        for (int a = 0; a < stencil; ++a)
            for (int b = 0; b < stencil; ++b)
                if (a != b) w[static_cast<std::size_t>(a)] *= (t - (base + b)) / double(a - b);
        return w;
    };
    const auto wx = weights(fx, bx);
    const auto wy = weights(fy, by);
    double acc = 0.0;
    for (int a = 0; a < stencil; ++a) {
        const int i = bx + a;
        if (i < 0 || i >= g.n_re) continue;
        double row = 0.0;
        for (int b = 0; b < stencil; ++b) {
            const int j = by + b;
            if (j < 0 || j >= g.n_im) continue;
            row += wy[static_cast<std::size_t>(b)] * f.values(i, j);
        }
        acc += wx[static_cast<std::size_t>(a)] * row;
    }
    return acc;
}

struct Marginal {
    std::vector<double> x;
    std::vector<double> p;
};

/// Distribution of the quadrature X_phi = (a^+ e^{i phi} + a e^{-i phi})/2:
/// P(x) = int dy W((x + i y) e^{i phi}) for x on the grid's real-axis nodes.
inline Marginal marginal(const WignerField& field, double phi, int stencil = 8) {
    if (field.s != 0.0) throw ValidationError("marginal: requires the s = 0 Wigner function");
    if (!field.grid.is_square_centered())
        throw ValidationError("marginal: grid must be square and centred on the origin");
    require(stencil >= 2 && stencil % 2 == 0, "marginal: interpolation stencil must be even and >= 2");
    const PhaseSpaceGrid& g = field.grid;
    const cplx rot = std::polar(1.0, phi);
    Marginal out;
    out.x.resize(static_cast<std::size_t>(g.n_re));
    out.p.resize(static_cast<std::size_t>(g.n_re));
    for (int i = 0; i < g.n_re; ++i) {
        NeumaierSum acc;
        for (int j = 0; j < g.n_im; ++j) {
            const cplx a = cplx(g.x(i), g.y(j)) * rot;
            const double wy = (j == 0 || j == g.n_im - 1) ? 0.5 * g.h_im() : g.h_im();
            acc.add(wy * interpolate(field, a.real(), a.imag(), stencil));
        }
        out.x[static_cast<std::size_t>(i)] = g.x(i);
        out.p[static_cast<std::size_t>(i)] = acc.value();
    }
    return out;
}

}  // namespace wignerkit
