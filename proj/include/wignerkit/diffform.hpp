#pragma once

// Differential forms sum_c c * a^p conj(a)^q d_a^r d_conj(a)^t in normal order
// (multiplications left of derivatives), the image of super-operators acting
// on rho in the s-ordered phase-space picture.

#include <array>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wignerkit/errors.hpp"
#include "wignerkit/poly.hpp"

namespace wignerkit {

/// Exponents (p, q, r, t) of alpha, conj(alpha), d/dalpha, d/dconj(alpha).
using FormKey = std::array<int, 4>;

namespace detail {

inline Rational binomial(int n, int k) {
    if (k < 0 || k > n) return Rational(0);
    Rational r(1);
    for (int j = 1; j <= k; ++j) r = r * Rational(n - k + j) / Rational(j);
    return r;
}

/// n (n-1) ... (n-k+1)
inline Rational falling(int n, int k) {
    Rational r(1);
    for (int j = 0; j < k; ++j) r *= Rational(n - j);
    return r;
}

inline std::string key_str(const FormKey& k, bool divergence) {
    auto piece = [](const char* sym, int e) -> std::string {
        if (e == 0) return "";
        return e == 1 ? std::string(sym) : std::string(sym) + "^" + std::to_string(e);
    };
    std::vector<std::string> parts;
    auto push = [&](const std::string& s) {
        if (!s.empty()) parts.push_back(s);
    };
    if (divergence) {
        push(piece("d_a", k[2]));
        push(piece("d_ac", k[3]));
        push(piece("a", k[0]));
        push(piece("ac", k[1]));
    } else {
        push(piece("a", k[0]));
        push(piece("ac", k[1]));
        push(piece("d_a", k[2]));
        push(piece("d_ac", k[3]));
    }
    if (parts.empty()) return "1";
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out += "*" + parts[i];
    return out;
}

}  // namespace detail

class DiffForm {
public:
    DiffForm() = default;

    static DiffForm identity() { return term({0, 0, 0, 0}, Poly(1)); }
    static DiffForm term(const FormKey& k, const Poly& c) {
        DiffForm f;
        f.add(k, c);
        return f;
    }

    const std::map<FormKey, Poly>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    Poly coefficient(const FormKey& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? Poly() : it->second;
    }

    void add(const FormKey& k, const Poly& c) {
        if (c.is_zero()) return;
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            terms_.emplace(k, c);
            return;
        }
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }

    DiffForm& operator+=(const DiffForm& o) {
        for (const auto& [k, c] : o.terms_) add(k, c);
        return *this;
    }
    DiffForm& operator-=(const DiffForm& o) {
        for (const auto& [k, c] : o.terms_) add(k, -c);
        return *this;
    }
    friend DiffForm operator+(DiffForm a, const DiffForm& b) { return a += b; }
    friend DiffForm operator-(DiffForm a, const DiffForm& b) { return a -= b; }
    friend DiffForm operator*(const Poly& c, const DiffForm& f) {
        DiffForm r;
        for (const auto& [k, v] : f.terms_) r.add(k, c * v);
        return r;
    }
    friend bool operator==(const DiffForm& a, const DiffForm& b) { return a.terms_ == b.terms_; }

    /// Largest r + t over the terms.
    int derivative_order() const {
        int o = 0;
        for (const auto& [k, c] : terms_) o = std::max(o, k[2] + k[3]);
        return o;
    }

    DiffForm substitute(const std::map<std::string, CRational>& values) const {
        DiffForm r;
        for (const auto& [k, c] : terms_) r.add(k, c.substitute(values));
        return r;
    }

    std::map<FormKey, std::complex<double>> evaluate(const std::map<std::string, std::complex<double>>& values) const {
        std::map<FormKey, std::complex<double>> out;
        for (const auto& [k, c] : terms_) out[k] = c.evaluate(values);
        return out;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (const auto& [k, c] : terms_) {
            if (!out.empty()) out += " + ";
            out += "(" + c.str() + ")*" + detail::key_str(k, false);
        }
        return out;
    }

private:
    std::map<FormKey, Poly> terms_;
};

/// Operator product f g (g acts first), re-normal-ordered with
/// d^r a^p = sum_j C(r, j) p!/(p-j)! a^{p-j} d^{r-j} on each variable.
inline DiffForm compose(const DiffForm& f, const DiffForm& g) {
    DiffForm out;
    for (const auto& [kf, cf] : f.terms()) {
        const auto [p1, q1, r1, t1] = kf;
        for (const auto& [kg, cg] : g.terms()) {
            const auto [p2, q2, r2, t2] = kg;
            const Poly c = cf * cg;
            for (int j = 0; j <= std::min(r1, p2); ++j) {
                const Rational wj = detail::binomial(r1, j) * detail::falling(p2, j);
                for (int k = 0; k <= std::min(t1, q2); ++k) {
                    const Rational wk = detail::binomial(t1, k) * detail::falling(q2, k);
                    out.add({p1 + p2 - j, q1 + q2 - k, r1 - j + r2, t1 - k + t2}, Poly(CRational(wj * wk)) * c);
                }
            }
        }
    }
    return out;
}

/// Form of .O^+ from the form of O. (and vice versa): conjugate
/// coefficients and exchange alpha <-> conj(alpha).
inline DiffForm adjoint(const DiffForm& f) {
    DiffForm out;
    for (const auto& [k, c] : f.terms()) out.add({k[1], k[0], k[3], k[2]}, c.conj());
    return out;
}

/// True when f and g commute as operators.
inline bool commutes(const DiffForm& f, const DiffForm& g) { return compose(f, g) == compose(g, f); }

inline bool left_right_commute_check(const DiffForm& f_left, const DiffForm& g_right) {
    return commutes(f_left, g_right);
}

/// Rewrites a normal-ordered form with derivatives on the left:
/// a^p d^r = sum_j (-1)^j C(r, j) p!/(p-j)! d^{r-j} a^{p-j}.
/// Keys of the result read (p, q, r, t) as d_a^r d_ac^t a^p ac^q.
inline DiffForm to_divergence_form(const DiffForm& f) {
    DiffForm out;
    for (const auto& [k, c] : f.terms()) {
        const auto [p, q, r, t] = k;
        for (int j = 0; j <= std::min(p, r); ++j) {
            Rational wj = detail::binomial(r, j) * detail::falling(p, j);
            if (j % 2) wj = -wj;
            for (int l = 0; l <= std::min(q, t); ++l) {
                Rational wl = detail::binomial(t, l) * detail::falling(q, l);
                if (l % 2) wl = -wl;
                out.add({p - j, q - l, r - j, t - l}, Poly(CRational(wj * wl)) * c);
            }
        }
    }
    return out;
}

/// Inverse of to_divergence_form.
inline DiffForm from_divergence_form(const DiffForm& f) {
    DiffForm out;
    for (const auto& [k, c] : f.terms()) {
        const auto [p, q, r, t] = k;
        for (int j = 0; j <= std::min(p, r); ++j) {
            const Rational wj = detail::binomial(r, j) * detail::falling(p, j);
            for (int l = 0; l <= std::min(q, t); ++l) {
                const Rational wl = detail::binomial(t, l) * detail::falling(q, l);
                out.add({p - j, q - l, r - j, t - l}, Poly(CRational(wj * wl)) * c);
            }
        }
    }
    return out;
}

inline std::string divergence_str(const DiffForm& div) {
    if (div.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : div.terms()) {
        if (!out.empty()) out += " + ";
        out += "(" + c.str() + ")*" + detail::key_str(k, true);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Basic super-operators

enum class Ladder { A, Ad };

enum class BasicOp { LeftA, LeftAd, RightA, RightAd, AxAd, AdxA, NumberLeft, NumberRight };

inline BasicOp parse_basic_op(const std::string& name) {
    static const std::map<std::string, BasicOp> names = {
        {"a.", BasicOp::LeftA},       {"ad.", BasicOp::LeftAd},        {".a", BasicOp::RightA},
        {".ad", BasicOp::RightAd},    {"a.ad", BasicOp::AxAd},         {"ad.a", BasicOp::AdxA},
        {"ada.", BasicOp::NumberLeft}, {".ada", BasicOp::NumberRight},
    };
    auto it = names.find(name);
    if (it == names.end()) throw ValidationError("unknown super-operator '" + name + "'");
    return it->second;
}

/// Tabulated forms, with b = (1+s)/2 and c = (1-s)/2.
inline DiffForm basic_form(BasicOp op, const Poly& s) {
    const Poly half = Poly::rational(1, 2);
    const Poly b = half * (Poly(1) + s);
    const Poly c = half * (Poly(1) - s);
    const Poly one(1);
    DiffForm f;
    switch (op) {
        case BasicOp::LeftA:
            f.add({1, 0, 0, 0}, one);
            f.add({0, 0, 0, 1}, c);
            break;
        case BasicOp::LeftAd:
            f.add({0, 1, 0, 0}, one);
            f.add({0, 0, 1, 0}, -b);
            break;
        case BasicOp::RightA:
            f.add({1, 0, 0, 0}, one);
            f.add({0, 0, 0, 1}, -b);
            break;
        case BasicOp::RightAd:
            f.add({0, 1, 0, 0}, one);
            f.add({0, 0, 1, 0}, c);
            break;
        case BasicOp::AxAd:
            f.add({1, 1, 0, 0}, one);
            f.add({0, 0, 0, 0}, c);
            f.add({1, 0, 1, 0}, c);
            f.add({0, 1, 0, 1}, c);
            f.add({0, 0, 1, 1}, c * c);
            break;
        case BasicOp::AdxA:
            f.add({1, 1, 0, 0}, one);
            f.add({0, 0, 0, 0}, -b);
            f.add({1, 0, 1, 0}, -b);
            f.add({0, 1, 0, 1}, -b);
            f.add({0, 0, 1, 1}, b * b);
            break;
        case BasicOp::NumberLeft:
            f.add({1, 1, 0, 0}, one);
            f.add({0, 1, 0, 1}, c);
            f.add({1, 0, 1, 0}, -b);
            f.add({0, 0, 0, 0}, -b);
            f.add({0, 0, 1, 1}, -(b * c));
            break;
        case BasicOp::NumberRight:
            f.add({1, 1, 0, 0}, one);
            f.add({1, 0, 1, 0}, c);
            f.add({0, 1, 0, 1}, -b);
            f.add({0, 0, 0, 0}, -b);
            f.add({0, 0, 1, 1}, -(b * c));
            break;
    }
    return f;
}

inline DiffForm basic_form(const std::string& name, const Poly& s) { return basic_form(parse_basic_op(name), s); }

inline DiffForm left_form(Ladder l, const Poly& s) {
    return basic_form(l == Ladder::A ? BasicOp::LeftA : BasicOp::LeftAd, s);
}
inline DiffForm right_form(Ladder l, const Poly& s) {
    return basic_form(l == Ladder::A ? BasicOp::RightA : BasicOp::RightAd, s);
}

/// Form of L1 L2 ... Lk rho R1 R2 ... Rm:
/// F[L1.] ... F[Lk.] F[.Rm] ... F[.R1].
inline DiffForm word_form(const std::vector<Ladder>& left, const std::vector<Ladder>& right, const Poly& s) {
    DiffForm f = DiffForm::identity();
    for (Ladder l : left) f = compose(f, left_form(l, s));
    for (auto it = right.rbegin(); it != right.rend(); ++it) f = compose(f, right_form(*it, s));
    return f;
}

// ---------------------------------------------------------------------------
// Fokker-Planck content

/// Coefficients read from the divergence form
/// d_t W = [drift_alpha d_a a + drift_conj d_ac ac + diffusion d_a d_ac + order0 + ...] W.
struct FpSpec {
    Poly drift_alpha;
    Poly drift_conj;
    Poly diffusion;
    Poly order0;                                  ///< sum of derivative-free terms at the origin monomial
    std::vector<std::pair<FormKey, Poly>> zero_order_terms;  ///< every derivative-free term
    std::vector<std::pair<FormKey, Poly>> other_terms;       ///< order 1-2 terms outside the drift/diffusion shape
    std::vector<std::pair<FormKey, Poly>> residual_terms;    ///< order > 2

    bool trace_preserving() const { return zero_order_terms.empty(); }
    bool is_ou() const { return other_terms.empty() && residual_terms.empty() && zero_order_terms.empty(); }
};

inline FpSpec extract_fp(const DiffForm& normal_form) {
    const DiffForm div = to_divergence_form(normal_form);
    FpSpec fp;
    for (const auto& [k, c] : div.terms()) {
        const int order = k[2] + k[3];
        if (order == 0) {
            fp.zero_order_terms.emplace_back(k, c);
            if (k == FormKey{0, 0, 0, 0}) fp.order0 = c;
        } else if (k == FormKey{1, 0, 1, 0}) {
            fp.drift_alpha = c;
        } else if (k == FormKey{0, 1, 0, 1}) {
            fp.drift_conj = c;
        } else if (k == FormKey{0, 0, 1, 1}) {
            fp.diffusion = c;
        } else if (order <= 2) {
            fp.other_terms.emplace_back(k, c);
        } else {
            fp.residual_terms.emplace_back(k, c);
        }
    }
    return fp;
}

}  // namespace wignerkit
