#pragma once

// Exact multivariate polynomials with complex-rational coefficients. Used as
// the coefficient ring of differential forms: the variables are the ordering
// parameter `s` and named real parameters of a master equation.

#include <boost/multiprecision/gmp.hpp>

#include <complex>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "wignerkit/errors.hpp"

namespace wignerkit {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;

/// a + b i with rational a, b.
struct CRational {
    Rational re{0};
    Rational im{0};

    CRational() = default;
    CRational(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}
    CRational(long n) : re(n), im(0) {}

    static CRational unit_i() { return {Rational(0), Rational(1)}; }

    bool is_zero() const { return re == 0 && im == 0; }
    CRational conj() const { return {re, -im}; }

    CRational& operator+=(const CRational& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    CRational& operator-=(const CRational& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    friend CRational operator+(CRational a, const CRational& b) { return a += b; }
    friend CRational operator-(CRational a, const CRational& b) { return a -= b; }
    friend CRational operator*(const CRational& a, const CRational& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    CRational operator-() const { return {-re, -im}; }
    friend CRational operator/(const CRational& a, const CRational& b) {
        const Rational den = b.re * b.re + b.im * b.im;
        if (den == 0) throw ValidationError("division by zero");
        return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
    }
    friend bool operator==(const CRational& a, const CRational& b) { return a.re == b.re && a.im == b.im; }

    std::complex<double> to_complex() const {
        return {static_cast<double>(re), static_cast<double>(im)};
    }

    std::string str() const {
        auto r = [](const Rational& q) {
            std::ostringstream os;
            os << q;
            return os.str();
        };
        if (im == 0) return r(re);
        if (re == 0) {
            if (im == 1) return "i";
            if (im == -1) return "-i";
            return r(im) + "*i";
        }
        return "(" + r(re) + (im > 0 ? "+" : "-") + (abs(im) == 1 ? std::string("i") : r(abs(im)) + "*i") + ")";
    }
};

/// Variable name -> exponent (absent means 0).
using Monomial = std::map<std::string, int>;

class Poly {
public:
    Poly() = default;
    Poly(long c) {
        if (c != 0) terms_[{}] = CRational(c);
    }
    Poly(const CRational& c) {
        if (!c.is_zero()) terms_[{}] = c;
    }
    static Poly var(const std::string& name) {
        Poly p;
        p.terms_[{{name, 1}}] = CRational(1);
        return p;
    }
    static Poly rational(long num, long den) { return Poly(CRational(Rational(num, den))); }

    const std::map<Monomial, CRational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    CRational constant_value() const {
        auto it = terms_.find({});
        return it == terms_.end() ? CRational() : it->second;
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    Poly operator-() const {
        Poly r;
        for (const auto& [m, c] : terms_) r.terms_[m] = -c;
        return r;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly r;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m = ma;
                for (const auto& [v, e] : mb) m[v] += e;
                r.add_term(m, ca * cb);
            }
        return r;
    }
    Poly& operator*=(const Poly& o) { return *this = *this * o; }
    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

    /// Complex conjugate, with every variable treated as real.
    Poly conj() const {
        Poly r;
        for (const auto& [m, c] : terms_) r.terms_[m] = c.conj();
        return r;
    }

    Poly pow(int n) const {
        require(n >= 0, "Poly::pow: negative exponent");
        Poly r(1);
        for (int k = 0; k < n; ++k) r *= *this;
        return r;
    }

    /// Replaces the listed variables by exact values.
    Poly substitute(const std::map<std::string, CRational>& values) const {
        Poly r;
        for (const auto& [m, c] : terms_) {
            Poly t(c);
            Monomial rest;
            for (const auto& [v, e] : m) {
                auto it = values.find(v);
                if (it == values.end()) {
                    rest[v] = e;
                } else {
                    Poly val(it->second);
                    t *= val.pow(e);
                }
            }
            Poly mono;
            mono.terms_[rest] = CRational(1);
            r += t * mono;
        }
        return r;
    }

    /// Numeric value; every variable must be bound.
    std::complex<double> evaluate(const std::map<std::string, std::complex<double>>& values) const {
        std::complex<double> acc = 0.0;
        for (const auto& [m, c] : terms_) {
            std::complex<double> t = c.to_complex();
            for (const auto& [v, e] : m) {
                auto it = values.find(v);
                if (it == values.end()) throw ValidationError("unbound parameter '" + v + "'");
                t *= std::pow(it->second, e);
            }
            acc += t;
        }
        return acc;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [m, c] : terms_) {
            std::string mono;
            for (const auto& [v, e] : m) {
                if (!mono.empty()) mono += "*";
                mono += v;
                if (e != 1) mono += "^" + std::to_string(e);
            }
            std::string coef = c.str();
            bool neg = false;
            if (c.im == 0 && c.re < 0) {
                neg = true;
                coef = CRational(-c.re).str();
            } else if (c.re == 0 && c.im < 0) {
                neg = true;
                coef = CRational(Rational(0), -c.im).str();
            }
            std::string body;
            if (mono.empty())
                body = coef;
            else if (coef == "1")
                body = mono;
            else
                body = coef + "*" + mono;
            if (first)
                out += neg ? "-" + body : body;
            else
                out += neg ? " - " + body : " + " + body;
            first = false;
        }
        return out;
    }

private:
    void add_term(const Monomial& m, const CRational& c) {
        Monomial clean;
        for (const auto& [v, e] : m)
            if (e != 0) clean[v] = e;
        auto it = terms_.find(clean);
        if (it == terms_.end()) {
            if (!c.is_zero()) terms_.emplace(clean, c);
            return;
        }
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }

    std::map<Monomial, CRational> terms_;
};

}  // namespace wignerkit
