#pragma once

// Minimal RAII wrapper over MPFR with a per-value precision. Used where a
// trace form sums terms that cancel far beyond double precision.

#include <mpfr.h>

#include <cmath>
#include <utility>

namespace wignerkit {

class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t prec, double x = 0.0) {
        mpfr_init2(v_, prec);
        mpfr_set_d(v_, x, MPFR_RNDN);
    }
    BigFloat(const BigFloat& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigFloat(BigFloat&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

    BigFloat& operator+=(const BigFloat& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator-=(const BigFloat& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator*=(const BigFloat& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator/=(const BigFloat& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator*=(double d) { mpfr_mul_d(v_, v_, d, MPFR_RNDN); return *this; }
    BigFloat& operator/=(double d) { mpfr_div_d(v_, v_, d, MPFR_RNDN); return *this; }
    BigFloat& operator+=(double d) { mpfr_add_d(v_, v_, d, MPFR_RNDN); return *this; }

    friend BigFloat operator+(BigFloat a, const BigFloat& b) { return a += b; }
    friend BigFloat operator-(BigFloat a, const BigFloat& b) { return a -= b; }
    friend BigFloat operator*(BigFloat a, const BigFloat& b) { return a *= b; }
    BigFloat operator-() const {
        BigFloat r(*this);
        mpfr_neg(r.v_, r.v_, MPFR_RNDN);
        return r;
    }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    /// Binary exponent e with |x| in [2^{e-1}, 2^e); very negative for zero.
    long exponent() const { return is_zero() ? -(1L << 40) : static_cast<long>(mpfr_get_exp(v_)); }

    /// Splits into mantissa m (|m| in [0.5, 1)) and exponent e with x = m 2^e.
    std::pair<double, long> frexp() const {
        long e = 0;
        double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
        return {m, e};
    }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

private:
    mpfr_t v_;
};

struct BigComplex {
    BigFloat re;
    BigFloat im;

    explicit BigComplex(mpfr_prec_t prec, double r = 0.0, double i = 0.0) : re(prec, r), im(prec, i) {}

    BigComplex& operator+=(const BigComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    BigComplex& operator*=(const BigComplex& o) {
        BigFloat nr = re * o.re - im * o.im;
        BigFloat ni = re * o.im;
        ni += im * o.re;
        re = std::move(nr);
        im = std::move(ni);
        return *this;
    }
    BigComplex& operator*=(const BigFloat& f) {
        re *= f;
        im *= f;
        return *this;
    }
    BigComplex& operator*=(double d) {
        re *= d;
        im *= d;
        return *this;
    }
    friend BigComplex operator*(BigComplex a, const BigComplex& b) { return a *= b; }

    /// Largest binary exponent of the two parts.
    long exponent() const { return std::max(re.exponent(), im.exponent()); }
};

}  // namespace wignerkit
