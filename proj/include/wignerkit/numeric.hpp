#pragma once

// Numerical building blocks shared by the phase-space modules: log-factorials,
// overflow-safe Laguerre sequences, compensated sums, Gauss-Legendre nodes,
// finite-difference weights and a deterministic parallel loop.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "wignerkit/errors.hpp"

namespace wignerkit {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// log(n!) for n >= 0.
inline double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(1025);
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (n < static_cast<int>(table.size())) return table[static_cast<std::size_t>(n)];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// A real number stored as mantissa * exp(log_scale); keeps Laguerre values
/// representable for large orders and arguments.
struct ScaledReal {
    double mantissa = 0.0;
    double log_scale = 0.0;

    double sign() const { return mantissa < 0 ? -1.0 : (mantissa > 0 ? 1.0 : 0.0); }
    /// log|value|; -inf for zero.
    double log_abs() const {
        return mantissa == 0.0 ? -std::numeric_limits<double>::infinity()
                               : std::log(std::abs(mantissa)) + log_scale;
    }
};

/// L_j^{(k)}(x) for j = 0..n via the three-term recurrence with rescaling.
inline std::vector<ScaledReal> laguerre_sequence(int n, int k, double x) {
    std::vector<ScaledReal> out(static_cast<std::size_t>(n + 1));
    double prev = 0.0;
    double cur = 1.0;
    double scale = 0.0;
    out[0] = {1.0, 0.0};
    if (n == 0) return out;
    prev = 1.0;
    cur = 1.0 + k - x;
    out[1] = {cur, 0.0};
    constexpr double kBig = 1e150;
    const double log_big = std::log(kBig);
    for (int j = 1; j < n; ++j) {
        double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            prev /= kBig;
            scale += log_big;
        }
        out[static_cast<std::size_t>(j + 1)] = {cur, scale};
    }
    return out;
}

/// Neumaier-compensated accumulator.
class NeumaierSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class ComplexNeumaierSum {
public:
    void add(cplx v) {
        re_.add(v.real());
        im_.add(v.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    NeumaierSum re_;
    NeumaierSum im_;
};

/// Gauss-Legendre nodes and weights on [a, b].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule gauss_legendre(int n, double a, double b) {
    require(n >= 1, "gauss_legendre: need at least one node");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at converged node
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 0; j < n; ++j) {
            double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = mid - half * z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = mid + half * z;
        rule.weights[static_cast<std::size_t>(i)] = half * w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = half * w;
    }
    return rule;
}

/// Fornberg weights for the `order`-th derivative at `x0` from samples at `xs`.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int order) {
    const int n = static_cast<int>(xs.size()) - 1;
    require(order <= n, "fd_weights: stencil too small for derivative order");
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1),
                                       std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[static_cast<std::size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) w[static_cast<std::size_t>(i)] = c[i][order];
    return w;
}

/// Worker count: explicit request wins, then WIGNERKIT_THREADS, then hardware.
inline unsigned resolve_threads(int requested = 0) {
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("WIGNERKIT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, n) over contiguous static blocks. Each index is
/// handled by exactly one call, so results written per index do not depend
/// on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t block = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * block;
                const std::size_t hi = std::min(n, lo + block);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace wignerkit
