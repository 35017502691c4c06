#pragma once

// Grid-based positivity analysis of W_s and the largest ordering parameter
// for which a state's quasi-probability stays non-negative.

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/wigner.hpp"

namespace wignerkit {

struct GridMinimum {
    double value = 0.0;
    cplx location{};
};

/// Exact minimum over the grid nodes (first node wins on ties).
inline GridMinimum min_on_grid(const WignerField& field) {
    GridMinimum out{field.values(0, 0), field.grid.node(0, 0)};
    for (int i = 0; i < field.grid.n_re; ++i)
        for (int j = 0; j < field.grid.n_im; ++j)
            if (field.values(i, j) < out.value) out = {field.values(i, j), field.grid.node(i, j)};
    return out;
}

/// W_s(0) from the diagonal of rho.
inline double parity_point_value(const DensityMatrix& rho, double s) {
    if (!(s < 1.0)) throw ValidationError("parity_point_value: requires s < 1");
    return wigner_origin_diagonal(rho, s);
}

struct PositivityOptions {
    double s_lo = -1.0;
    double s_hi = kDefaultSCap;
    double tol_s = 1e-3;
    double eps_pos = 1e-9;
    int threads = 0;
};

struct PositivityReport {
    double s_star = 0.0;
    std::vector<std::pair<double, double>> min_curve;  ///< (s, min W_s) in evaluation order
    PhaseSpaceGrid grid;
    std::vector<std::string> flags;
};

/// Bisection on s for the predicate min_grid W_s >= -eps_pos, with the field
/// supplied by `field_at(s)`. The predicate is taken to be monotone in s
/// (lower s is a Gaussian smoothing).
template <class FieldAt>
PositivityReport max_positive_s_of(FieldAt&& field_at, const PhaseSpaceGrid& grid, const PositivityOptions& opt = {}) {
    if (!(opt.s_lo < opt.s_hi)) throw ValidationError("max_positive_s: requires s_lo < s_hi");
    require(opt.tol_s > 0.0, "max_positive_s: tol_s must be positive");
    PositivityReport rep;
    rep.grid = grid;
    auto passes = [&](double s) {
        const WignerField f = field_at(s);
        const double m = min_on_grid(f).value;
        rep.min_curve.emplace_back(s, m);
        return m >= -opt.eps_pos;
    };
    if (passes(opt.s_hi)) {
        rep.s_star = opt.s_hi;
        rep.flags.push_back("positive throughout scan range");
        return rep;
    }
    if (!passes(opt.s_lo)) {
        rep.s_star = opt.s_lo;
        rep.flags.push_back("positive only below scan range");
        return rep;
    }
    double lo = opt.s_lo;
    double hi = opt.s_hi;
    while (hi - lo > opt.tol_s) {
        const double mid = 0.5 * (lo + hi);
        if (passes(mid))
            lo = mid;
        else
            hi = mid;
    }
    rep.s_star = lo;
    return rep;
}

inline PositivityReport max_positive_s(const DensityMatrix& rho, const PhaseSpaceGrid& grid,
                                       const PositivityOptions& opt = {}) {
    FieldOptions fo;
    fo.threads = opt.threads;
    fo.s_cap = std::max(opt.s_hi, kDefaultSCap);
    return max_positive_s_of([&](double s) { return field_on_grid(rho, grid, s, WignerMethod::Auto, fo); }, grid, opt);
}

}  // namespace wignerkit
