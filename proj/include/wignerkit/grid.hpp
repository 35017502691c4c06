#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>

#include "wignerkit/errors.hpp"
#include "wignerkit/numeric.hpp"

namespace wignerkit {

/// Largest ordering parameter accepted for direct evaluation.
inline constexpr double kDefaultSCap = 0.99;

/// Uniform rectangular grid over the alpha plane, alpha = x + i y.
struct PhaseSpaceGrid {
    double re_min = -1.0;
    double re_max = 1.0;
    double im_min = -1.0;
    double im_max = 1.0;
    int n_re = 2;
    int n_im = 2;

    PhaseSpaceGrid() = default;
    PhaseSpaceGrid(double rmin, double rmax, int nr, double imin, double imax, int ni)
        : re_min(rmin), re_max(rmax), im_min(imin), im_max(imax), n_re(nr), n_im(ni) {
        validate();
    }
    static PhaseSpaceGrid square(double lo, double hi, int n) { return {lo, hi, n, lo, hi, n}; }

    void validate() const {
        require(n_re >= 2 && n_im >= 2, "PhaseSpaceGrid: need at least two nodes per axis");
        require(re_max > re_min && im_max > im_min, "PhaseSpaceGrid: empty range");
    }

    double h_re() const { return (re_max - re_min) / (n_re - 1); }
    double h_im() const { return (im_max - im_min) / (n_im - 1); }
    double x(int i) const { return re_min + i * h_re(); }
    double y(int j) const { return im_min + j * h_im(); }
    cplx node(int i, int j) const { return {x(i), y(j)}; }
    std::size_t size() const { return static_cast<std::size_t>(n_re) * static_cast<std::size_t>(n_im); }

    /// Trapezoidal weight of node (i, j).
    double weight(int i, int j) const {
        const double wx = (i == 0 || i == n_re - 1) ? 0.5 : 1.0;
        const double wy = (j == 0 || j == n_im - 1) ? 0.5 : 1.0;
        return wx * wy * h_re() * h_im();
    }

    bool is_square_centered(double tol = 1e-12) const {
        return n_re == n_im && std::abs(re_min + re_max) <= tol && std::abs(im_min + im_max) <= tol &&
               std::abs(re_max - im_max) <= tol;
    }

    friend bool operator==(const PhaseSpaceGrid&, const PhaseSpaceGrid&) = default;
};

/// Samples of W_s on a grid; values(i, j) is the value at grid.node(i, j).
struct WignerField {
    PhaseSpaceGrid grid;
    double s = 0.0;
    Eigen::MatrixXd values;
    std::string method;
    /// Largest discarded imaginary part of the point evaluations.
    double imag_residue = 0.0;

    double value(int i, int j) const { return values(i, j); }

    /// Trapezoidal integral of the field.
    double mass() const {
        NeumaierSum acc;
        for (int i = 0; i < grid.n_re; ++i)
            for (int j = 0; j < grid.n_im; ++j) acc.add(values(i, j) * grid.weight(i, j));
        return acc.value();
    }
};

}  // namespace wignerkit
