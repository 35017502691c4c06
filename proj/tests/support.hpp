#pragma once

#include <random>

#include "wignerkit/fock.hpp"

namespace testsupport {

/// Random full-rank density matrix from a complex Ginibre matrix G: G G^+ / tr.
inline wignerkit::DensityMatrix random_density(int n_max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const int d = n_max + 1;
    wignerkit::CMatrix g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = {nd(rng), nd(rng)};
    wignerkit::CMatrix r = g * g.adjoint();
    r /= r.trace().real();
    r = 0.5 * (r + r.adjoint()).eval();
    return {wignerkit::FockDim(n_max), r};
}

}  // namespace testsupport
