#pragma once

#include <cmath>
#include <random>

#include "bkg/extensions.hpp"

namespace bkg::testing {

inline cmat random_gaussian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    cmat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

// Haar-distributed unitary via QR with phase correction.
inline cmat random_unitary(int n, std::mt19937_64& rng) {
    Eigen::HouseholderQR<cmat> qr(random_gaussian(n, rng));
    cmat Q = qr.householderQ();
    const cmat R = qr.matrixQR();
    for (int j = 0; j < n; ++j) Q.col(j) *= R(j, j) / std::abs(R(j, j));
    return Q;
}

// A = i(U - I), B = U + I satisfies AB^+ = BA^+ with full rank.
inline ExtensionSpec random_extension(int n, OperatorKind kind, std::mt19937_64& rng) {
    const cmat U = random_unitary(n, rng);
    const cmat Id = cmat::Identity(n, n);
    return validate_extension(cplx(0.0, 1.0) * (U - Id), U + Id, kind);
}

inline double max_abs(const cmat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace bkg::testing
