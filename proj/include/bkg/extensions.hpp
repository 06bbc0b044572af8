#pragma once

#include <vector>

#include "bkg/common.hpp"
#include "bkg/graph.hpp"

namespace bkg {

enum class OperatorKind { BK, BK2 };

const char* kind_name(OperatorKind k);

// A pair (A, B) with AB^+ = BA^+ and rank(A, B) = m.
struct ExtensionSpec {
    cmat A;
    cmat B;
    OperatorKind kind = OperatorKind::BK;
    int dim() const { return static_cast<int>(A.rows()); }
};

struct ValidationOptions {
    double hermiticity_tol = 1e-12;  // relative to max(1, |A| |B|)
    double rank_tol = 1e-10;         // relative to the largest singular value
};

ExtensionSpec validate_extension(const cmat& A, const cmat& B, OperatorKind kind,
                                 const ValidationOptions& opt = {});

// S = i (A + iB)^{-1} (A - iB); unitary and k-independent.
cmat s_matrix_bk(const ExtensionSpec& spec);

// Inverse map: a BK spec whose S-matrix is the given unitary.
ExtensionSpec spec_from_s_bk(const cmat& S);

struct DilationMatrices {
    rvec D_ab;  // (a_1..a_E, b_1..b_E)
    rvec I_pm;  // (+1..+1, -1..-1)
    cmat U;
    cmat J;
};

DilationMatrices dilation_matrices(const MetricGraph& g);

struct Decomposition {
    cmat P_ker;
    cmat P_perp;
    cmat L_prime;
    cmat L_dprime;
    cmat A_dprime;
    cmat B_dprime;
    rvec sigma_L;   // eigenvalues of L'' restricted to ran P_perp
    cmat sigma_V;   // matching orthonormal eigenvectors (columns)
    cmat ker_basis; // orthonormal basis of ker B'
    double rank_threshold = 0.0;

    int dim() const { return static_cast<int>(P_ker.rows()); }
    // Smallest positive element of sigma_L, or +inf.
    double min_positive_sigma() const;
    bool k_independent(double tol = 1e-12) const;
};

struct RankOptions {
    double rel_tol = 1e-10;
    // Reject singular values within two decades of the threshold.
    bool strict = true;
};

Decomposition kuchment_decompose(const ExtensionSpec& spec, const DilationMatrices& d,
                                 const RankOptions& opt = {});

// S''(k) = -(A'' - ik B'')(A'' + ik B'')^{-1}, evaluated through the
// eigenpairs of L'' so that k -> 0 is the continuous limit.
cmat s_matrix_bk2(const Decomposition& dec, cplx k);
// Plain LU evaluation of the same formula.
cmat s_matrix_bk2_direct(const Decomposition& dec, cplx k);
// dS''/dk.
cmat s_matrix_bk2_derivative(const Decomposition& dec, cplx k);

// Weight matrix of the BK2 bond picture: entry (i, j) is S''_{i, p(j)}
// where p swaps the two ends of an edge.
cmat bond_matrix_bk2(const cmat& s_dprime);

struct SquaredExtension {
    ExtensionSpec spec;
    cmat S_tilde;
    double block_residual = 0.0;  // max |S_tilde - [[0,S],[S^+,0]]|
    double l_dprime_norm = 0.0;
};

SquaredExtension squared_extension(const cmat& s_bk, const MetricGraph& g);

// True when S'' is k-independent with the block form [[0, X], [X^+, 0]].
bool is_squared_form(const Decomposition& dec, double tol = 1e-10);

bool is_time_reversal_symmetric(const cmat& S, double tol = 1e-12);

struct BoundaryCondition {
    enum class Kind { Dirichlet, Neumann, Robin, RingPhase, Kirchhoff };
    Kind kind = Kind::Dirichlet;
    std::vector<double> rho;      // Robin: one value or one per endpoint
    double c = 0.0;               // RingPhase, c in [0, 1)
    bool dirichlet_leaves = false;  // Kirchhoff: degree-one vertices Dirichlet
};

const char* bc_name(BoundaryCondition::Kind k);

ExtensionSpec standard_bc(const BoundaryCondition& bc, const MetricGraph& g);

// Conditions A_lap phi + B_lap phi'_in = 0 on phi(y) = sqrt(x) psi(x),
// y = ln(x/a), rewritten as a BK2 pair (A, B).
ExtensionSpec bk2_from_log_laplacian(const cmat& A_lap, const cmat& B_lap, const MetricGraph& g);

}  // namespace bkg
