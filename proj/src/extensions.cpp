#include "bkg/extensions.hpp"

#include <cmath>
#include <limits>

namespace bkg {

namespace {

const cplx I1(0.0, 1.0);

double max_abs(const cmat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

cmat diag_c(const rvec& d) { return d.cast<cplx>().asDiagonal(); }

void require_square(const cmat& M, int m, const char* what) {
    if (M.rows() != m || M.cols() != m)
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has the wrong shape");
}

// -(lambda - ik)/(lambda + ik); the lambda = 0 branch is the constant 1.
cplx robin_phase(double lambda, cplx k, double scale) {
    if (std::abs(lambda) <= 1e-14 * scale) return 1.0;
    const cplx den = lambda + I1 * k;
    if (std::abs(den) <= 1e-13 * std::max(1.0, std::abs(lambda)))
        throw Error(ErrorCode::SingularAtK, "A'' + ikB'' is singular at this k");
    return -(lambda - I1 * k) / den;
}

cplx robin_phase_derivative(double lambda, cplx k, double scale) {
    if (std::abs(lambda) <= 1e-14 * scale) return 0.0;
    const cplx den = lambda + I1 * k;
    if (std::abs(den) <= 1e-13 * std::max(1.0, std::abs(lambda)))
        throw Error(ErrorCode::SingularAtK, "A'' + ikB'' is singular at this k");
    return 2.0 * I1 * lambda / (den * den);
}

double sigma_scale(const Decomposition& d) {
    return d.sigma_L.size() ? std::max(1.0, d.sigma_L.cwiseAbs().maxCoeff()) : 1.0;
}

}  // namespace

const char* kind_name(OperatorKind k) { return k == OperatorKind::BK ? "BK" : "BK2"; }

const char* bc_name(BoundaryCondition::Kind k) {
    switch (k) {
        case BoundaryCondition::Kind::Dirichlet: return "dirichlet";
        case BoundaryCondition::Kind::Neumann: return "neumann";
        case BoundaryCondition::Kind::Robin: return "robin";
        case BoundaryCondition::Kind::RingPhase: return "ring_phase";
        case BoundaryCondition::Kind::Kirchhoff: return "kirchhoff";
    }
    return "unknown";
}

ExtensionSpec validate_extension(const cmat& A, const cmat& B, OperatorKind kind,
                                 const ValidationOptions& opt) {
    const int m = static_cast<int>(A.rows());
    if (m == 0) throw Error(ErrorCode::DimensionMismatch, "empty boundary matrices");
    require_square(A, m, "A");
    require_square(B, m, "B");
    if (kind == OperatorKind::BK2 && m % 2 != 0)
        throw Error(ErrorCode::DimensionMismatch, "BK2 boundary matrices need even size 2E");
    if (!A.allFinite() || !B.allFinite())
        throw Error(ErrorCode::ValidationError, "boundary matrices contain non-finite entries");

    const double scale = std::max(1.0, A.norm() * B.norm());
    const cmat defect = A * B.adjoint() - B * A.adjoint();
    if (max_abs(defect) > opt.hermiticity_tol * scale)
        throw Error(ErrorCode::HermiticityViolation, "AB^+ differs from BA^+");

    cmat AB(m, 2 * m);
    AB << A, B;
    const rvec sv = Eigen::JacobiSVD<cmat>(AB).singularValues();
    const double tau = opt.rank_tol * sv[0];
    if (sv[0] == 0.0 || sv[m - 1] <= tau)
        throw Error(ErrorCode::RankDeficient, "rank(A, B) is below the matrix size");

    for (double sgn : {1.0, -1.0}) {
        const rvec s = Eigen::JacobiSVD<cmat>(A + sgn * I1 * B).singularValues();
        if (s[m - 1] <= 1e-12 * s[0])
            throw Error(ErrorCode::SingularMatrix, "A +- iB is numerically singular");
    }
    return {A, B, kind};
}

cmat s_matrix_bk(const ExtensionSpec& spec) {
    // Left-division keeps S invariant under (A, B) -> (CA, CB).
    Eigen::PartialPivLU<cmat> lu(spec.A + I1 * spec.B);
    return I1 * lu.solve(spec.A - I1 * spec.B);
}

ExtensionSpec spec_from_s_bk(const cmat& S) {
    const int m = static_cast<int>(S.rows());
    const cmat Sp = -I1 * S;
    const cmat Id = cmat::Identity(m, m);
    return {0.5 * (Id + Sp), -0.5 * I1 * (Id - Sp), OperatorKind::BK};
}

DilationMatrices dilation_matrices(const MetricGraph& g) {
    const int E = g.num_edges();
    if (E == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
    DilationMatrices d;
    d.D_ab.resize(2 * E);
    d.D_ab << g.a_values(), g.b_values();
    d.I_pm.resize(2 * E);
    d.I_pm << rvec::Ones(E), -rvec::Ones(E);
    const cmat Id = cmat::Identity(E, E);
    d.U.resize(2 * E, 2 * E);
    d.U << I1 * Id, Id, -Id, -I1 * Id;
    d.U /= std::sqrt(2.0);
    d.J = cmat::Zero(2 * E, 2 * E);
    d.J.topRightCorner(E, E) = Id;
    d.J.bottomLeftCorner(E, E) = -Id;
    return d;
}

double Decomposition::min_positive_sigma() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sigma_L.size(); ++j)
        if (sigma_L[j] > 1e-14 * std::max(1.0, sigma_L.cwiseAbs().maxCoeff()))
            best = std::min(best, sigma_L[j]);
    return best;
}

bool Decomposition::k_independent(double tol) const {
    return sigma_L.size() == 0 || sigma_L.cwiseAbs().maxCoeff() <= tol;
}

Decomposition kuchment_decompose(const ExtensionSpec& spec, const DilationMatrices& d,
                                 const RankOptions& opt) {
    const int m = spec.dim();
    if (spec.kind != OperatorKind::BK2)
        throw Error(ErrorCode::ValidationError, "decomposition applies to BK2 specs only");
    if (d.D_ab.size() != m)
        throw Error(ErrorCode::DimensionMismatch, "boundary matrices do not match the graph");

    const rvec sq = d.D_ab.cwiseSqrt();
    const cmat Ap = spec.A * diag_c(sq);
    const cmat Bp = spec.B * diag_c(sq.cwiseInverse());

    Eigen::JacobiSVD<cmat> svd(Bp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const rvec& s = svd.singularValues();
    const double tau = s[0] > 0.0 ? opt.rel_tol * s[0] : 0.0;
    int r = 0;
    for (int j = 0; j < m; ++j) {
        if (opt.strict && s[0] > 0.0 && s[j] > 1e-2 * tau && s[j] < 1e2 * tau)
            throw Error(ErrorCode::RankAmbiguous,
                        "a singular value of B' sits near the rank threshold; "
                        "pass an explicit tolerance");
        if (s[j] > tau) ++r;
    }

    Decomposition dec;
    dec.rank_threshold = tau;
    const cmat Id = cmat::Identity(m, m);
    const cmat Vr = svd.matrixV().leftCols(r);
    dec.ker_basis = svd.matrixV().rightCols(m - r);
    dec.P_perp = Vr * Vr.adjoint();
    dec.P_ker = Id - dec.P_perp;

    cmat pinv = cmat::Zero(m, m);
    if (r > 0) {
        const rvec inv_s = s.head(r).cwiseInverse();
        pinv = Vr * diag_c(inv_s) * svd.matrixU().leftCols(r).adjoint();
    }
    dec.L_prime = pinv * Ap * dec.P_perp;
    const cmat L2 = dec.P_perp * (dec.L_prime - 0.5 * diag_c(d.I_pm)) * dec.P_perp;
    dec.L_dprime = 0.5 * (L2 + L2.adjoint());
    dec.A_dprime = dec.P_ker + dec.L_dprime;
    dec.B_dprime = dec.P_perp;

    if (r > 0) {
        const cmat Lr = Vr.adjoint() * dec.L_dprime * Vr;
        Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (Lr + Lr.adjoint()));
        dec.sigma_L = es.eigenvalues();
        dec.sigma_V = Vr * es.eigenvectors();
        const double cut = 1e-13 * std::max(1.0, dec.sigma_L.cwiseAbs().maxCoeff());
        for (Eigen::Index j = 0; j < dec.sigma_L.size(); ++j)
            if (std::abs(dec.sigma_L[j]) <= cut) dec.sigma_L[j] = 0.0;
    } else {
        dec.sigma_L.resize(0);
        dec.sigma_V.resize(m, 0);
    }
    return dec;
}

cmat s_matrix_bk2(const Decomposition& dec, cplx k) {
    const double scale = sigma_scale(dec);
    cmat S = -dec.ker_basis * dec.ker_basis.adjoint();
    for (Eigen::Index j = 0; j < dec.sigma_L.size(); ++j) {
        const cvec v = dec.sigma_V.col(j);
        S += robin_phase(dec.sigma_L[j], k, scale) * (v * v.adjoint());
    }
    return S;
}

cmat s_matrix_bk2_derivative(const Decomposition& dec, cplx k) {
    const double scale = sigma_scale(dec);
    const int m = dec.dim();
    cmat dS = cmat::Zero(m, m);
    for (Eigen::Index j = 0; j < dec.sigma_L.size(); ++j) {
        const cvec v = dec.sigma_V.col(j);
        dS += robin_phase_derivative(dec.sigma_L[j], k, scale) * (v * v.adjoint());
    }
    return dS;
}

cmat s_matrix_bk2_direct(const Decomposition& dec, cplx k) {
    const cmat den = dec.A_dprime + I1 * k * dec.B_dprime;
    Eigen::FullPivLU<cmat> lu(den);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularAtK, "A'' + ikB'' is singular at this k");
    return -(dec.A_dprime - I1 * k * dec.B_dprime) * lu.inverse();
}

cmat bond_matrix_bk2(const cmat& s_dprime) {
    const Eigen::Index m = s_dprime.rows();
    const Eigen::Index E = m / 2;
    cmat M(m, m);
    M.leftCols(E) = s_dprime.rightCols(E);
    M.rightCols(E) = s_dprime.leftCols(E);
    return M;
}

SquaredExtension squared_extension(const cmat& s_bk, const MetricGraph& g) {
    const int E = g.num_edges();
    require_square(s_bk, E, "S");
    if (max_abs(s_bk.adjoint() * s_bk - cmat::Identity(E, E)) > 1e-10)
        throw Error(ErrorCode::ValidationError, "S is not unitary");

    const rvec a = g.a_values(), b = g.b_values();
    const cmat Id = cmat::Identity(E, E);
    // sqrt(a) psi(a) = S sqrt(b) psi(b) and a^{3/2} psi'(a) = S b^{3/2} psi'(b)
    // in the boundary form A D Psi + B D Psi' = 0 with inward derivatives.
    cmat A = cmat::Zero(2 * E, 2 * E), B = cmat::Zero(2 * E, 2 * E);
    A.topLeftCorner(E, E) = -Id;
    A.topRightCorner(E, E) = diag_c(a.cwiseSqrt()) * s_bk * diag_c(b.cwiseSqrt().cwiseInverse());
    B.bottomLeftCorner(E, E) = Id;
    B.bottomRightCorner(E, E) = diag_c(a.cwiseSqrt().cwiseInverse()) * s_bk * diag_c(b.cwiseSqrt());

    SquaredExtension out;
    out.spec = validate_extension(A, B, OperatorKind::BK2, {1e-10, 1e-10});
    const Decomposition dec = kuchment_decompose(out.spec, dilation_matrices(g));
    out.S_tilde = s_matrix_bk2_direct(dec, 1.0);
    cmat block = cmat::Zero(2 * E, 2 * E);
    block.topRightCorner(E, E) = s_bk;
    block.bottomLeftCorner(E, E) = s_bk.adjoint();
    out.block_residual = max_abs(out.S_tilde - block);
    out.l_dprime_norm = max_abs(dec.L_dprime);
    return out;
}

bool is_squared_form(const Decomposition& dec, double tol) {
    const int m = dec.dim();
    if (m % 2 != 0 || !dec.k_independent(tol)) return false;
    const int E = m / 2;
    const cmat S = s_matrix_bk2(dec, 1.0);
    if (max_abs(S.topLeftCorner(E, E)) > tol || max_abs(S.bottomRightCorner(E, E)) > tol) return false;
    const cmat X = S.topRightCorner(E, E);
    return max_abs(S.bottomLeftCorner(E, E) - X.adjoint()) <= tol &&
           max_abs(X.adjoint() * X - cmat::Identity(E, E)) <= tol;
}

bool is_time_reversal_symmetric(const cmat& S, double tol) {
    return max_abs(S - S.transpose()) <= tol;
}

ExtensionSpec bk2_from_log_laplacian(const cmat& A_lap, const cmat& B_lap, const MetricGraph& g) {
    const DilationMatrices d = dilation_matrices(g);
    const int m = static_cast<int>(d.D_ab.size());
    require_square(A_lap, m, "A_lap");
    require_square(B_lap, m, "B_lap");
    const rvec sq = d.D_ab.cwiseSqrt();
    const cmat A = (A_lap + 0.5 * B_lap * diag_c(d.I_pm)) * diag_c(sq.cwiseInverse());
    const cmat B = B_lap * diag_c(sq);
    return validate_extension(A, B, OperatorKind::BK2, {1e-10, 1e-10});
}

ExtensionSpec standard_bc(const BoundaryCondition& bc, const MetricGraph& g) {
    const int E = g.num_edges();
    if (E == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
    const int m = 2 * E;
    const cmat Id = cmat::Identity(m, m);
    using K = BoundaryCondition::Kind;

    switch (bc.kind) {
        case K::Dirichlet:
            return validate_extension(Id, cmat::Zero(m, m), OperatorKind::BK2);
        case K::Neumann:
            return bk2_from_log_laplacian(cmat::Zero(m, m), Id, g);
        case K::Robin: {
            rvec rho(m);
            if (bc.rho.size() == 1) rho.setConstant(bc.rho[0]);
            else if (static_cast<int>(bc.rho.size()) == m)
                for (int j = 0; j < m; ++j) rho[j] = bc.rho[j];
            else throw Error(ErrorCode::ParameterOutOfRange, "robin needs 1 or 2E values of rho");
            if (!rho.allFinite()) throw Error(ErrorCode::ParameterOutOfRange, "rho must be finite");
            return bk2_from_log_laplacian(diag_c(rho), Id, g);
        }
        case K::RingPhase: {
            if (!(bc.c >= 0.0 && bc.c < 1.0))
                throw Error(ErrorCode::ParameterOutOfRange, "ring phase c must lie in [0, 1)");
            cmat S = cmat::Zero(E, E);
            const cplx phase = std::exp(-2.0 * pi * I1 * bc.c);
            for (int v = 0; v < g.num_vertices(); ++v) {
                int in = -1, out = -1, n_in = 0, n_out = 0;
                for (int e = 0; e < E; ++e) {
                    if (g.vertex_index(g.edges()[e].to) == v) { in = e; ++n_in; }
                    if (g.vertex_index(g.edges()[e].from) == v) { out = e; ++n_out; }
                }
                if (n_in != 1 || n_out != 1)
                    throw Error(ErrorCode::ParameterOutOfRange,
                                "ring phase needs one incoming and one outgoing edge per vertex");
                S(out, in) = phase;
            }
            return validate_extension(spec_from_s_bk(S).A, spec_from_s_bk(S).B, OperatorKind::BK);
        }
        case K::Kirchhoff: {
            cmat Pperp = cmat::Zero(m, m);
            for (int v = 0; v < g.num_vertices(); ++v) {
                std::vector<int> ends;
                for (int j = 0; j < m; ++j)
                    if (g.endpoint_vertex(j) == v) ends.push_back(j);
                if (ends.size() == 1 && bc.dirichlet_leaves) continue;
                const double w = 1.0 / static_cast<double>(ends.size());
                for (int i : ends)
                    for (int j : ends) Pperp(i, j) = w;
            }
            return bk2_from_log_laplacian(Id - Pperp, Pperp, g);
        }
    }
    throw Error(ErrorCode::ParameterOutOfRange, "unknown boundary condition");
}

}  // namespace bkg
