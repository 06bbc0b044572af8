#pragma once

#include <optional>
#include <vector>

#include "bkg/common.hpp"
#include "bkg/extensions.hpp"
#include "bkg/graph.hpp"

namespace bkg {

// The unitary family k -> S T(k) whose eigenvalue-one crossings are the spectrum.
class SecularSystem {
public:
    static SecularSystem bk(const MetricGraph& g, const ExtensionSpec& spec);
    static SecularSystem bk2(const MetricGraph& g, const ExtensionSpec& spec,
                             const RankOptions& rank = {});
    static SecularSystem from_spec(const MetricGraph& g, const ExtensionSpec& spec,
                                   const RankOptions& rank = {});

    OperatorKind kind() const { return kind_; }
    const MetricGraph& graph() const { return graph_; }
    const rvec& lengths() const { return lengths_; }
    int dim() const { return kind_ == OperatorKind::BK ? graph_.num_edges() : 2 * graph_.num_edges(); }
    const cmat& s_bk() const { return s_; }
    const Decomposition& decomposition() const { return dec_; }

    // S (BK) or S''(k) (BK2).
    cmat s_at(cplx k) const;
    cmat t_at(cplx k) const;
    cmat u_matrix(cplx k) const { return s_at(k) * t_at(k); }
    // Weights of the bond picture used for orbit sums.
    cmat bond_matrix(cplx k) const;
    std::vector<double> bond_lengths() const;

private:
    OperatorKind kind_ = OperatorKind::BK;
    MetricGraph graph_;
    rvec lengths_;
    cmat s_;
    Decomposition dec_;
};

cmat t_matrix(OperatorKind kind, const rvec& lengths, cplx k);
cmat t_matrix(OperatorKind kind, const MetricGraph& g, cplx k);

cplx secular_bk(const SecularSystem& sys, cplx k);
cplx secular_bk2(const SecularSystem& sys, cplx k);
cplx secular(const SecularSystem& sys, cplx k);

// Eigenphases of a unitary matrix, each in [0, 2 pi).
rvec eigenphases(const cmat& U);
// Number of eigenphases within tol of 0 mod 2 pi.
int unit_eigenvalue_count(const cmat& U, double tol = 1e-8);
// dim ker(I - M), singular values below tol * max(1, |M|).
int nullity_of_one_minus(const cmat& M, double tol = 1e-8);

struct ZeroMode {
    int g0 = 0;
    int N = 0;
};

cmat zero_mode_matrix(const rvec& lengths, double k_probe);
ZeroMode zero_mode_test(const SecularSystem& sys, double k_probe = 1.0);
ZeroMode zero_mode_test(const Decomposition& dec, const rvec& lengths, double k_probe = 1.0);

struct Level {
    double k = 0.0;
    int g = 1;
};

struct NegativeLevel {
    double kappa = 0.0;  // lambda = -kappa^2
    int g = 1;
};

struct SolverOptions {
    double tol = 1e-12;       // bracket width at which a root is accepted
    double step = 0.0;        // 0 selects pi / (4 L)
    int threads = 1;
    double mult_tol = 1e-8;   // eigenphase distance counted as a unit eigenvalue
    int max_depth = 60;       // bisections before a cluster is reported
    int max_refine = 10;      // step refinements before ToleranceTooCoarse
};

struct SolverDiagnostics {
    double scan_step = 0.0;
    double k_mono = 0.0;      // BK2 eigenphases are increasing above this
    long grid_points = 0;
    long refinements = 0;
    long evaluations = 0;
    long clusters = 0;
};

struct Spectrum {
    OperatorKind kind = OperatorKind::BK;
    std::vector<Level> levels;
    std::optional<ZeroMode> zero_mode;
    std::vector<NegativeLevel> negative;
    double k_min = 0.0;
    double k_max = 0.0;
    SolverDiagnostics diag;

    int total_multiplicity() const;
};

Spectrum find_spectrum(const SecularSystem& sys, double k_min, double k_max,
                       const SolverOptions& opt = {});

std::vector<NegativeLevel> find_negative_eigenvalues(const SecularSystem& sys, double kappa_max);

enum class Side { Positive, TwoSided };

// Positive: sum of g_n over 0 < k_n <= k.  TwoSided: over |k_n| <= k.
int counting_function(const Spectrum& spec, double k, Side side = Side::Positive);

struct WeylFit {
    double slope = 0.0;
    double intercept = 0.0;
    double target = 0.0;
    double relative_error = 0.0;
    int levels_used = 0;
};

// Target slope: L/pi for BK2 and for two-sided BK counting, L/(2 pi) for
// one-sided BK counting.
double weyl_target(OperatorKind kind, const MetricGraph& g, Side side);
WeylFit weyl_fit(const Spectrum& spec, const MetricGraph& g, Side side = Side::Positive);

}  // namespace bkg
