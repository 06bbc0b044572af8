#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bkg/spectra.hpp"

namespace bkg {

// Even test function h with its Fourier transform hat(y) = (1/2pi) int h(k) e^{iky} dk.
class TestFunction {
public:
    enum class Kind { Gaussian, GaussianShifted, Tabulated };

    // e^{-k^2 t}
    static TestFunction gaussian(double t);
    // (e^{-(k-k0)^2 t} + e^{-(k+k0)^2 t}) / 2
    static TestFunction gaussian_shifted(double t, double k0);
    // Samples on k >= 0, extended evenly, linear in between, zero beyond.
    static TestFunction tabulated(std::vector<double> k, std::vector<double> h);

    Kind kind() const { return kind_; }
    double t() const { return t_; }
    double k0() const { return k0_; }

    double operator()(double k) const;
    double hat(double y) const;
    // Upper bound of |h| on [k, inf), k >= 0.
    double envelope(double k) const;
    // Upper bound of |hat| on [y, inf), y >= 0.
    double hat_envelope(double y) const;
    // |h(k)| < 1e-18 * h(0) beyond this.
    double support_radius() const;

private:
    Kind kind_ = Kind::Gaussian;
    double t_ = 1.0;
    double k0_ = 0.0;
    std::vector<double> tk_, th_;
};

double fourier_hat(const TestFunction& h, double y);

struct LhsResult {
    double value = 0.0;
    double tail_bound = 0.0;
};

// sum g_n h(k_n); BK2 adds g0 h(0) for the zero mode.
LhsResult trace_lhs(const Spectrum& spec, const SecularSystem& sys, const TestFunction& h,
                    double eps = 1e-10);

struct TraceOptions {
    double orbit_cutoff = 0.0;  // 0 selects the default for the test function
    double eps = 1e-10;
};

struct TraceReport {
    double lhs = 0.0;
    double lhs_tail_bound = 0.0;
    double weyl = 0.0;
    double boundary = 0.0;
    double s_integral = 0.0;
    double orbit_sum = 0.0;
    double orbit_tail_bound = 0.0;
    double orbit_cutoff = 0.0;
    int orbits = 0;
    double l_min = 0.0;
    double l_sigma = 0.0;   // l(sigma); 0 when S'' is k-independent
    double sigma = 0.0;
    double rhs_total = 0.0;
    double discrepancy = 0.0;
};

double default_orbit_cutoff(const TestFunction& h, double eps = 1e-10);

TraceReport trace_rhs_bk(const MetricGraph& g, const cmat& s_matrix, const TestFunction& h,
                         const TraceOptions& opt = {});
TraceReport trace_rhs_bk2(const MetricGraph& g, const Decomposition& dec, const TestFunction& h,
                          const TraceOptions& opt = {});

// Both sides for a computed spectrum; fills lhs and discrepancy.
TraceReport trace_check(const SecularSystem& sys, const Spectrum& spec, const TestFunction& h,
                        const TraceOptions& opt = {});

// -(1/4pi) int h(k) Im tr S''(k) / k dk by adaptive quadrature.
double s_dprime_integral(const Decomposition& dec, const TestFunction& h);

struct LSigma {
    double sigma = 0.0;
    double value = 0.0;  // l(sigma)
};

// Minimum of l(kappa) = ln(2E)/kappa + (2/kappa) artanh(kappa/lambda) on (0, lambda).
LSigma l_sigma(int edges, double lambda_min_pos);

struct HeatTrace {
    double spectral = 0.0;
    double theta = 0.0;
    double spectral_remainder = 0.0;
    double theta_remainder = 0.0;
};

// Single edge with Dirichlet ends: sum e^{-k_n^2 t}, k_n = pi n / l, and its
// modular rewrite (l / (2 sqrt(pi t))) sum_Z e^{-n^2 l^2 / t} - 1/2.
HeatTrace heat_trace_pair(const MetricGraph& g, double t);

double riemann_counting(double E);

struct SemiclassicalCounts {
    double bk = 0.0;
    double bk2 = 0.0;
};

SemiclassicalCounts semiclassical_counts(double E);

struct NoGoPoint {
    double k = 0.0;
    int n_graph = 0;
    double n_riemann = 0.0;
    double ratio = 0.0;
};

struct NoGoReport {
    std::vector<NoGoPoint> points;
    double weyl_slope = 0.0;
    bool ratio_decreasing = false;
    double ratio_at_1000 = 0.0;  // from the data if reached, else Weyl-extrapolated
    bool ratio_at_1000_extrapolated = false;
};

// Samples k = k_start * 1.25^j up to the computed range.
NoGoReport nogo_report(const Spectrum& spec, const MetricGraph& g, double k_start = 50.0);

enum class EbkKind { Ring, HardWall };

// (2 pi / l)(n + mu/4) for rings, (pi / l)(n + mu/4) for hard walls; n = 0..n_max.
std::vector<double> ebk_levels(double l, double mu, int n_max, EbkKind kind);

}  // namespace bkg
