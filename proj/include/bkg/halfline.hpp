#pragma once

#include <functional>
#include <vector>

#include "bkg/common.hpp"

namespace bkg {

// A wave function on (0, inf).
struct HalflineState {
    std::function<cplx(double)> phi;
    bool real_valued = false;

    // alpha / (e^x + 1) with alpha = 1 / sqrt(ln 2 - 1/2); unit norm.
    static HalflineState fermi_packet();
    // Linear interpolation between samples, zero outside [x.front(), x.back()].
    static HalflineState tabulated(std::vector<double> x, std::vector<cplx> values);
    // sqrt(c) phi(c x)
    HalflineState rescaled(double c) const;
};

double fermi_alpha();

struct NormResult {
    double value = 0.0;      // ||phi||^2
    double remainder = 0.0;  // quadrature error estimate
};

NormResult norm_squared(const HalflineState& s);

// (U(t) phi)(x) = e^{-t/2} phi(e^{-t} x)
cplx evolve_bk(const HalflineState& s, double t, double x);
HalflineState evolved(const HalflineState& s, double t);

// (4 pi i t x x0)^{-1/2} exp(i (ln x - ln x0)^2 / 4t).  Complex t with
// Im t <= 0 and Re t >= 0 continues the same branch.
cplx kernel_bk2(double x, double x0, double t);
cplx kernel_bk2(double x, double x0, cplx t);

// (i / (2k sqrt(x x0))) exp(ik |ln x - ln x0|), k > 0.
cplx green_bk2(double x, double x0, double k);

// (-x^2 d^2/dx^2 - 2x d/dx - 1/4) f at x by central differences with step h x.
cplx bs_operator_fd(const std::function<cplx(double)>& f, double x, double h = 1e-4);

// (2 pi)^{-1/2} x^{-1/2 + ik}
cplx psi_k(double k, double x);

struct AmplitudeResult {
    cplx value;
    double remainder = 0.0;
};

// A(k) = (2 pi)^{-1/2} int_0^inf x^{-1/2-ik} phi(x) dx.
AmplitudeResult mellin_amplitude(const HalflineState& s, double k, double tol = 1e-12);

// Closed form of A(k) for the Fermi packet.
cplx fermi_amplitude_closed(double k);

cplx gamma_complex(cplx z);
cplx log_gamma_complex(cplx z);  // Re z > 0, continuous branch
// zeta(s) via the alternating eta series with Borwein acceleration.
cplx zeta_eta(cplx s, int terms = 0);
// zeta(1/2 - ik)
cplx zeta_critical(double k);

// Riemann-Siegel theta and Z(t) = e^{i theta(t)} zeta(1/2 + it).
double riemann_siegel_theta(double t);
double riemann_siegel_z(double t);
// Zero of Z in [lo, hi]; requires a sign change.
double riemann_zero(double lo, double hi);

// int_{-K}^{K} amplitude(k) psi_k(x) dk
cplx reconstruct(const std::function<cplx(double)>& amplitude, double x, double K);
// (1/2pi) int_{-K}^{K} amplitude(k) e^{iky} dk
cplx amplitude_hat(const std::function<cplx(double)>& amplitude, double y, double K);
// int_{-K}^{K} |amplitude(k)|^2 dk
double parseval_integral(const std::function<cplx(double)>& amplitude, double K);

}  // namespace bkg
