#include "bkg/halfline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace bkg {

namespace {

const cplx I1(0.0, 1.0);
const double sqrt_two_pi = std::sqrt(2.0 * pi);

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// Complex integral over [a, b] with error estimate.
cplx gk_complex(const std::function<cplx(double)>& f, double a, double b, double tol, double* err) {
    double e1 = 0.0, e2 = 0.0;
    const double re = GK::integrate([&](double x) { return f(x).real(); }, a, b, 12, tol, &e1);
    const double im = GK::integrate([&](double x) { return f(x).imag(); }, a, b, 12, tol, &e2);
    if (err) *err += e1 + e2;
    return {re, im};
}

// Panels of width <= w across [a, b].
cplx panel_integrate(const std::function<cplx(double)>& f, double a, double b, double w, double tol,
                     double* err) {
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / w)));
    const double h = (b - a) / n;
    cplx s = 0.0;
    for (int i = 0; i < n; ++i) s += gk_complex(f, a + i * h, a + (i + 1) * h, tol, err);
    return s;
}

constexpr double lanczos_g = 7.0;
constexpr std::array<double, 9> lanczos_c = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// ln Gamma(z) for Re z >= 1/2.
cplx lanczos_log(cplx z) {
    z -= 1.0;
    cplx x = lanczos_c[0];
    for (std::size_t i = 1; i < lanczos_c.size(); ++i) x += lanczos_c[i] / (z + static_cast<double>(i));
    const cplx t = z + lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace

double fermi_alpha() { return 1.0 / std::sqrt(std::log(2.0) - 0.5); }

HalflineState HalflineState::fermi_packet() {
    const double alpha = fermi_alpha();
    HalflineState s;
    s.real_valued = true;
    s.phi = [alpha](double x) -> cplx {
        // e^{-x} / (1 + e^{-x}) avoids overflow for large x
        return alpha * (x > 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (std::exp(x) + 1.0));
    };
    return s;
}

HalflineState HalflineState::tabulated(std::vector<double> x, std::vector<cplx> values) {
    if (x.size() != values.size() || x.size() < 2)
        throw Error(ErrorCode::DimensionMismatch, "tabulated state needs matching samples");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i]) || (i > 0 && !(x[i] > x[i - 1])))
            throw Error(ErrorCode::ParameterOutOfRange, "sample points must be positive and increasing");
        if (!std::isfinite(values[i].real()) || !std::isfinite(values[i].imag()))
            throw Error(ErrorCode::ParameterOutOfRange, "non-finite sample value");
    }
    HalflineState s;
    s.real_valued = std::all_of(values.begin(), values.end(), [](cplx v) { return v.imag() == 0.0; });
    s.phi = [x = std::move(x), v = std::move(values)](double p) -> cplx {
        if (p < x.front() || p > x.back()) return 0.0;
        const auto it = std::upper_bound(x.begin(), x.end(), p);
        if (it == x.end()) return v.back();
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        const double w = (p - x[i - 1]) / (x[i] - x[i - 1]);
        return (1.0 - w) * v[i - 1] + w * v[i];
    };
    return s;
}

HalflineState HalflineState::rescaled(double c) const {
    if (!(c > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "scale must be positive");
    HalflineState s;
    s.real_valued = real_valued;
    s.phi = [f = phi, c](double x) { return std::sqrt(c) * f(c * x); };
    return s;
}

NormResult norm_squared(const HalflineState& s) {
    boost::math::quadrature::exp_sinh<double> q;
    NormResult r;
    double l1 = 0.0;
    r.value = q.integrate([&](double x) { return std::norm(s.phi(x)); }, 0.0,
                          std::numeric_limits<double>::infinity(), 1e-14, &r.remainder, &l1);
    return r;
}

cplx evolve_bk(const HalflineState& s, double t, double x) {
    if (!(x > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "x must be positive");
    return std::exp(-0.5 * t) * s.phi(std::exp(-t) * x);
}

HalflineState evolved(const HalflineState& s, double t) {
    HalflineState r;
    r.real_valued = s.real_valued;
    r.phi = [f = s.phi, t](double x) { return std::exp(-0.5 * t) * f(std::exp(-t) * x); };
    return r;
}

cplx kernel_bk2(double x, double x0, cplx t) {
    if (!(x > 0.0) || !(x0 > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "x and x0 must be positive");
    if (t == cplx(0.0) || t.real() < 0.0 || t.imag() > 0.0)
        throw Error(ErrorCode::ParameterOutOfRange, "t must be nonzero with Re t >= 0 and Im t <= 0");
    const double u = std::log(x) - std::log(x0);
    const cplx pref = std::exp(-I1 * (pi / 4.0)) / std::sqrt(4.0 * pi * t * x * x0);
    return pref * std::exp(I1 * u * u / (4.0 * t));
}

cplx kernel_bk2(double x, double x0, double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "t must be positive");
    return kernel_bk2(x, x0, cplx(t, 0.0));
}

cplx green_bk2(double x, double x0, double k) {
    if (k == 0.0) throw Error(ErrorCode::Pole, "the Green's function has a pole at k = 0");
    if (!(k > 0.0) || !(x > 0.0) || !(x0 > 0.0))
        throw Error(ErrorCode::ParameterOutOfRange, "need k > 0 and positive x, x0");
    const double u = std::abs(std::log(x) - std::log(x0));
    return I1 / (2.0 * k * std::sqrt(x * x0)) * std::exp(I1 * k * u);
}

cplx bs_operator_fd(const std::function<cplx(double)>& f, double x, double h) {
    const double d = h * x;
    const cplx fp = f(x + d), f0 = f(x), fm = f(x - d);
    const cplx d2 = (fp - 2.0 * f0 + fm) / (d * d);
    const cplx d1 = (fp - fm) / (2.0 * d);
    return -x * x * d2 - 2.0 * x * d1 - 0.25 * f0;
}

cplx psi_k(double k, double x) {
    if (!(x > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "x must be positive");
    return std::exp(cplx(-0.5, k) * std::log(x)) / sqrt_two_pi;
}

AmplitudeResult mellin_amplitude(const HalflineState& s, double k, double tol) {
    // x = e^y turns the transform into int e^{(1/2 - ik) y} phi(e^y) dy.
    const cplx sv(0.5, -k);
    auto f = [&](double y) { return std::exp(sv * y) * s.phi(std::exp(y)); };
    const double y0 = -60.0;

    double y1 = 2.0;
    while (std::abs(s.phi(std::exp(y1))) * std::exp(0.5 * y1) > 1e-22 && y1 < 200.0) y1 += 0.5;
    double err = 0.0;
    const double width = std::min(1.0, pi / std::max(1.0, std::abs(k)));
    cplx sum = panel_integrate(f, y0, y1, width, tol, &err);

    // Below y0, phi(e^y) is replaced by its value at the origin.
    const cplx c0 = s.phi(std::exp(y0));
    sum += c0 * std::exp(sv * y0) / sv;
    const cplx c1 = (s.phi(2.0 * std::exp(y0)) - c0) / std::exp(y0);
    err += std::abs(c1) * std::exp(1.5 * y0) / std::abs(sv + 1.0);
    err += std::abs(s.phi(std::exp(y1))) * std::exp(0.5 * y1) * 2.0;

    AmplitudeResult r{sum / sqrt_two_pi, err / sqrt_two_pi};
    if (!std::isfinite(r.value.real()) || !std::isfinite(r.value.imag()) ||
        r.remainder > std::max(1e-8, 1e3 * tol) * std::max(1.0, std::abs(r.value)))
        throw Error(ErrorCode::ConvergenceFailure,
                    "Mellin quadrature did not converge; remainder " + std::to_string(r.remainder));
    return r;
}

cplx gamma_complex(cplx z) {
    if (z.real() < 0.5) {
        const cplx sz = std::sin(pi * z);
        if (sz == cplx(0.0)) throw Error(ErrorCode::Pole, "Gamma has a pole at non-positive integers");
        return pi / (sz * gamma_complex(1.0 - z));
    }
    return std::exp(lanczos_log(z));
}

cplx log_gamma_complex(cplx z) {
    if (!(z.real() > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "log Gamma needs Re z > 0");
    if (z.real() >= 0.5) return lanczos_log(z);
    return lanczos_log(z + 1.0) - std::log(z);
}

cplx zeta_eta(cplx s, int n) {
    const cplx denom = 1.0 - std::exp((1.0 - s) * std::log(2.0));
    if (std::abs(denom) < 1e-14) throw Error(ErrorCode::Pole, "zeta has a pole at s = 1");
    if (n <= 0) n = std::clamp(static_cast<int>(30 + 1.1 * std::abs(s.imag())), 30, 200);
    // d_k = n sum_{i <= k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    std::vector<double> d(static_cast<std::size_t>(n) + 1);
    double term = 1.0 / n, acc = term;
    d[0] = n * acc;
    for (int i = 0; i < n; ++i) {
        term *= 4.0 * (n + i) * (n - i) / ((2.0 * i + 1.0) * (2.0 * i + 2.0));
        acc += term;
        d[static_cast<std::size_t>(i) + 1] = n * acc;
    }
    cplx sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        sum += sign * (d[static_cast<std::size_t>(k)] - d[static_cast<std::size_t>(n)]) *
               std::exp(-s * std::log(k + 1.0));
    }
    const cplx eta = -sum / d[static_cast<std::size_t>(n)];
    return eta / denom;
}

cplx zeta_critical(double k) { return zeta_eta(cplx(0.5, -k)); }

cplx fermi_amplitude_closed(double k) {
    const cplx s(0.5, -k);
    const cplx factor = 1.0 - std::sqrt(2.0) * std::exp(I1 * k * std::log(2.0));
    return fermi_alpha() / sqrt_two_pi * factor * gamma_complex(s) * zeta_eta(s);
}

double riemann_siegel_theta(double t) {
    return log_gamma_complex(cplx(0.25, 0.5 * t)).imag() - 0.5 * t * std::log(pi);
}

double riemann_siegel_z(double t) {
    return std::real(std::exp(I1 * riemann_siegel_theta(t)) * zeta_eta(cplx(0.5, t)));
}

double riemann_zero(double lo, double hi) {
    const double zl = riemann_siegel_z(lo), zh = riemann_siegel_z(hi);
    if (zl == 0.0) return lo;
    if (zh == 0.0) return hi;
    if ((zl > 0.0) == (zh > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "Z does not change sign");
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(
        riemann_siegel_z, lo, hi, zl, zh,
        [](double a, double b) { return std::abs(b - a) < 1e-13 * std::max(1.0, std::abs(a)); }, it);
    return 0.5 * (r.first + r.second);
}

cplx reconstruct(const std::function<cplx(double)>& amplitude, double x, double K) {
    if (!(x > 0.0) || !(K > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "need x > 0 and K > 0");
    const double lx = std::abs(std::log(x));
    const double w = std::min(1.0, pi / std::max(1.0, lx));
    return panel_integrate([&](double k) { return amplitude(k) * psi_k(k, x); }, -K, K, w, 1e-13, nullptr);
}

cplx amplitude_hat(const std::function<cplx(double)>& amplitude, double y, double K) {
    if (!(K > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "need K > 0");
    const double w = std::min(1.0, pi / std::max(1.0, std::abs(y)));
    return panel_integrate([&](double k) { return amplitude(k) * std::exp(I1 * k * y); }, -K, K, w, 1e-13,
                           nullptr) /
           (2.0 * pi);
}

double parseval_integral(const std::function<cplx(double)>& amplitude, double K) {
    if (!(K > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "need K > 0");
    return panel_integrate([&](double k) { return cplx(std::norm(amplitude(k))); }, -K, K, 1.0, 1e-13,
                           nullptr)
        .real();
}

}  // namespace bkg
