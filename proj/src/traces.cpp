#include "bkg/traces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace bkg {

namespace {

constexpr double two_pi = 2.0 * pi;
const cplx I1(0.0, 1.0);

double gauss_hat(double t, double y) {
    return std::exp(-y * y / (4.0 * t)) / (2.0 * std::sqrt(pi * t));
}

double gk_integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// Bound on sum over n >= 1 of factor * tr(|M|^n) * hat_env(max(cutoff, n l_min)).
double orbit_tail(const cmat& M, double l_min, double cutoff, double factor, const TestFunction& h) {
    const Eigen::MatrixXd A = M.cwiseAbs();
    Eigen::MatrixXd P = A;
    double tail = 0.0;
    for (int n = 1; n <= 100000; ++n) {
        const double term = factor * P.trace() * h.hat_envelope(std::max(cutoff, n * l_min));
        tail += term;
        if (n * l_min > cutoff && (term == 0.0 || term < 1e-30 * std::max(tail, 1e-300))) break;
        P = A * P;
    }
    return tail;
}

// density * sum_{m >= 0} envelope(start + m)
double envelope_sum(const TestFunction& h, double start, double density) {
    double s = 0.0;
    for (int m = 0; m < 10000000; ++m) {
        const double e = h.envelope(start + m);
        s += e;
        if (e == 0.0 || e < 1e-30 * std::max(s, 1e-300)) break;
    }
    return density * s;
}

}  // namespace

TestFunction TestFunction::gaussian(double t) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw Error(ErrorCode::ParameterOutOfRange, "Gaussian width t must be positive");
    TestFunction f;
    f.kind_ = Kind::Gaussian;
    f.t_ = t;
    return f;
}

TestFunction TestFunction::gaussian_shifted(double t, double k0) {
    TestFunction f = gaussian(t);
    if (!std::isfinite(k0)) throw Error(ErrorCode::ParameterOutOfRange, "shift must be finite");
    f.kind_ = Kind::GaussianShifted;
    f.k0_ = std::abs(k0);
    return f;
}

TestFunction TestFunction::tabulated(std::vector<double> k, std::vector<double> h) {
    if (k.size() != h.size() || k.size() < 2)
        throw Error(ErrorCode::DimensionMismatch, "tabulated test function needs matching samples");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (!std::isfinite(k[i]) || !std::isfinite(h[i]))
            throw Error(ErrorCode::ParameterOutOfRange, "non-finite sample");
        if (i == 0 ? k[0] != 0.0 : !(k[i] > k[i - 1]))
            throw Error(ErrorCode::ParameterOutOfRange, "samples must start at k = 0 and increase");
    }
    TestFunction f;
    f.kind_ = Kind::Tabulated;
    f.tk_ = std::move(k);
    f.th_ = std::move(h);
    return f;
}

double TestFunction::operator()(double k) const {
    switch (kind_) {
        case Kind::Gaussian:
            return std::exp(-k * k * t_);
        case Kind::GaussianShifted:
            return 0.5 * (std::exp(-(k - k0_) * (k - k0_) * t_) + std::exp(-(k + k0_) * (k + k0_) * t_));
        case Kind::Tabulated: {
            const double a = std::abs(k);
            if (a >= tk_.back()) return a == tk_.back() ? th_.back() : 0.0;
            const auto it = std::upper_bound(tk_.begin(), tk_.end(), a);
            const std::size_t i = static_cast<std::size_t>(it - tk_.begin());
            const double w = (a - tk_[i - 1]) / (tk_[i] - tk_[i - 1]);
            return (1.0 - w) * th_[i - 1] + w * th_[i];
        }
    }
    return 0.0;
}

double TestFunction::hat(double y) const {
    switch (kind_) {
        case Kind::Gaussian:
            return gauss_hat(t_, y);
        case Kind::GaussianShifted:
            return std::cos(k0_ * y) * gauss_hat(t_, y);
        case Kind::Tabulated: {
            // (1/pi) int_0^K h(k) cos(ky) dk, exact on each linear piece.
            double s = 0.0;
            for (std::size_t i = 1; i < tk_.size(); ++i) {
                const double k1 = tk_[i - 1], k2 = tk_[i];
                const double h1 = th_[i - 1], h2 = th_[i];
                if (std::abs(y) * (k2 - k1) < 1e-4) {
                    auto f = [&](double k) {
                        return (h1 + (h2 - h1) * (k - k1) / (k2 - k1)) * std::cos(k * y);
                    };
                    s += boost::math::quadrature::gauss<double, 10>::integrate(f, k1, k2);
                } else {
                    const double m = (h2 - h1) / (k2 - k1);
                    // int (h1 + m (k - k1)) cos(ky) = [(h(k)) sin(ky)/y + m cos(ky)/y^2]
                    auto F = [&](double k, double hk) {
                        return hk * std::sin(k * y) / y + m * std::cos(k * y) / (y * y);
                    };
                    s += F(k2, h2) - F(k1, h1);
                }
            }
            return s / pi;
        }
    }
    return 0.0;
}

double TestFunction::envelope(double k) const {
    k = std::max(0.0, k);
    switch (kind_) {
        case Kind::Gaussian:
            return std::exp(-k * k * t_);
        case Kind::GaussianShifted:
            return k <= k0_ ? 1.0 : std::exp(-(k - k0_) * (k - k0_) * t_);
        case Kind::Tabulated: {
            double m = std::abs((*this)(k));
            for (std::size_t i = 0; i < tk_.size(); ++i)
                if (tk_[i] >= k) m = std::max(m, std::abs(th_[i]));
            return m;
        }
    }
    return 0.0;
}

double TestFunction::hat_envelope(double y) const {
    y = std::max(0.0, y);
    switch (kind_) {
        case Kind::Gaussian:
        case Kind::GaussianShifted:
            return gauss_hat(t_, y);
        case Kind::Tabulated: {
            double s = 0.0;
            for (std::size_t i = 1; i < tk_.size(); ++i)
                s += 0.5 * (std::abs(th_[i - 1]) + std::abs(th_[i])) * (tk_[i] - tk_[i - 1]);
            return s / pi;
        }
    }
    return 0.0;
}

double TestFunction::support_radius() const {
    switch (kind_) {
        case Kind::Gaussian:
            return std::sqrt(41.5 / t_);
        case Kind::GaussianShifted:
            return k0_ + std::sqrt(41.5 / t_);
        case Kind::Tabulated:
            return tk_.back();
    }
    return 0.0;
}

double fourier_hat(const TestFunction& h, double y) { return h.hat(y); }

LhsResult trace_lhs(const Spectrum& spec, const SecularSystem& sys, const TestFunction& h, double eps) {
    if (spec.kind != sys.kind())
        throw Error(ErrorCode::DimensionMismatch, "spectrum and system are of different kinds");
    LhsResult r;
    for (const auto& lv : spec.levels) r.value += lv.g * h(lv.k);
    if (spec.kind == OperatorKind::BK2 && spec.zero_mode) r.value += spec.zero_mode->g0 * h(0.0);

    // Each eigenphase moves at most `rate` per unit k, so a unit window holds
    // at most dim (rate / 2pi + 1) levels.
    const double l_max = sys.lengths().maxCoeff();
    double rate_hi = l_max, rate_all = l_max;
    if (spec.kind == OperatorKind::BK2) {
        const rvec& lam = sys.decomposition().sigma_L;
        const double K = std::max(0.0, spec.k_max);
        double hi = 0.0, all = 0.0;
        for (Eigen::Index j = 0; j < lam.size(); ++j) {
            const double l = std::abs(lam[j]);
            if (l == 0.0) continue;
            hi = std::max(hi, K <= l ? 1.0 / l : 2.0 * l / (l * l + K * K));
            all = std::max(all, 1.0 / l);
        }
        rate_hi += hi;
        rate_all += all;
    }
    const double d_hi = sys.dim() * (rate_hi / two_pi + 1.0);
    const double d_all = sys.dim() * (rate_all / two_pi + 1.0);

    double tail = envelope_sum(h, spec.k_max, d_hi);
    if (spec.kind == OperatorKind::BK) {
        if (spec.k_min > 0.0)
            tail += d_all * (spec.k_min + 1.0) * h.envelope(0.0) + envelope_sum(h, 0.0, d_all);
        else
            tail += envelope_sum(h, -spec.k_min, d_all);
    } else if (spec.k_min > 1e-6) {
        tail += d_all * (spec.k_min + 1.0) * h.envelope(0.0);
    }
    r.tail_bound = tail;
    if (tail > eps)
        throw Error(ErrorCode::TailBoundExceeded,
                    "levels outside the computed window may contribute more than eps; widen the range");
    return r;
}

double default_orbit_cutoff(const TestFunction& h, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "eps must lie in (0, 1)");
    if (h.kind() == TestFunction::Kind::Tabulated)
        throw Error(ErrorCode::ParameterOutOfRange, "tabulated test functions need an explicit orbit cutoff");
    return 2.0 * std::sqrt(4.0 * h.t() * std::log(1.0 / eps));
}

TraceReport trace_rhs_bk(const MetricGraph& g, const cmat& S, const TestFunction& h, const TraceOptions& opt) {
    if (S.rows() != g.num_edges() || S.cols() != g.num_edges())
        throw Error(ErrorCode::DimensionMismatch, "S must be E x E");
    TraceReport rep;
    rep.l_min = g.min_length();
    rep.weyl = total_length(g) * h.hat(0.0);
    rep.orbit_cutoff = opt.orbit_cutoff > 0.0 ? opt.orbit_cutoff : default_orbit_cutoff(h, opt.eps);
    const auto orbits = enumerate_orbits(pattern_of(S, 1e-14), bond_lengths_bk(g), rep.orbit_cutoff);
    rep.orbits = static_cast<int>(orbits.size());
    for (const auto& o : orbits) rep.orbit_sum += 2.0 * std::real(orbit_amplitude(o, S)) * h.hat(o.length);
    rep.orbit_tail_bound = orbit_tail(S, g.min_length(), rep.orbit_cutoff, 2.0 * g.max_length(), h);
    rep.rhs_total = rep.weyl + rep.orbit_sum;
    return rep;
}

double s_dprime_integral(const Decomposition& dec, const TestFunction& h) {
    std::vector<double> lam;
    for (Eigen::Index j = 0; j < dec.sigma_L.size(); ++j)
        if (dec.sigma_L[j] != 0.0) lam.push_back(dec.sigma_L[j]);
    if (lam.empty()) return 0.0;
    auto f = [&](double k) {
        double s = 0.0;
        for (double l : lam) s += 2.0 * l / (l * l + k * k);
        return h(k) * s;
    };
    const double K = h.support_radius();
    std::vector<double> cuts{0.0, K};
    for (double l : lam)
        for (double m : {1.0, 10.0, 100.0})
            if (std::abs(l) * m < K) cuts.push_back(std::abs(l) * m);
    if (h.kind() == TestFunction::Kind::Tabulated)
        for (double x = 1.0; x < K; x += 1.0) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) total += gk_integrate(f, cuts[i - 1], cuts[i]);
    return -total / two_pi;
}

LSigma l_sigma(int edges, double lam) {
    if (edges < 1 || !(lam > 0.0) || !std::isfinite(lam))
        throw Error(ErrorCode::ParameterOutOfRange, "l(sigma) needs E >= 1 and a positive finite lambda");
    const double c = std::log(2.0 * edges);
    auto f = [&](double kappa) { return (c + 2.0 * std::atanh(kappa / lam)) / kappa; };
    const auto r = boost::math::tools::brent_find_minima(f, lam * 1e-9, lam * (1.0 - 1e-12), 52);
    return {r.first, r.second};
}

TraceReport trace_rhs_bk2(const MetricGraph& g, const Decomposition& dec, const TestFunction& h,
                          const TraceOptions& opt) {
    const int E = g.num_edges();
    if (dec.dim() != 2 * E) throw Error(ErrorCode::DimensionMismatch, "decomposition must be 2E x 2E");
    const rvec ls = g.lengths();
    TraceReport rep;
    rep.l_min = g.min_length();
    rep.weyl = total_length(g) * h.hat(0.0);
    const ZeroMode zm = zero_mode_test(dec, ls);
    rep.boundary = (zm.g0 - 0.5 * zm.N) * h(0.0);
    rep.s_integral = s_dprime_integral(dec, h);
    const auto blen = bond_lengths_bk2(g);
    const double l_max = g.max_length();

    if (dec.k_independent()) {
        const cmat M = bond_matrix_bk2(s_matrix_bk2(dec, 1.0));
        rep.orbit_cutoff = opt.orbit_cutoff > 0.0 ? opt.orbit_cutoff : default_orbit_cutoff(h, opt.eps);
        const auto orbits = enumerate_orbits(pattern_of(M, 1e-14), blen, rep.orbit_cutoff);
        rep.orbits = static_cast<int>(orbits.size());
        for (const auto& o : orbits) rep.orbit_sum += std::real(orbit_amplitude(o, M)) * h.hat(o.length);
        rep.orbit_tail_bound = orbit_tail(M, rep.l_min, rep.orbit_cutoff, l_max, h);
        rep.rhs_total = rep.weyl + rep.boundary + rep.s_integral + rep.orbit_sum;
        return rep;
    }

    if (h.kind() == TestFunction::Kind::Tabulated && opt.orbit_cutoff <= 0.0)
        throw Error(ErrorCode::ParameterOutOfRange, "tabulated test functions need an explicit orbit cutoff");
    const double lam = dec.min_positive_sigma();
    double cutoff = opt.orbit_cutoff > 0.0 ? opt.orbit_cutoff : default_orbit_cutoff(h, opt.eps);
    double tail_est = 0.0;
    if (std::isfinite(lam)) {
        const LSigma s = l_sigma(E, lam);
        rep.sigma = s.sigma;
        rep.l_sigma = s.value;
        if (rep.l_min <= s.value)
            throw Error(ErrorCode::ConditionViolated,
                        "shortest edge does not exceed l(sigma); the orbit sum is not known to converge");
        if (opt.orbit_cutoff <= 0.0) {
            // geometric decay rate of |weights| on the line Im k = kappa
            const double c = std::log(2.0 * E);
            auto lr = [&](double kappa) { return c + 2.0 * std::atanh(kappa / lam) - kappa * rep.l_min; };
            const auto m = boost::math::tools::brent_find_minima(lr, lam * 1e-9, lam * (1.0 - 1e-12), 52);
            const double rho = std::exp(m.second), kappa = m.first;
            const double t = h.t();
            const double pref = std::exp(kappa * kappa * t) * std::sqrt(pi / t) / two_pi *
                                (l_max + 2.0 * lam / (lam * lam - kappa * kappa));
            int n = 1;
            auto tail_from = [&](int n0) {
                double s = 0.0;
                for (int j = n0 + 1; j < n0 + 100000; ++j) {
                    const double term = pref * j * std::pow(rho, j);
                    s += term;
                    if (term < 1e-30) break;
                }
                return s;
            };
            while (tail_from(n) > 0.1 * opt.eps && n < 100000) ++n;
            cutoff = std::max(cutoff, n * l_max);
            tail_est = tail_from(n);
        }
    }
    rep.orbit_cutoff = cutoff;
    rep.orbit_tail_bound = tail_est;

    // Transitions possible anywhere on the real line.
    BondPattern pat = pattern_of(bond_matrix_bk2(s_matrix_bk2(dec, 0.7)), 1e-14);
    for (double k : {0.0, 1.3, 2.9})
        pat = (pat.array() || pattern_of(bond_matrix_bk2(s_matrix_bk2(dec, k)), 1e-14).array()).matrix();
    const auto orbits = enumerate_orbits(pat, blen, cutoff);
    rep.orbits = static_cast<int>(orbits.size());
    if (orbits.empty()) {
        rep.rhs_total = rep.weyl + rep.boundary + rep.s_integral;
        return rep;
    }

    // Shared composite Gauss-Legendre grid on [-K, K], two periods of the
    // longest phase per panel.
    const double K = h.support_radius();
    const double width = std::min(1.0, 2.0 * two_pi / cutoff);
    const int panels = std::max(2, static_cast<int>(std::ceil(2.0 * K / width)));
    const double w = 2.0 * K / panels;
    using GL = boost::math::quadrature::gauss<double, 20>;
    const auto& ax = GL::abscissa();
    const auto& wt = GL::weights();
    std::vector<double> nodes, weights;
    for (int p = 0; p < panels; ++p) {
        const double mid = -K + (p + 0.5) * w;
        for (std::size_t i = 0; i < ax.size(); ++i) {
            for (double sgn : {-1.0, 1.0}) {
                if (ax[i] == 0.0 && sgn > 0.0) continue;
                nodes.push_back(mid + sgn * ax[i] * 0.5 * w);
                weights.push_back(wt[i] * 0.5 * w);
            }
        }
    }
    std::vector<cmat> Ms(nodes.size()), dMs(nodes.size());
    std::vector<double> hs(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        Ms[q] = bond_matrix_bk2(s_matrix_bk2(dec, nodes[q]));
        dMs[q] = bond_matrix_bk2(s_matrix_bk2_derivative(dec, nodes[q]));
        hs[q] = h(nodes[q]);
    }

    std::vector<cplx> pre, suf;
    for (const auto& o : orbits) {
        const std::size_t n = o.bonds.size();
        pre.assign(n + 1, 1.0);
        suf.assign(n + 1, 1.0);
        double acc = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            if (hs[q] == 0.0) continue;
            const cmat& M = Ms[q];
            const cmat& dM = dMs[q];
            auto step = [&](std::size_t m) {
                return std::pair<int, int>{o.bonds[(m + 1) % n], o.bonds[m]};
            };
            for (std::size_t m = 0; m < n; ++m) {
                const auto [to, from] = step(m);
                pre[m + 1] = pre[m] * M(to, from);
            }
            for (std::size_t m = n; m-- > 0;) {
                const auto [to, from] = step(m);
                suf[m] = suf[m + 1] * M(to, from);
            }
            cplx dprod = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                const auto [to, from] = step(m);
                dprod += pre[m] * dM(to, from) * suf[m + 1];
            }
            const cplx val = (dprod + I1 * o.length * pre[n]) * std::exp(I1 * nodes[q] * o.length);
            acc += weights[q] * hs[q] * std::imag(val);
        }
        rep.orbit_sum += acc / (two_pi * o.repetition);
    }
    rep.rhs_total = rep.weyl + rep.boundary + rep.s_integral + rep.orbit_sum;
    return rep;
}

TraceReport trace_check(const SecularSystem& sys, const Spectrum& spec, const TestFunction& h,
                        const TraceOptions& opt) {
    TraceReport rep = sys.kind() == OperatorKind::BK
                          ? trace_rhs_bk(sys.graph(), sys.s_bk(), h, opt)
                          : trace_rhs_bk2(sys.graph(), sys.decomposition(), h, opt);
    const LhsResult l = trace_lhs(spec, sys, h, opt.eps);
    rep.lhs = l.value;
    rep.lhs_tail_bound = l.tail_bound;
    rep.discrepancy = std::abs(rep.lhs - rep.rhs_total);
    return rep;
}

HeatTrace heat_trace_pair(const MetricGraph& g, double t) {
    if (g.num_edges() != 1) throw Error(ErrorCode::DimensionMismatch, "heat trace pair needs a single edge");
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::ParameterOutOfRange, "t must be positive");
    const double l = g.lengths()[0];
    HeatTrace r;
    const double a = (pi / l) * (pi / l) * t;
    for (long n = 1;; ++n) {
        const double term = std::exp(-a * n * n);
        r.spectral += term;
        const double next = std::exp(-a * (n + 1) * (n + 1));
        if (next < 1e-18 * r.spectral || next == 0.0) {
            r.spectral_remainder = next / (1.0 - std::exp(-a * (2 * n + 3)));
            break;
        }
    }
    const double b = l * l / t;
    double s = 1.0;
    for (long n = 1;; ++n) {
        const double term = 2.0 * std::exp(-b * n * n);
        s += term;
        const double next = 2.0 * std::exp(-b * (n + 1) * (n + 1));
        if (next < 1e-18 * s || next == 0.0) {
            r.theta_remainder = next / (1.0 - std::exp(-b * (2 * n + 3)));
            break;
        }
    }
    const double pref = l / (2.0 * std::sqrt(pi * t));
    r.theta = pref * s - 0.5;
    r.theta_remainder *= pref;
    return r;
}

double riemann_counting(double E) {
    if (!(E > 0.0) || !std::isfinite(E)) throw Error(ErrorCode::ParameterOutOfRange, "E must be positive");
    const double x = E / two_pi;
    return x * std::log(x) - x + 7.0 / 8.0;
}

SemiclassicalCounts semiclassical_counts(double E) {
    if (!(E > 0.0) || !std::isfinite(E)) throw Error(ErrorCode::ParameterOutOfRange, "E must be positive");
    SemiclassicalCounts c;
    const double x = E / two_pi;
    c.bk = x * (std::log(x) - 1.0) + 1.0;
    const double y = std::sqrt(E) / two_pi;
    c.bk2 = 2.0 * (y * std::log(y) - y + 7.0 / 8.0);
    return c;
}

NoGoReport nogo_report(const Spectrum& spec, const MetricGraph& g, double k_start) {
    if (!(k_start > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "k_start must be positive");
    if (spec.k_max < k_start) throw Error(ErrorCode::InsufficientData, "spectrum does not reach k_start");
    NoGoReport r;
    try {
        r.weyl_slope = weyl_fit(spec, g, Side::Positive).slope;
    } catch (const Error&) {
        r.weyl_slope = weyl_target(spec.kind, g, Side::Positive);
    }
    for (int j = 0;; ++j) {
        const double k = k_start * std::pow(1.25, j);
        if (k > spec.k_max) break;
        NoGoPoint p;
        p.k = k;
        p.n_graph = counting_function(spec, k, Side::Positive);
        p.n_riemann = riemann_counting(k);
        p.ratio = p.n_graph / p.n_riemann;
        r.points.push_back(p);
    }
    r.ratio_decreasing = r.points.size() >= 2;
    for (std::size_t i = 1; i < r.points.size(); ++i)
        if (!(r.points[i].ratio < r.points[i - 1].ratio)) r.ratio_decreasing = false;
    if (spec.k_max >= 1000.0) {
        r.ratio_at_1000 = counting_function(spec, 1000.0, Side::Positive) / riemann_counting(1000.0);
    } else {
        r.ratio_at_1000 = r.weyl_slope * 1000.0 / riemann_counting(1000.0);
        r.ratio_at_1000_extrapolated = true;
    }
    return r;
}

std::vector<double> ebk_levels(double l, double mu, int n_max, EbkKind kind) {
    if (!(l > 0.0) || !std::isfinite(l) || !std::isfinite(mu) || n_max < 0)
        throw Error(ErrorCode::ParameterOutOfRange, "EBK needs l > 0 and n_max >= 0");
    const double base = (kind == EbkKind::Ring ? two_pi : pi) / l;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) out.push_back(base * (n + mu / 4.0));
    return out;
}

}  // namespace bkg
