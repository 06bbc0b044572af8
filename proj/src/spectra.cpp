#include "bkg/spectra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace bkg {

namespace {

const cplx I1(0.0, 1.0);
constexpr double two_pi = 2.0 * pi;

// Runs body(i) for i in [0, n) over `threads` contiguous partitions.
void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max(1L, n))));
    if (threads == 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (long i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Sample {
    double k = 0.0;
    double phi = 0.0;    // continuous arg det U
    double sum_w = 0.0;  // sum of eigenphases wrapped into [0, 2 pi)
    double R = 0.0;      // real-valued secular function
    double dmin = 0.0;   // distance of the nearest eigenphase to 0 mod 2 pi
};

class Scanner {
public:
    Scanner(const SecularSystem& sys, const SolverOptions& opt) : sys_(sys), opt_(opt) {
        n_ = sys.dim();
        neg2i_pow_ = 1.0;
        for (int j = 0; j < n_; ++j) neg2i_pow_ *= cplx(0.0, -2.0);
        total_ = sys.lengths().sum();
        l_min_ = sys.lengths().minCoeff();
        l_max_ = sys.lengths().maxCoeff();
        if (sys.kind() == OperatorKind::BK2) lambdas_ = sys.decomposition().sigma_L;
    }

    void calibrate(double k_ref) {
        const cmat U = sys_.u_matrix(k_ref);
        phi0_ = std::arg(Eigen::PartialPivLU<cmat>(U).determinant()) - increment(k_ref);
    }

    double increment(double k) const {
        if (sys_.kind() == OperatorKind::BK) return total_ * k;
        double v = 2.0 * total_ * k;
        for (Eigen::Index j = 0; j < lambdas_.size(); ++j)
            if (lambdas_[j] != 0.0) v -= 2.0 * std::atan2(k, lambdas_[j]);
        return v;
    }

    double phi(double k) const { return phi0_ + increment(k); }

    double R(double k) const {
        ++evals_;
        const cmat U = sys_.u_matrix(k);
        const cmat M = cmat::Identity(n_, n_) - U;
        const cplx det = Eigen::PartialPivLU<cmat>(M).determinant();
        return std::real(det * std::exp(-0.5 * I1 * phi(k)) / neg2i_pow_);
    }

    double dmin(double k) const {
        ++evals_;
        const rvec w = eigenphases(sys_.u_matrix(k));
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < w.size(); ++j) d = std::min({d, w[j], two_pi - w[j]});
        return d;
    }

    Sample sample(double k) const {
        ++evals_;
        const cmat U = sys_.u_matrix(k);
        Sample s;
        s.k = k;
        s.phi = phi(k);
        const rvec w = eigenphases(U);
        s.sum_w = w.sum();
        s.dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < w.size(); ++j) s.dmin = std::min({s.dmin, w[j], two_pi - w[j]});
        const cplx det = Eigen::PartialPivLU<cmat>(cmat::Identity(n_, n_) - U).determinant();
        s.R = std::real(det * std::exp(-0.5 * I1 * s.phi) / neg2i_pow_);
        return s;
    }

    static double crossings(const Sample& a, const Sample& b) {
        return ((b.phi - a.phi) - (b.sum_w - a.sum_w)) / two_pi;
    }

    // Upper bound of a single eigenphase velocity on [k, inf).
    double phase_rate_bound(double k) const {
        double g = 0.0;
        for (Eigen::Index j = 0; j < lambdas_.size(); ++j) {
            const double l = std::abs(lambdas_[j]);
            if (l == 0.0) continue;
            g = std::max(g, k <= l ? 1.0 / l : 2.0 * l / (l * l + k * k));
        }
        return l_max_ + g;
    }

    double k_mono() const {
        double km = 0.0;
        for (Eigen::Index j = 0; j < lambdas_.size(); ++j) {
            const double l = lambdas_[j];
            if (l > 0.0) km = std::max(km, std::sqrt(std::max(0.0, 2.0 * l / l_min_ - l * l)));
        }
        return km;
    }

    double total() const { return total_; }
    double l_min() const { return l_min_; }
    long evaluations() const { return evals_.load(); }

private:
    const SecularSystem& sys_;
    const SolverOptions& opt_;
    int n_ = 0;
    cplx neg2i_pow_;
    double total_ = 0.0, l_min_ = 0.0, l_max_ = 0.0, phi0_ = 0.0;
    rvec lambdas_;
    mutable std::atomic<long> evals_{0};
};

struct Found {
    double k;
    int g;
};

class BracketSolver {
public:
    BracketSolver(const Scanner& sc, const SolverOptions& opt) : sc_(sc), opt_(opt) {}

    void process(const Sample& a, const Sample& b, int depth, int refine, bool monotone,
                 std::vector<Found>& out) {
        const double cr = Scanner::crossings(a, b);
        const long c = std::lround(cr);
        if (std::abs(cr - static_cast<double>(c)) > 1e-3) {
            if (refine >= opt_.max_refine)
                throw Error(ErrorCode::ToleranceTooCoarse,
                            "eigenphase count stays non-integer after refinement");
            split(a, b, depth, refine + 1, monotone, out);
            return;
        }
        if (c == 0) {
            if (!monotone) tangency(a, b, out);
            return;
        }
        if (std::labs(c) == 1) {
            double root;
            if (single(a, b, root)) {
                out.push_back({root, 1});
            } else if (refine < opt_.max_refine) {
                split(a, b, depth, refine + 1, monotone, out);
            } else {
                throw Error(ErrorCode::ToleranceTooCoarse, "could not isolate a crossing");
            }
            return;
        }
        const double width = b.k - a.k;
        if (depth >= opt_.max_depth ||
            width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b.k))) {
            ++clusters;
            out.push_back({argmin_dmin(a.k, b.k), static_cast<int>(std::labs(c))});
            return;
        }
        split(a, b, depth + 1, refine, monotone, out);
    }

    long refinements = 0;
    long clusters = 0;

private:
    void split(const Sample& a, const Sample& b, int depth, int refine, bool monotone,
               std::vector<Found>& out) {
        ++refinements;
        const Sample m = sc_.sample(0.5 * (a.k + b.k));
        process(a, m, depth, refine, monotone, out);
        process(m, b, depth, refine, monotone, out);
    }

    double argmin_dmin(double lo, double hi) const {
        auto r = boost::math::tools::brent_find_minima([&](double k) { return sc_.dmin(k); },
                                                       lo, hi, 52);
        return r.first;
    }

    bool single(const Sample& a, const Sample& b, double& root) const {
        if ((a.R < 0.0 && b.R > 0.0) || (a.R > 0.0 && b.R < 0.0)) {
            const double tol = opt_.tol;
            auto stop = [tol](double x, double y) {
                return std::abs(y - x) <= std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() *
                                                            std::max(std::abs(x), std::abs(y)));
            };
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve([&](double k) { return sc_.R(k); }, a.k, b.k,
                                                       a.R, b.R, stop, iters);
            root = 0.5 * (r.first + r.second);
            return true;
        }
        root = argmin_dmin(a.k, b.k);
        return sc_.dmin(root) < 1e-6;
    }

    void tangency(const Sample& a, const Sample& b, std::vector<Found>& out) const {
        const Sample m = sc_.sample(0.5 * (a.k + b.k));
        if (m.dmin >= std::min(a.dmin, b.dmin) || m.dmin > 0.5) return;
        const double k = argmin_dmin(a.k, b.k);
        if (sc_.dmin(k) < opt_.mult_tol) out.push_back({k, 2});
    }

    const Scanner& sc_;
    const SolverOptions& opt_;
};

}  // namespace

SecularSystem SecularSystem::bk(const MetricGraph& g, const ExtensionSpec& spec) {
    if (spec.kind != OperatorKind::BK) throw Error(ErrorCode::ValidationError, "expected a BK spec");
    if (spec.dim() != g.num_edges())
        throw Error(ErrorCode::DimensionMismatch, "BK boundary matrices must be E x E");
    SecularSystem s;
    s.kind_ = OperatorKind::BK;
    s.graph_ = g;
    s.lengths_ = g.lengths();
    s.s_ = s_matrix_bk(spec);
    return s;
}

SecularSystem SecularSystem::bk2(const MetricGraph& g, const ExtensionSpec& spec,
                                 const RankOptions& rank) {
    if (spec.kind != OperatorKind::BK2) throw Error(ErrorCode::ValidationError, "expected a BK2 spec");
    if (spec.dim() != 2 * g.num_edges())
        throw Error(ErrorCode::DimensionMismatch, "BK2 boundary matrices must be 2E x 2E");
    SecularSystem s;
    s.kind_ = OperatorKind::BK2;
    s.graph_ = g;
    s.lengths_ = g.lengths();
    s.dec_ = kuchment_decompose(spec, dilation_matrices(g), rank);
    return s;
}

SecularSystem SecularSystem::from_spec(const MetricGraph& g, const ExtensionSpec& spec,
                                       const RankOptions& rank) {
    return spec.kind == OperatorKind::BK ? bk(g, spec) : bk2(g, spec, rank);
}

cmat SecularSystem::s_at(cplx k) const {
    return kind_ == OperatorKind::BK ? s_ : s_matrix_bk2(dec_, k);
}

cmat SecularSystem::t_at(cplx k) const { return t_matrix(kind_, lengths_, k); }

cmat SecularSystem::bond_matrix(cplx k) const {
    return kind_ == OperatorKind::BK ? s_ : bond_matrix_bk2(s_matrix_bk2(dec_, k));
}

std::vector<double> SecularSystem::bond_lengths() const {
    return kind_ == OperatorKind::BK ? bond_lengths_bk(graph_) : bond_lengths_bk2(graph_);
}

cmat t_matrix(OperatorKind kind, const rvec& lengths, cplx k) {
    const Eigen::Index E = lengths.size();
    cvec d(E);
    for (Eigen::Index j = 0; j < E; ++j) d[j] = std::exp(I1 * k * lengths[j]);
    if (kind == OperatorKind::BK) return d.asDiagonal();
    cmat T = cmat::Zero(2 * E, 2 * E);
    T.topRightCorner(E, E) = d.asDiagonal();
    T.bottomLeftCorner(E, E) = d.asDiagonal();
    return T;
}

cmat t_matrix(OperatorKind kind, const MetricGraph& g, cplx k) { return t_matrix(kind, g.lengths(), k); }

cplx secular_bk(const SecularSystem& sys, cplx k) {
    if (sys.kind() != OperatorKind::BK) throw Error(ErrorCode::ValidationError, "expected a BK system");
    return secular(sys, k);
}

cplx secular_bk2(const SecularSystem& sys, cplx k) {
    if (sys.kind() != OperatorKind::BK2) throw Error(ErrorCode::ValidationError, "expected a BK2 system");
    return secular(sys, k);
}

cplx secular(const SecularSystem& sys, cplx k) {
    const cmat M = cmat::Identity(sys.dim(), sys.dim()) - sys.u_matrix(k);
    return Eigen::PartialPivLU<cmat>(M).determinant();
}

rvec eigenphases(const cmat& U) {
    Eigen::ComplexEigenSolver<cmat> es(U, false);
    const cvec& mu = es.eigenvalues();
    rvec w(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        double t = std::arg(mu[j]);
        if (t < 0.0) t += two_pi;
        if (t >= two_pi) t -= two_pi;
        w[j] = t;
    }
    std::sort(w.data(), w.data() + w.size());
    return w;
}

int unit_eigenvalue_count(const cmat& U, double tol) {
    const rvec w = eigenphases(U);
    int n = 0;
    for (Eigen::Index j = 0; j < w.size(); ++j)
        if (std::min(w[j], two_pi - w[j]) < tol) ++n;
    return n;
}

int nullity_of_one_minus(const cmat& M, double tol) {
    const Eigen::Index n = M.rows();
    const rvec s = Eigen::JacobiSVD<cmat>(cmat::Identity(n, n) - M).singularValues();
    const double scale = std::max(1.0, M.norm());
    int k = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j)
        if (s[j] < tol * scale) ++k;
    return k;
}

cmat zero_mode_matrix(const rvec& lengths, double k_probe) {
    const Eigen::Index E = lengths.size();
    const cplx q = 2.0 * I1 / k_probe;
    cmat C = cmat::Zero(2 * E, 2 * E);
    for (Eigen::Index j = 0; j < E; ++j) {
        const cplx den = q + lengths[j];
        C(j, j) = C(j + E, j + E) = lengths[j] / den;
        C(j, j + E) = C(j + E, j) = q / den;
    }
    return C;
}

ZeroMode zero_mode_test(const Decomposition& dec, const rvec& lengths, double k_probe) {
    if (dec.dim() != 2 * lengths.size())
        throw Error(ErrorCode::DimensionMismatch, "decomposition does not match the edge lengths");
    if (!(k_probe != 0.0) || !std::isfinite(k_probe))
        throw Error(ErrorCode::ParameterOutOfRange, "probe wave number must be real and nonzero");
    auto g0_at = [&](double kp) {
        return nullity_of_one_minus(s_matrix_bk2(dec, kp) * zero_mode_matrix(lengths, kp));
    };
    ZeroMode z;
    z.g0 = g0_at(k_probe);
    if (g0_at(k_probe * std::sqrt(2.0)) != z.g0)
        throw Error(ErrorCode::ComputeError, "zero-mode multiplicity depends on the probe");
    z.N = unit_eigenvalue_count(s_matrix_bk2(dec, 0.0) * t_matrix(OperatorKind::BK2, lengths, 0.0));
    return z;
}

ZeroMode zero_mode_test(const SecularSystem& sys, double k_probe) {
    if (sys.kind() != OperatorKind::BK2) throw Error(ErrorCode::ValidationError, "zero modes are a BK2 notion");
    return zero_mode_test(sys.decomposition(), sys.lengths(), k_probe);
}

int Spectrum::total_multiplicity() const {
    int n = 0;
    for (const auto& l : levels) n += l.g;
    return n;
}

Spectrum find_spectrum(const SecularSystem& sys, double k_min, double k_max, const SolverOptions& opt) {
    if (!(k_min < k_max) || !std::isfinite(k_min) || !std::isfinite(k_max))
        throw Error(ErrorCode::ParameterOutOfRange, "need finite k_min < k_max");
    if (!(opt.tol > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "tolerance must be positive");
    const bool bk2 = sys.kind() == OperatorKind::BK2;
    if (bk2 && k_max <= 0.0) throw Error(ErrorCode::ParameterOutOfRange, "BK2 wave numbers are positive");

    Scanner sc(sys, opt);
    Spectrum out;
    out.kind = sys.kind();
    out.k_min = k_min;
    out.k_max = k_max;
    const double h = opt.step > 0.0 ? opt.step : pi / (4.0 * sc.total());
    out.diag.scan_step = h;

    // Grid.  BK2 starts just above 0 when the range reaches down to it.
    const bool shifted = bk2 && k_min <= 0.0;
    const double start = shifted ? 1e-6 * h : k_min;
    const double k_mono = bk2 ? sc.k_mono() : 0.0;
    out.diag.k_mono = k_mono;
    std::vector<double> grid{start};
    while (grid.back() < k_max) {
        const double k = grid.back();
        double step = h;
        if (bk2) {
            step = std::min(step, 0.25 * pi / sc.phase_rate_bound(k));
            if (k < k_mono) step /= 8.0;
        }
        grid.push_back(std::min(k_max, k + step));
    }
    out.diag.grid_points = static_cast<long>(grid.size());

    sc.calibrate(start);
    std::vector<Sample> samples(grid.size());
    parallel_for(static_cast<long>(grid.size()), opt.threads,
                 [&](long i) { samples[i] = sc.sample(grid[i]); });

    const long nb = static_cast<long>(grid.size()) - 1;
    std::vector<std::vector<Found>> found(nb);
    std::vector<long> refinements(nb, 0), clusters(nb, 0);
    parallel_for(nb, opt.threads, [&](long i) {
        BracketSolver bs(sc, opt);
        const bool monotone = !bk2 || samples[i].k >= k_mono;
        bs.process(samples[i], samples[i + 1], 0, 0, monotone, found[i]);
        refinements[i] = bs.refinements;
        clusters[i] = bs.clusters;
    });

    std::vector<Found> roots;
    for (long i = 0; i < nb; ++i) {
        roots.insert(roots.end(), found[i].begin(), found[i].end());
        out.diag.refinements += refinements[i];
        out.diag.clusters += clusters[i];
    }
    if (!shifted && samples.front().dmin < opt.mult_tol) roots.push_back({k_min, 0});
    std::sort(roots.begin(), roots.end(), [](const Found& x, const Found& y) { return x.k < y.k; });

    // Roots whose phases are indistinguishable at mult_tol form one level.
    const double merge = 2.0 * opt.mult_tol / sc.l_min();
    for (const auto& r : roots) {
        if (!out.levels.empty() && r.k - out.levels.back().k <= merge) {
            out.levels.back().g += r.g;
        } else {
            out.levels.push_back({r.k, r.g});
        }
    }
    for (auto& l : out.levels) {
        l.k = std::clamp(l.k, k_min, k_max);
        const int g_eig = unit_eigenvalue_count(sys.u_matrix(l.k), opt.mult_tol);
        if (g_eig >= 1) l.g = g_eig;
        if (l.g < 1) l.g = 1;
    }
    if (bk2) out.zero_mode = zero_mode_test(sys);
    out.diag.evaluations = sc.evaluations();
    return out;
}

std::vector<NegativeLevel> find_negative_eigenvalues(const SecularSystem& sys, double kappa_max) {
    if (sys.kind() != OperatorKind::BK2)
        throw Error(ErrorCode::ValidationError, "negative eigenvalues are a BK2 notion");
    if (!(kappa_max > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "kappa_max must be positive");

    const Decomposition& dec = sys.decomposition();
    const int n = sys.dim();
    // (A'' + ik B'')(I - S'' T) at k = i kappa; free of the poles at sigma(L'').
    auto M = [&](double kappa) -> cmat {
        return (dec.A_dprime - kappa * dec.B_dprime) +
               (dec.A_dprime + kappa * dec.B_dprime) * sys.t_at(cplx(0.0, kappa));
    };
    auto G = [&](double kappa) { return std::real(Eigen::PartialPivLU<cmat>(M(kappa)).determinant()); };
    auto smin = [&](double kappa) {
        const rvec s = Eigen::JacobiSVD<cmat>(M(kappa)).singularValues();
        return s[n - 1] / std::max(1.0, s[0]);
    };
    auto near_pole = [&](double kappa) {
        for (Eigen::Index j = 0; j < dec.sigma_L.size(); ++j)
            if (dec.sigma_L[j] > 0.0 && std::abs(kappa - dec.sigma_L[j]) < 1e-8 * std::max(1.0, kappa))
                return true;
        return false;
    };

    const int steps = 4000;
    const double dk = kappa_max / steps;
    std::vector<double> ks(steps + 1), gs(steps + 1), ss(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        ks[i] = i == 0 ? 1e-3 * dk : i * dk;
        gs[i] = G(ks[i]);
        ss[i] = smin(ks[i]);
    }

    std::vector<double> roots;
    auto stop = [](double x, double y) { return std::abs(y - x) <= 1e-14 * std::max(1.0, std::abs(x)); };
    for (int i = 0; i < steps; ++i) {
        if ((gs[i] < 0.0) != (gs[i + 1] < 0.0) && gs[i] != 0.0) {
            std::uintmax_t it = 200;
            auto r = boost::math::tools::toms748_solve(G, ks[i], ks[i + 1], gs[i], gs[i + 1], stop, it);
            roots.push_back(0.5 * (r.first + r.second));
        } else if (i > 0 && ss[i] < ss[i - 1] && ss[i] <= ss[i + 1]) {
            auto r = boost::math::tools::brent_find_minima(smin, ks[i - 1], ks[i + 1], 52);
            if (r.second < 1e-9) roots.push_back(r.first);
        }
    }

    std::vector<NegativeLevel> out;
    std::sort(roots.begin(), roots.end());
    for (double kap : roots) {
        if (near_pole(kap)) continue;
        if (!out.empty() && std::abs(kap - out.back().kappa) < 1e-9) continue;
        const rvec s = Eigen::JacobiSVD<cmat>(M(kap)).singularValues();
        int g = 0;
        for (Eigen::Index j = 0; j < s.size(); ++j)
            if (s[j] < 1e-7 * std::max(1.0, s[0])) ++g;
        out.push_back({kap, std::max(1, g)});
    }
    return out;
}

int counting_function(const Spectrum& spec, double k, Side side) {
    const double eps = 1e-12 * std::max(1.0, std::abs(k));
    if (k > spec.k_max + eps) throw Error(ErrorCode::RangeExceeded, "k beyond the computed spectrum");
    const bool bk2 = spec.kind == OperatorKind::BK2;
    if (side == Side::TwoSided && !bk2 && -k < spec.k_min - eps)
        throw Error(ErrorCode::RangeExceeded, "-k beyond the computed spectrum");
    int n = 0;
    for (const auto& l : spec.levels) {
        if (side == Side::Positive || bk2) {
            if (l.k > 0.0 && l.k <= k) n += l.g;
        } else if (std::abs(l.k) <= k) {
            n += l.g;
        }
    }
    if (side == Side::TwoSided && bk2) n *= 2;
    return n;
}

double weyl_target(OperatorKind kind, const MetricGraph& g, Side side) {
    const double L = total_length(g);
    return (kind == OperatorKind::BK && side == Side::Positive) ? L / (2.0 * pi) : L / pi;
}

WeylFit weyl_fit(const Spectrum& spec, const MetricGraph& g, Side side) {
    const bool two = side == Side::TwoSided && spec.kind == OperatorKind::BK;
    const double reach = two ? std::min(spec.k_max, -spec.k_min) : spec.k_max;
    std::vector<double> ks;
    for (const auto& l : spec.levels) {
        const double k = two ? std::abs(l.k) : l.k;
        if (k > 0.0 && k <= reach) ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.size() < 20) throw Error(ErrorCode::InsufficientData, "weyl fit needs at least 20 levels");

    const double lo = ks.front(), hi = ks.back();
    const int m = std::max<int>(400, 8 * static_cast<int>(ks.size()));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double k = lo + (hi - lo) * (i + 0.5) / m;
        const double n = counting_function(spec, k, two ? Side::TwoSided : Side::Positive);
        sx += k;
        sy += n;
        sxx += k * k;
        sxy += k * n;
    }
    WeylFit f;
    f.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / m;
    f.target = weyl_target(spec.kind, g, two ? Side::TwoSided : Side::Positive);
    f.relative_error = std::abs(f.slope - f.target) / f.target;
    f.levels_used = static_cast<int>(ks.size());
    return f;
}

}  // namespace bkg
