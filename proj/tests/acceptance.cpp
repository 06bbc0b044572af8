// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bkg/extensions.hpp"
#include "bkg/graph.hpp"
#include "bkg/halfline.hpp"
#include "bkg/spectra.hpp"
#include "bkg/traces.hpp"
#include "support.hpp"

using namespace bkg;
using bkg::testing::max_abs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s: %s\n", id, ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Runs a criterion body, turning exceptions into a FAIL line.
void criterion(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [ok, detail] = body();
        report(id, name, ok, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

SecularSystem system_for(const MetricGraph& g, BoundaryCondition::Kind kind, std::vector<double> rho = {},
                         double c = 0.0) {
    BoundaryCondition bc;
    bc.kind = kind;
    bc.rho = std::move(rho);
    bc.c = c;
    return SecularSystem::from_spec(g, standard_bc(bc, g));
}

MetricGraph star3() {
    return make_star({{1.0, std::exp(1.0)}, {1.0, std::exp(1.3)}, {1.0, std::exp(1.7)}});
}

std::vector<MetricGraph> weyl_graphs() {
    std::vector<MetricGraph> gs;
    for (int i = 0; i < 5; ++i) gs.push_back(make_random_graph(2 + i % 3, 100 + i, 1.0, 3.0));
    return gs;
}

std::vector<SecularSystem> weyl_systems() {
    std::mt19937_64 rng(2024);
    std::vector<SecularSystem> out;
    for (const auto& g : weyl_graphs())
        out.push_back(SecularSystem::from_spec(
            g, bkg::testing::random_extension(2 * g.num_edges(), OperatorKind::BK2, rng)));
    return out;
}

}  // namespace

int main() {
    criterion(1, "ring spectrum", [] {
        double worst = 0.0, slowest = 0.0;
        bool ok = true;
        for (double c : {0.0, 0.25, 0.5}) {
            const auto t0 = Clock::now();
            const auto sys = system_for(make_ring(1.0, std::exp(1.0)), BoundaryCondition::Kind::RingPhase, {}, c);
            // n = -25 .. 24
            const Spectrum s = find_spectrum(sys, 2.0 * pi * (-25.0 + c) - 1.0, 2.0 * pi * (24.0 + c) + 1.0);
            slowest = std::max(slowest, seconds_since(t0));
            if (s.levels.size() != 50) ok = false;
            for (std::size_t i = 0; i < s.levels.size(); ++i) {
                const double expect = 2.0 * pi * (static_cast<double>(i) - 25.0 + c);
                worst = std::max(worst, std::abs(s.levels[i].k - expect));
                if (s.levels[i].g != 1) ok = false;
            }
        }
        ok = ok && worst <= 1e-9 && slowest < 1.0;
        return std::pair{ok, fmt("max |dk| = %.2e", worst) + fmt(", slowest run %.3f s", slowest)};
    });

    criterion(2, "Dirichlet/Neumann spectra", [] {
        const auto g = make_interval(1.0, std::exp(1.0));
        double worst = 0.0;
        bool ok = true;
        std::string zm;
        for (auto kind : {BoundaryCondition::Kind::Dirichlet, BoundaryCondition::Kind::Neumann}) {
            const auto sys = system_for(g, kind);
            const Spectrum s = find_spectrum(sys, 0.0, 50.5 * pi);
            if (s.levels.size() != 50) ok = false;
            for (std::size_t i = 0; i < s.levels.size(); ++i)
                worst = std::max(worst, std::abs(s.levels[i].k - pi * static_cast<double>(i + 1)));
            const ZeroMode z = *s.zero_mode;
            if (kind == BoundaryCondition::Kind::Dirichlet) ok = ok && z.g0 == 0 && z.N == 1;
            else ok = ok && z.g0 >= 1;
            zm += std::string(", ") + bc_name(kind) + " g0=" + std::to_string(z.g0) + " N=" + std::to_string(z.N);
        }
        ok = ok && worst <= 1e-9;
        return std::pair{ok, fmt("max |dk| = %.2e", worst) + zm};
    });

    criterion(3, "squared-operator link", [] {
        std::mt19937_64 rng(3);
        double block = 0.0, ldp = 0.0;
        for (int i = 0; i < 25; ++i) {
            const int E = 1 + i % 3;
            std::vector<MetricEdge> edges;
            for (int e = 0; e < E; ++e)
                edges.push_back({"e" + std::to_string(e), 1.0, std::exp(1.0 + 0.37 * e), "v" + std::to_string(e),
                                 "v" + std::to_string((e + 1) % E)});
            const MetricGraph g(edges);
            const auto sq = squared_extension(bkg::testing::random_unitary(E, rng), g);
            block = std::max(block, sq.block_residual);
            ldp = std::max(ldp, sq.l_dprime_norm);
        }
        const auto g = make_interval(1.0, std::exp(1.0));
        BoundaryCondition bc;
        const auto dec = kuchment_decompose(standard_bc(bc, g), dilation_matrices(g));
        const bool dirichlet_rejected = !is_squared_form(dec);
        const bool ok = block <= 1e-10 && ldp <= 1e-12 && dirichlet_rejected;
        return std::pair{ok, fmt("block residual %.2e", block) + fmt(", |L''| %.2e", ldp) +
                                 (dirichlet_rejected ? ", Dirichlet rejected" : ", Dirichlet NOT rejected")};
    });

    criterion(4, "heat-trace identity", [] {
        const auto t0 = Clock::now();
        const auto g = make_interval(1.0, std::exp(pi));
        double worst = 0.0;
        for (double t : {0.01, 0.1, 1.0, 10.0}) {
            const HeatTrace h = heat_trace_pair(g, t);
            worst = std::max(worst, std::abs(h.spectral - h.theta));
        }
        const double dt = seconds_since(t0);
        return std::pair{worst <= 1e-10 && dt < 1.0, fmt("max |spectral - theta| = %.2e", worst) + fmt(", %.4f s", dt)};
    });

    criterion(5, "BK trace formula", [] {
        double worst = 0.0, tail = 0.0;
        for (double c : {0.0, 0.25}) {
            const auto sys = system_for(make_ring(1.0, std::exp(1.0)), BoundaryCondition::Kind::RingPhase, {}, c);
            const Spectrum s = find_spectrum(sys, -80.0, 80.0);
            for (double t : {0.1, 1.0}) {
                const TraceReport r = trace_check(sys, s, TestFunction::gaussian(t));
                worst = std::max(worst, r.discrepancy);
                tail = std::max({tail, r.lhs_tail_bound, r.orbit_tail_bound});
            }
        }
        return std::pair{worst <= 1e-8 && tail < 1e-10,
                         fmt("max |LHS - RHS| = %.2e", worst) + fmt(", max tail bound %.2e", tail)};
    });

    criterion(6, "BK2 trace formula", [] {
        struct Case {
            const char* name;
            SecularSystem sys;
        };
        const auto edge = make_interval(1.0, std::exp(1.0));
        const auto long_edge = make_interval(1.0, std::exp(4.0));
        std::vector<Case> cases{{"dirichlet", system_for(edge, BoundaryCondition::Kind::Dirichlet)},
                                {"neumann", system_for(edge, BoundaryCondition::Kind::Neumann)},
                                {"robin", system_for(long_edge, BoundaryCondition::Kind::Robin, {1.0})},
                                {"star", system_for(star3(), BoundaryCondition::Kind::Kirchhoff)}};
        double worst = 0.0;
        std::string detail;
        bool ok = true;
        for (const auto& c : cases) {
            const Spectrum s = find_spectrum(c.sys, 0.0, 80.0);
            double w = 0.0;
            for (double t : {0.1, 1.0}) {
                const TraceReport r = trace_check(c.sys, s, TestFunction::gaussian(t));
                w = std::max(w, r.discrepancy);
            }
            if (std::string(c.name) == "star") ok = ok && c.sys.decomposition().k_independent();
            worst = std::max(worst, w);
            detail += std::string(" ") + c.name + fmt("=%.1e", w);
        }
        return std::pair{ok && worst <= 1e-7, fmt("max |LHS - RHS| = %.2e;", worst) + detail};
    });

    criterion(7, "Weyl law", [] {
        const auto systems = weyl_systems();
        double worst = 0.0, slowest = 0.0;
        int fewest = 1 << 30;
        for (const auto& sys : systems) {
            const auto t0 = Clock::now();
            const double L = total_length(sys.graph());
            const Spectrum s = find_spectrum(sys, 0.0, 1.1 * 320.0 * pi / L + 5.0);
            const WeylFit f = weyl_fit(s, sys.graph());
            slowest = std::max(slowest, seconds_since(t0));
            worst = std::max(worst, f.relative_error);
            fewest = std::min(fewest, f.levels_used);
        }
        const bool ok = worst <= 0.02 && fewest >= 300 && slowest < 30.0;
        return std::pair{ok, fmt("max slope error %.3f%%", 100.0 * worst) + ", fewest levels " +
                                 std::to_string(fewest) + fmt(", slowest %.2f s", slowest)};
    });

    criterion(8, "no-go comparison", [] {
        std::vector<std::pair<std::string, SecularSystem>> graphs;
        graphs.emplace_back("ring", system_for(make_ring(1.0, std::exp(1.0)), BoundaryCondition::Kind::RingPhase));
        graphs.emplace_back("dirichlet", system_for(make_interval(1.0, std::exp(1.0)), BoundaryCondition::Kind::Dirichlet));
        graphs.emplace_back("robin", system_for(make_interval(1.0, std::exp(4.0)), BoundaryCondition::Kind::Robin, {1.0}));
        graphs.emplace_back("star", system_for(star3(), BoundaryCondition::Kind::Kirchhoff));
        int idx = 0;
        for (const auto& s : weyl_systems()) graphs.emplace_back("random" + std::to_string(idx++), s);
        bool ok = true;
        double lo = 1e300, hi = 0.0;
        for (const auto& [name, sys] : graphs) {
            const Spectrum s = find_spectrum(sys, 0.0, 1000.0);
            const NoGoReport r = nogo_report(s, sys.graph());
            ok = ok && r.ratio_decreasing && !r.ratio_at_1000_extrapolated && r.points.size() >= 10;
            lo = std::min(lo, r.ratio_at_1000);
            hi = std::max(hi, r.ratio_at_1000);
        }
        return std::pair{ok, std::to_string(graphs.size()) + " graphs, ratio decreasing on k = 50 * 1.25^j" +
                                 fmt(", ratio at k=1000 in [%.3f", lo) + fmt(", %.3f]", hi)};
    });

    criterion(9, "half-line packet", [] {
        const auto state = HalflineState::fermi_packet();
        double worst = 0.0;
        for (double k : {0.0, 1.0, 5.0, 14.134725})
            worst = std::max(worst, std::abs(mellin_amplitude(state, k).value - fermi_amplitude_closed(k)));
        const double a0 = std::abs(fermi_amplitude_closed(0.0));
        double dip = 0.0;
        for (auto [lo, hi] : {std::pair{14.0, 14.5}, std::pair{20.8, 21.2}})
            dip = std::max(dip, std::abs(fermi_amplitude_closed(riemann_zero(lo, hi))) / a0);
        const double parseval = parseval_integral([](double k) { return fermi_amplitude_closed(k); }, 30.0);
        const double norm = norm_squared(state).value;
        const bool ok = worst <= 1e-8 && dip < 1e-6 && std::abs(parseval - 1.0) <= 1e-6 && std::abs(norm - 1.0) <= 1e-6;
        return std::pair{ok, fmt("max |A_quad - A_closed| = %.2e", worst) + fmt(", max dip |A|/|A(0)| = %.2e", dip) +
                                 fmt(", Parseval - 1 = %.2e", parseval - 1.0)};
    });

    criterion(10, "property suites", [] {
        std::mt19937_64 rng(20240601);
        std::uniform_real_distribution<double> uk(-20.0, 20.0);
        const int cases = 200;
        int fail_unitary = 0, fail_gauge = 0, fail_rate = 0, fail_sym = 0, fail_probe = 0;

        for (int i = 0; i < cases; ++i) {
            const int E = 1 + i % 4;
            const auto g = make_random_graph(E, 1000 + i, 0.5, 3.0);
            const auto bk = bkg::testing::random_extension(E, OperatorKind::BK, rng);
            const auto bk2 = bkg::testing::random_extension(2 * E, OperatorKind::BK2, rng);
            const auto dec = kuchment_decompose(bk2, dilation_matrices(g));
            const double k = uk(rng);

            // unitarity of S and S''(k)
            const cmat S = s_matrix_bk(bk);
            const cmat S2 = s_matrix_bk2(dec, k);
            if (max_abs(S.adjoint() * S - cmat::Identity(E, E)) > 1e-10 ||
                max_abs(S2.adjoint() * S2 - cmat::Identity(2 * E, 2 * E)) > 1e-10)
                ++fail_unitary;

            // (A, B) -> (CA, CB)
            const cmat C1 = bkg::testing::random_gaussian(E, rng) + 3.0 * cmat::Identity(E, E);
            const cmat C2 = bkg::testing::random_gaussian(2 * E, rng) + 3.0 * cmat::Identity(2 * E, 2 * E);
            const auto bkc = validate_extension(C1 * bk.A, C1 * bk.B, OperatorKind::BK);
            const auto bk2c = validate_extension(C2 * bk2.A, C2 * bk2.B, OperatorKind::BK2);
            const auto decc = kuchment_decompose(bk2c, dilation_matrices(g));
            if (max_abs(s_matrix_bk(bkc) - S) > 1e-9 || max_abs(s_matrix_bk2(decc, k) - S2) > 1e-9) ++fail_gauge;

            // eigenphase velocities against the generator bound
            const auto sys = SecularSystem::from_spec(g, bk2);
            const double h = 1e-6;
            const rvec& lam = dec.sigma_L;
            double vlo = g.min_length(), vhi = g.max_length();
            double slo = 0.0, shi = 0.0;
            for (Eigen::Index j = 0; j < lam.size(); ++j) {
                const double v = -2.0 * lam[j] / (lam[j] * lam[j] + k * k);
                slo = std::min(slo, v);
                shi = std::max(shi, v);
            }
            vlo += slo;
            vhi += shi;
            Eigen::ComplexEigenSolver<cmat> es0(sys.u_matrix(k)), es1(sys.u_matrix(k + h));
            bool rate_ok = true;
            for (Eigen::Index a = 0; a < es0.eigenvalues().size(); ++a) {
                const cplx z0 = es0.eigenvalues()[a];
                Eigen::Index best = 0;
                for (Eigen::Index b = 1; b < es1.eigenvalues().size(); ++b)
                    if (std::abs(es1.eigenvalues()[b] - z0) < std::abs(es1.eigenvalues()[best] - z0)) best = b;
                const double v = std::arg(es1.eigenvalues()[best] / z0) / h;
                if (v < vlo - 1e-4 * (1.0 + std::abs(vlo)) || v > vhi + 1e-4 * (1.0 + std::abs(vhi))) rate_ok = false;
            }
            if (!rate_ok) ++fail_rate;

            // F(-k) = conj F(k)
            const cplx fp = secular(sys, k), fm = secular(sys, -k);
            if (std::abs(fm - std::conj(fp)) > 1e-10 * std::max(1.0, std::abs(fp))) ++fail_sym;

            // g0 independent of the probe; mix in Kirchhoff graphs that have zero modes
            BoundaryCondition kc;
            kc.kind = BoundaryCondition::Kind::Kirchhoff;
            const Decomposition dz =
                (i % 2 == 0) ? dec : kuchment_decompose(standard_bc(kc, g), dilation_matrices(g));
            const int g0 = zero_mode_test(dz, g.lengths(), 1.0).g0;
            const double probe = 0.3 + 5.0 * std::abs(uk(rng)) / 20.0;
            if (zero_mode_test(dz, g.lengths(), probe).g0 != g0) ++fail_probe;
        }
        const int total = fail_unitary + fail_gauge + fail_rate + fail_sym + fail_probe;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "%d cases each, failures: unitarity %d, gauge %d, phase rate %d, k-symmetry %d, probe %d",
                      cases, fail_unitary, fail_gauge, fail_rate, fail_sym, fail_probe);
        return std::pair{total == 0, std::string(buf)};
    });

    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
