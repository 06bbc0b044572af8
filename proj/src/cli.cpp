#include "bkg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bkg/extensions.hpp"
#include "bkg/graph.hpp"
#include "bkg/halfline.hpp"
#include "bkg/spectra.hpp"
#include "bkg/traces.hpp"

namespace bkg::cli {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }
[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) parse_fail(where + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) parse_fail("unknown key '" + it.key() + "' in " + where);
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) parse_fail(where + "." + key + " must be a number");
    return v.get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) parse_fail(where + "." + key + " must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) parse_fail(where + "." + key + " must be a boolean");
    return v.get<bool>();
}

long long get_integer(const json& obj, const char* key, long long fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) parse_fail(where + "." + key + " must be an integer");
    return v.get<long long>();
}

std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where) {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    const json& v = obj.at(key);
    if (!v.is_array()) parse_fail(where + "." + key + " must be an array of numbers");
    for (const auto& x : v) {
        if (!x.is_number()) parse_fail(where + "." + key + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

cplx parse_complex(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    parse_fail(where + " entries must be numbers or [re, im] pairs");
}

CMatrixRows parse_matrix(const json& obj, const char* key, const std::string& where) {
    CMatrixRows rows;
    if (!obj.contains(key)) return rows;
    const json& m = obj.at(key);
    if (!m.is_array()) parse_fail(where + "." + key + " must be an array of rows");
    for (const auto& r : m) {
        if (!r.is_array()) parse_fail(where + "." + key + " must be an array of rows");
        std::vector<cplx> row;
        for (const auto& x : r) row.push_back(parse_complex(x, where + "." + key));
        rows.push_back(std::move(row));
    }
    return rows;
}

json matrix_json(const CMatrixRows& m) {
    json out = json::array();
    for (const auto& r : m) {
        json row = json::array();
        for (const auto& x : r) row.push_back({x.real(), x.imag()});
        out.push_back(row);
    }
    return out;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const std::set<std::string> tasks = {"validate", "spectrum", "weyl", "trace-check",
                                     "heat-trace", "halfline-demo", "counting-compare"};

// Everything derived from a config before any computation runs.
struct Job {
    MetricGraph graph;
    ExtensionSpec spec;
    OperatorKind kind = OperatorKind::BK2;
};

cmat to_matrix(const CMatrixRows& rows, const char* name) {
    if (rows.empty()) invalid(std::string("boundary.") + name + " is required");
    const std::size_t n = rows.size();
    cmat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != rows[0].size())
            throw Error(ErrorCode::DimensionMismatch, std::string("boundary.") + name + " is ragged");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

MetricGraph build_graph(const JobConfig& c) {
    if (c.graph.random_edges > 0)
        return make_random_graph(c.graph.random_edges, c.seed, c.graph.random_l_lo, c.graph.random_l_hi);
    if (c.graph.edges.empty()) throw Error(ErrorCode::EmptyGraph, "graph.edges is empty");
    std::vector<MetricEdge> edges;
    for (const auto& e : c.graph.edges) edges.push_back({e.id, e.a, e.b, e.from, e.to});
    return MetricGraph(std::move(edges), c.graph.directed);
}

Job build_job(const JobConfig& c) {
    Job j{build_graph(c), {}, c.op == "BK" ? OperatorKind::BK : OperatorKind::BK2};
    const auto& b = c.boundary;
    using K = BoundaryCondition::Kind;
    BoundaryCondition bc;
    bc.rho = b.rho;
    bc.c = b.c;
    bc.dirichlet_leaves = b.dirichlet_leaves;
    if (b.kind == "matrices") {
        j.spec = validate_extension(to_matrix(b.A, "A"), to_matrix(b.B, "B"), j.kind);
    } else if (b.kind == "log_laplacian") {
        if (j.kind != OperatorKind::BK2) invalid("log_laplacian conditions define a BK2 operator");
        j.spec = bk2_from_log_laplacian(to_matrix(b.A, "A"), to_matrix(b.B, "B"), j.graph);
    } else {
        if (b.kind == "dirichlet") bc.kind = K::Dirichlet;
        else if (b.kind == "neumann") bc.kind = K::Neumann;
        else if (b.kind == "robin") bc.kind = K::Robin;
        else if (b.kind == "kirchhoff") bc.kind = K::Kirchhoff;
        else if (b.kind == "ring_phase") bc.kind = K::RingPhase;
        else invalid("unknown boundary kind '" + b.kind + "'");
        j.spec = standard_bc(bc, j.graph);
        if (j.spec.kind != j.kind)
            invalid("boundary '" + b.kind + "' defines a " + kind_name(j.spec.kind) + " operator, config asks for " +
                    c.op);
    }
    const int expect = j.kind == OperatorKind::BK ? j.graph.num_edges() : 2 * j.graph.num_edges();
    if (j.spec.dim() != expect)
        throw Error(ErrorCode::DimensionMismatch, "boundary matrices must be " + std::to_string(expect) +
                                                      " x " + std::to_string(expect));
    return j;
}

void check_numeric(const JobConfig& c) {
    const auto& n = c.numeric;
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(n.k_range[0]) || !finite(n.k_range[1]) || !(n.k_range[0] < n.k_range[1]))
        throw Error(ErrorCode::ParameterOutOfRange, "numeric.k_range must be finite with lo < hi");
    if (!(n.tol > 0.0 && n.tol < 1e-2)) throw Error(ErrorCode::ParameterOutOfRange, "numeric.tol must lie in (0, 1e-2)");
    if (!(n.eps > 0.0 && n.eps < 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "numeric.eps must lie in (0, 1)");
    if (!(n.orbit_cutoff >= 0.0) || !finite(n.orbit_cutoff))
        throw Error(ErrorCode::ParameterOutOfRange, "numeric.orbit_cutoff must be >= 0");
    if (!(n.kappa_max >= 0.0) || !finite(n.kappa_max))
        throw Error(ErrorCode::ParameterOutOfRange, "numeric.kappa_max must be >= 0");
    if (!(n.k_step > 0.0) || !finite(n.k_step)) throw Error(ErrorCode::ParameterOutOfRange, "numeric.k_step must be > 0");
    for (double t : n.t_values)
        if (!(t > 0.0) || !finite(t)) throw Error(ErrorCode::ParameterOutOfRange, "numeric.t_values must be positive");
    for (double k : n.k_values)
        if (!finite(k)) throw Error(ErrorCode::ParameterOutOfRange, "numeric.k_values must be finite");
    if (c.threads < 1 || c.threads > 256) throw Error(ErrorCode::ParameterOutOfRange, "threads must lie in [1, 256]");
    if (c.op != "BK" && c.op != "BK2") invalid("operator must be BK or BK2");
    if (!tasks.count(c.task)) invalid("unknown task '" + c.task + "'");
}

class Writer {
public:
    explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void text(const std::string& name, const std::string& body) {
        std::filesystem::create_directories(dir_);
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw Error(ErrorCode::ComputeError, "cannot write " + (dir_ / name).string());
        f << body;
        files.push_back((dir_ / name).string());
    }
    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    std::vector<std::string> files;

private:
    std::filesystem::path dir_;
};

SolverOptions solver_options(const JobConfig& c) {
    SolverOptions o;
    o.tol = c.numeric.tol;
    o.threads = c.threads;
    return o;
}

json spectrum_json(const Spectrum& s) {
    json j;
    j["operator"] = kind_name(s.kind);
    j["k_min"] = s.k_min;
    j["k_max"] = s.k_max;
    j["levels"] = s.levels.size();
    j["total_multiplicity"] = s.total_multiplicity();
    if (s.zero_mode) j["zero_mode"] = {{"g0", s.zero_mode->g0}, {"N", s.zero_mode->N}};
    json neg = json::array();
    for (const auto& n : s.negative) neg.push_back({{"kappa", n.kappa}, {"lambda", -n.kappa * n.kappa}, {"g", n.g}});
    j["negative"] = neg;
    j["diagnostics"] = {{"scan_step", s.diag.scan_step}, {"k_mono", s.diag.k_mono},
                        {"grid_points", s.diag.grid_points}, {"refinements", s.diag.refinements},
                        {"clusters", s.diag.clusters}};
    return j;
}

std::string spectrum_csv(const Spectrum& s) {
    std::ostringstream o;
    o << "n,k_n,g_n\n";
    for (std::size_t i = 0; i < s.levels.size(); ++i)
        o << i + 1 << "," << fmt(s.levels[i].k) << "," << s.levels[i].g << "\n";
    return o.str();
}

Spectrum compute_spectrum(const JobConfig& c, const SecularSystem& sys, double lo, double hi) {
    Spectrum s = find_spectrum(sys, lo, hi, solver_options(c));
    if (sys.kind() == OperatorKind::BK2 && c.numeric.kappa_max > 0.0)
        s.negative = find_negative_eigenvalues(sys, c.numeric.kappa_max);
    return s;
}

json task_validate(const Job& j) {
    json r;
    r["valid"] = true;
    r["operator"] = kind_name(j.spec.kind);
    r["dim"] = j.spec.dim();
    r["hermiticity_residual"] = (j.spec.A * j.spec.B.adjoint() - j.spec.B * j.spec.A.adjoint()).cwiseAbs().maxCoeff();
    if (j.spec.kind == OperatorKind::BK) {
        const cmat S = s_matrix_bk(j.spec);
        r["unitarity_residual"] = (S.adjoint() * S - cmat::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff();
        r["time_reversal_symmetric"] = is_time_reversal_symmetric(S);
    } else {
        const Decomposition d = kuchment_decompose(j.spec, dilation_matrices(j.graph));
        json sig = json::array();
        for (Eigen::Index i = 0; i < d.sigma_L.size(); ++i) sig.push_back(d.sigma_L[i]);
        r["sigma_L"] = sig;
        r["rank_B"] = d.sigma_L.size();
        r["k_independent"] = d.k_independent();
        r["squared_form"] = is_squared_form(d);
        const ZeroMode z = zero_mode_test(d, j.graph.lengths());
        r["zero_mode"] = {{"g0", z.g0}, {"N", z.N}};
    }
    return r;
}

}  // namespace

JobConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(doc, "config", {"operator", "task", "graph", "boundary", "numeric", "seed", "threads"});
    JobConfig c;
    c.op = get_string(doc, "operator", c.op, "config");
    if (!doc.contains("task")) parse_fail("config.task is required");
    c.task = get_string(doc, "task", "", "config");
    const long long seed = get_integer(doc, "seed", 0, "config");
    if (seed < 0) parse_fail("config.seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.threads = static_cast<int>(get_integer(doc, "threads", 1, "config"));

    if (doc.contains("graph")) {
        const json& g = doc["graph"];
        only_keys(g, "graph", {"edges", "directed", "random_edges", "random_l_lo", "random_l_hi"});
        c.graph.directed = get_bool(g, "directed", true, "graph");
        c.graph.random_edges = static_cast<int>(get_integer(g, "random_edges", 0, "graph"));
        c.graph.random_l_lo = get_number(g, "random_l_lo", c.graph.random_l_lo, "graph");
        c.graph.random_l_hi = get_number(g, "random_l_hi", c.graph.random_l_hi, "graph");
        if (g.contains("edges")) {
            if (!g["edges"].is_array()) parse_fail("graph.edges must be an array");
            for (const auto& e : g["edges"]) {
                only_keys(e, "graph.edges[]", {"id", "a", "b", "from", "to"});
                for (const char* k : {"id", "a", "b", "from", "to"})
                    if (!e.contains(k)) parse_fail(std::string("graph.edges[] is missing '") + k + "'");
                EdgeConfig ec;
                ec.id = get_string(e, "id", "", "graph.edges[]");
                ec.a = get_number(e, "a", 0.0, "graph.edges[]");
                ec.b = get_number(e, "b", 0.0, "graph.edges[]");
                ec.from = get_string(e, "from", "", "graph.edges[]");
                ec.to = get_string(e, "to", "", "graph.edges[]");
                c.graph.edges.push_back(std::move(ec));
            }
        }
    }
    if (doc.contains("boundary")) {
        const json& b = doc["boundary"];
        only_keys(b, "boundary", {"kind", "rho", "c", "dirichlet_leaves", "A", "B"});
        c.boundary.kind = get_string(b, "kind", c.boundary.kind, "boundary");
        c.boundary.rho = get_numbers(b, "rho", "boundary");
        c.boundary.c = get_number(b, "c", 0.0, "boundary");
        c.boundary.dirichlet_leaves = get_bool(b, "dirichlet_leaves", false, "boundary");
        c.boundary.A = parse_matrix(b, "A", "boundary");
        c.boundary.B = parse_matrix(b, "B", "boundary");
    }
    if (doc.contains("numeric")) {
        const json& n = doc["numeric"];
        only_keys(n, "numeric", {"k_range", "tol", "orbit_cutoff", "t_values", "eps", "kappa_max", "k_step", "k_values"});
        if (n.contains("k_range")) {
            const auto r = get_numbers(n, "k_range", "numeric");
            if (r.size() != 2) parse_fail("numeric.k_range must have two entries");
            c.numeric.k_range = {r[0], r[1]};
        }
        c.numeric.tol = get_number(n, "tol", c.numeric.tol, "numeric");
        c.numeric.orbit_cutoff = get_number(n, "orbit_cutoff", c.numeric.orbit_cutoff, "numeric");
        c.numeric.t_values = get_numbers(n, "t_values", "numeric");
        c.numeric.eps = get_number(n, "eps", c.numeric.eps, "numeric");
        c.numeric.kappa_max = get_number(n, "kappa_max", c.numeric.kappa_max, "numeric");
        c.numeric.k_step = get_number(n, "k_step", c.numeric.k_step, "numeric");
        c.numeric.k_values = get_numbers(n, "k_values", "numeric");
    }
    return c;
}

std::string serialize_config(const JobConfig& c) {
    json j;
    j["operator"] = c.op;
    j["task"] = c.task;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    json edges = json::array();
    for (const auto& e : c.graph.edges) edges.push_back({{"id", e.id}, {"a", e.a}, {"b", e.b}, {"from", e.from}, {"to", e.to}});
    j["graph"] = {{"edges", edges},
                  {"directed", c.graph.directed},
                  {"random_edges", c.graph.random_edges},
                  {"random_l_lo", c.graph.random_l_lo},
                  {"random_l_hi", c.graph.random_l_hi}};
    j["boundary"] = {{"kind", c.boundary.kind},
                     {"rho", c.boundary.rho},
                     {"c", c.boundary.c},
                     {"dirichlet_leaves", c.boundary.dirichlet_leaves},
                     {"A", matrix_json(c.boundary.A)},
                     {"B", matrix_json(c.boundary.B)}};
    j["numeric"] = {{"k_range", c.numeric.k_range},   {"tol", c.numeric.tol},
                    {"orbit_cutoff", c.numeric.orbit_cutoff}, {"t_values", c.numeric.t_values},
                    {"eps", c.numeric.eps},           {"kappa_max", c.numeric.kappa_max},
                    {"k_step", c.numeric.k_step},     {"k_values", c.numeric.k_values}};
    return j.dump(2) + "\n";
}

ExitCode exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
            return ExitCode::Config;
        case ErrorCode::InvalidEdge:
        case ErrorCode::EmptyGraph:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::HermiticityViolation:
        case ErrorCode::RankDeficient:
        case ErrorCode::SingularMatrix:
        case ErrorCode::RankAmbiguous:
        case ErrorCode::ParameterOutOfRange:
        case ErrorCode::ConditionViolated:
        case ErrorCode::ValidationError:
            return ExitCode::Validation;
        default:
            return ExitCode::Compute;
    }
}

const char* category_name(ExitCode code) {
    switch (code) {
        case ExitCode::Ok: return "ok";
        case ExitCode::Config: return "config";
        case ExitCode::Validation: return "validation";
        case ExitCode::Compute: return "compute";
    }
    return "compute";
}

std::string error_json(ErrorCode code, const std::string& message) {
    json j;
    j["error"] = {{"category", category_name(exit_code_for(code))}, {"code", code_name(code)}, {"message", message}};
    return j.dump(2) + "\n";
}

namespace {

json run_task(const JobConfig& c, Writer& w) {
    const auto& n = c.numeric;
    json report;
    report["task"] = c.task;
    report["operator"] = c.op;

    if (c.task == "halfline-demo") {
        std::ostringstream csv;
        csv << "k,re_A,im_A,abs2_A\n";
        const long steps = std::lround((n.k_range[1] - n.k_range[0]) / n.k_step);
        if (steps > 2000000) throw Error(ErrorCode::ParameterOutOfRange, "k grid is too fine");
        for (long i = 0; i <= steps; ++i) {
            const double k = n.k_range[0] + i * n.k_step;
            const cplx a = fermi_amplitude_closed(k);
            csv << fmt(k) << "," << fmt(a.real()) << "," << fmt(a.imag()) << "," << fmt(std::norm(a)) << "\n";
        }
        w.text("amplitude.csv", csv.str());
        const auto state = HalflineState::fermi_packet();
        const std::vector<double> ks = n.k_values.empty() ? std::vector<double>{0.0, 1.0, 5.0, 14.134725} : n.k_values;
        json checks = json::array();
        double worst = 0.0;
        for (double k : ks) {
            const auto q = mellin_amplitude(state, k);
            const cplx cf = fermi_amplitude_closed(k);
            worst = std::max(worst, std::abs(q.value - cf));
            checks.push_back({{"k", k}, {"quadrature", {q.value.real(), q.value.imag()}},
                              {"closed_form", {cf.real(), cf.imag()}}, {"abs_diff", std::abs(q.value - cf)},
                              {"remainder", q.remainder}});
        }
        report["amplitude_checks"] = checks;
        report["max_abs_diff"] = worst;
        report["norm_squared"] = norm_squared(state).value;
        report["parseval"] = parseval_integral([](double k) { return fermi_amplitude_closed(k); }, 30.0);
        const double a0 = std::abs(fermi_amplitude_closed(0.0));
        json zeros = json::array();
        for (auto [lo, hi] : {std::pair{14.0, 14.5}, std::pair{20.8, 21.2}}) {
            const double z = riemann_zero(lo, hi);
            zeros.push_back({{"k", z}, {"abs_A_over_abs_A0", std::abs(fermi_amplitude_closed(z)) / a0}});
        }
        report["riemann_zero_dips"] = zeros;
        return report;
    }

    const Job job = build_job(c);
    const MetricGraph& g = job.graph;
    report["edges"] = g.num_edges();
    report["total_length"] = total_length(g);

    if (c.task == "validate") {
        report["validation"] = task_validate(job);
        return report;
    }

    const SecularSystem sys = SecularSystem::from_spec(g, job.spec);
    if (job.kind == OperatorKind::BK2 && n.k_range[0] < 0.0)
        throw Error(ErrorCode::ParameterOutOfRange, "BK2 spectra use k >= 0");

    if (c.task == "spectrum" || c.task == "weyl") {
        const Spectrum s = compute_spectrum(c, sys, n.k_range[0], n.k_range[1]);
        w.text("spectrum.csv", spectrum_csv(s));
        report["spectrum"] = spectrum_json(s);
        if (c.task == "weyl") {
            const Side side = n.k_range[0] < 0.0 ? Side::TwoSided : Side::Positive;
            const WeylFit f = weyl_fit(s, g, side);
            report["weyl"] = {{"slope", f.slope},   {"intercept", f.intercept},   {"target", f.target},
                              {"relative_error", f.relative_error}, {"levels_used", f.levels_used},
                              {"side", side == Side::Positive ? "positive" : "two-sided"}};
        }
        return report;
    }

    if (c.task == "trace-check") {
        if (n.t_values.empty()) throw Error(ErrorCode::ParameterOutOfRange, "trace-check needs numeric.t_values");
        const double t_min = *std::min_element(n.t_values.begin(), n.t_values.end());
        const double K = std::sqrt(std::log(1e30) / t_min) + 2.0;
        const Spectrum s = compute_spectrum(c, sys, job.kind == OperatorKind::BK ? -K : 0.0, K);
        TraceOptions to;
        to.orbit_cutoff = n.orbit_cutoff;
        to.eps = n.eps;
        std::ostringstream csv;
        csv << "t,lhs,rhs,discrepancy,lhs_tail_bound,orbit_tail_bound\n";
        json rows = json::array();
        for (double t : n.t_values) {
            const TraceReport r = trace_check(sys, s, TestFunction::gaussian(t), to);
            csv << fmt(t) << "," << fmt(r.lhs) << "," << fmt(r.rhs_total) << "," << fmt(r.discrepancy) << ","
                << fmt(r.lhs_tail_bound) << "," << fmt(r.orbit_tail_bound) << "\n";
            rows.push_back({{"t", t},
                            {"lhs", r.lhs},
                            {"rhs", r.rhs_total},
                            {"discrepancy", r.discrepancy},
                            {"weyl", r.weyl},
                            {"boundary", r.boundary},
                            {"s_integral", r.s_integral},
                            {"orbit_sum", r.orbit_sum},
                            {"orbits", r.orbits},
                            {"orbit_cutoff", r.orbit_cutoff},
                            {"orbit_tail_bound", r.orbit_tail_bound},
                            {"lhs_tail_bound", r.lhs_tail_bound},
                            {"l_min", r.l_min},
                            {"l_sigma", r.l_sigma}});
        }
        w.text("trace.csv", csv.str());
        report["trace"] = rows;
        return report;
    }

    if (c.task == "heat-trace") {
        if (c.boundary.kind != "dirichlet" || g.num_edges() != 1)
            invalid("heat-trace needs a single edge with Dirichlet ends");
        const std::vector<double> ts = n.t_values.empty() ? std::vector<double>{0.01, 0.1, 1.0, 10.0} : n.t_values;
        std::ostringstream csv;
        csv << "t,spectral,theta,delta\n";
        double worst = 0.0;
        for (double t : ts) {
            const HeatTrace h = heat_trace_pair(g, t);
            worst = std::max(worst, std::abs(h.spectral - h.theta));
            csv << fmt(t) << "," << fmt(h.spectral) << "," << fmt(h.theta) << "," << fmt(h.spectral - h.theta) << "\n";
        }
        w.text("heat_trace.csv", csv.str());
        report["max_abs_delta"] = worst;
        return report;
    }

    // counting-compare
    if (n.k_range[1] < 50.0) throw Error(ErrorCode::ParameterOutOfRange, "counting-compare needs k_range up to >= 50");
    const Spectrum s = compute_spectrum(c, sys, std::max(0.0, n.k_range[0]), n.k_range[1]);
    w.text("spectrum.csv", spectrum_csv(s));
    const NoGoReport r = nogo_report(s, g);
    std::ostringstream csv;
    csv << "k,n_graph,n_riemann,ratio,semiclassical_bk,semiclassical_bk2\n";
    json pts = json::array();
    for (const auto& p : r.points) {
        const SemiclassicalCounts sc = semiclassical_counts(p.k);
        csv << fmt(p.k) << "," << p.n_graph << "," << fmt(p.n_riemann) << "," << fmt(p.ratio) << "," << fmt(sc.bk)
            << "," << fmt(sc.bk2) << "\n";
        pts.push_back({{"k", p.k}, {"n_graph", p.n_graph}, {"n_riemann", p.n_riemann}, {"ratio", p.ratio}});
    }
    w.text("counting.csv", csv.str());
    report["nogo"] = {{"points", pts},
                      {"weyl_slope", r.weyl_slope},
                      {"ratio_decreasing", r.ratio_decreasing},
                      {"ratio_at_1000", r.ratio_at_1000},
                      {"ratio_at_1000_extrapolated", r.ratio_at_1000_extrapolated}};
    return report;
}

}  // namespace

RunResult run(const JobConfig& config, const std::filesystem::path& out_dir) {
    Writer w(out_dir);
    RunResult res;
    auto fail = [&](ErrorCode code, const std::string& msg) {
        res.exit = exit_code_for(code);
        res.report = error_json(code, msg);
        try {
            w.text("error.json", res.report);
        } catch (...) {
        }
    };
    try {
        check_numeric(config);
        const json report = run_task(config, w);
        w.json_file("report.json", report);
        res.report = report.dump(2) + "\n";
    } catch (const Error& e) {
        fail(e.code(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        fail(ErrorCode::ComputeError, e.what());
    } catch (const std::exception& e) {
        fail(ErrorCode::ComputeError, e.what());
    }
    res.files = w.files;
    return res;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Spectra and trace formulas for Berry-Keating operators on metric graphs"};
    std::string config_path, out_dir = "out";
    int threads = 0;
    long long seed = -1;
    app.add_option("--config", config_path, "job configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for spectrum scans")->check(CLI::Range(1, 256));
    app.add_option("--seed", seed, "seed for random graphs")->check(CLI::NonNegativeNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << error_json(ErrorCode::ParseError, e.what());
        return static_cast<int>(ExitCode::Config);
    }

    JobConfig cfg;
    try {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) throw Error(ErrorCode::ParseError, "cannot read config file " + config_path);
        std::ostringstream ss;
        ss << f.rdbuf();
        cfg = parse_config(ss.str());
    } catch (const Error& e) {
        const std::string doc = error_json(e.code(), e.what());
        std::cout << doc;
        try {
            std::filesystem::create_directories(out_dir);
            std::ofstream(std::filesystem::path(out_dir) / "error.json", std::ios::binary) << doc;
        } catch (...) {
        }
        return static_cast<int>(exit_code_for(e.code()));
    }
    if (threads > 0) cfg.threads = threads;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

    const RunResult r = run(cfg, out_dir);
    std::cout << r.report;
    return static_cast<int>(r.exit);
}

}  // namespace bkg::cli
