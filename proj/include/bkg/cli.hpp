#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bkg/common.hpp"

namespace bkg::cli {

struct EdgeConfig {
    std::string id;
    double a = 1.0;
    double b = 2.0;
    std::string from;
    std::string to;
    bool operator==(const EdgeConfig&) const = default;
};

struct GraphConfig {
    std::vector<EdgeConfig> edges;
    bool directed = true;
    int random_edges = 0;  // > 0 replaces the edge list by a seeded random graph
    double random_l_lo = 1.0;
    double random_l_hi = 3.0;
    bool operator==(const GraphConfig&) const = default;
};

using CMatrixRows = std::vector<std::vector<cplx>>;

struct BoundaryConfig {
    // dirichlet, neumann, robin, kirchhoff, ring_phase, matrices, log_laplacian
    std::string kind = "dirichlet";
    std::vector<double> rho;
    double c = 0.0;
    bool dirichlet_leaves = false;
    CMatrixRows A;
    CMatrixRows B;
    bool operator==(const BoundaryConfig&) const = default;
};

struct NumericConfig {
    std::array<double, 2> k_range{0.0, 50.0};
    double tol = 1e-12;
    double orbit_cutoff = 0.0;
    std::vector<double> t_values;
    double eps = 1e-10;
    double kappa_max = 20.0;
    double k_step = 0.05;
    std::vector<double> k_values;
    bool operator==(const NumericConfig&) const = default;
};

struct JobConfig {
    std::string op = "BK2";  // BK or BK2
    std::string task;
    GraphConfig graph;
    BoundaryConfig boundary;
    NumericConfig numeric;
    std::uint64_t seed = 0;
    int threads = 1;
    bool operator==(const JobConfig&) const = default;
};

// Throws Error(ParseError) on malformed text or fields of the wrong type.
JobConfig parse_config(const std::string& text);
std::string serialize_config(const JobConfig& c);

enum class ExitCode { Ok = 0, Config = 2, Validation = 3, Compute = 4 };

ExitCode exit_code_for(ErrorCode code);
const char* category_name(ExitCode code);
// {"error": {"category": ..., "code": ..., "message": ...}}
std::string error_json(ErrorCode code, const std::string& message);

struct RunResult {
    ExitCode exit = ExitCode::Ok;
    std::string report;  // JSON summary or error document
    std::vector<std::string> files;
};

// Runs one job and writes its artifacts into out_dir.  Never throws for
// errors raised by the computation; they become an error result.
RunResult run(const JobConfig& config, const std::filesystem::path& out_dir);

int main_entry(int argc, char** argv);

}  // namespace bkg::cli
