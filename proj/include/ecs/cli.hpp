#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ecs/lattice.hpp"
#include "ecs/solver.hpp"

namespace ecs {

enum ExitCode : int {
    kOk = 0,
    kResonance = 2,
    kNoConvergence = 3,
    kConfigError = 4,
    kCheckFailed = 5,
};

struct RunConfig {
    int n_particles = 2;
    double lambda = 2.5;
    std::string lambda_origin = "2.5";  // symbolic source: decimal, p/q or sqrtK
    double q = 0.05;
    LatticeVector target{0, 0};

    TruncationPolicy policy;

    std::string constants_mode = "auto";  // auto | n2 | exhaustive | rational
    std::optional<double> a_override;
    RationalGridInput rational;

    int nodes = 256;
    double fd_step = 1e-3;
    int fd_levels = 3;

    std::string method = "all";  // perturbative | implicit | explicit | degenerate | all
    int eta_order = 8;
    int oracle_cutoff = 16;
    int max_iter = 200;
    double fp_tol = 1e-12;

    std::string only;   // verify: run a single block
    int orders = 3;     // qseries: eta orders to grade
    std::vector<double> q_grid{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};

    std::string out_path;         // empty: stdout
    std::string format = "json";  // json | csv

    ModelParams params() const;
    HypothesisConstants resolve_constants(const LatticeVector& n) const;
};

// lambda accepted as decimal, fraction "p/q", or "sqrtK".
double parse_lambda(const std::string& text);

// Comma-separated integer vector, e.g. "0,0" or "2,1,0".
LatticeVector parse_lattice_vector(const std::string& text);

// Merge a JSON config document into cfg; unknown keys raise ConfigError.
void apply_config_json(RunConfig& cfg, const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);

nlohmann::ordered_json resolved_config_json(const RunConfig& cfg);

struct CommandResult {
    int exit_code = kOk;
    nlohmann::ordered_json document;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
    std::string message;  // human-readable note (stderr)
};

CommandResult cmd_spectrum(const RunConfig& cfg);
CommandResult cmd_oracle_compare(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
CommandResult cmd_qseries(const RunConfig& cfg);

// Serialize per cfg.format to cfg.out_path (or return as string when path empty).
std::string render_output(const CommandResult& result, const RunConfig& cfg);
int write_output(const CommandResult& result, const RunConfig& cfg);

std::string format_double(double v);  // 17 significant digits, locale-independent

}  // namespace ecs
