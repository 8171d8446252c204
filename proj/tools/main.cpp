#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "ecs/cli.hpp"
#include "ecs/errors.hpp"

namespace {

struct FlagValues {
    std::string config_path;
    std::string n;
    int n_particles = 0;
    std::string lambda;
    double q = 0.0;
    std::string method;
    int smax = 0, nucut = 0, shell = 0;
    double a = 0.0;
    std::string delta_mode;
    int nodes = 0;
    std::string out;
    std::string format;
    std::string only;
    int orders = 0;
    int eta_order = 0;
    int oracle_cutoff = 0;
};

void add_common_flags(CLI::App* cmd, FlagValues& v) {
    cmd->add_option("--config", v.config_path, "JSON config file; flags override its values");
    cmd->add_option("--n", v.n, "target lattice vector, e.g. 0,0");
    cmd->add_option("--N", v.n_particles, "particle count (inferred from --n when omitted)");
    cmd->add_option("--lambda", v.lambda, "coupling parameter: decimal, p/q, or sqrtK");
    cmd->add_option("--q", v.q, "elliptic nome in [0,1)");
    cmd->add_option("--method", v.method,
                    "perturbative | implicit | explicit | degenerate | all");
    cmd->add_option("--smax", v.smax, "gamma-series depth");
    cmd->add_option("--nucut", v.nucut, "max |nu| per shift");
    cmd->add_option("--shell", v.shell, "lattice shell radius");
    cmd->add_option("--a", v.a, "expansion-point override");
    cmd->add_option("--delta-mode", v.delta_mode, "auto | n2 | exhaustive | rational");
    cmd->add_option("--nodes", v.nodes, "quadrature nodes per contour (power of two)");
    cmd->add_option("--out", v.out, "output path (default stdout)");
    cmd->add_option("--format", v.format, "json | csv");
    cmd->add_option("--only", v.only, "verify: run a single named block");
    cmd->add_option("--orders", v.orders, "qseries: eta orders to grade");
    cmd->add_option("--eta-order", v.eta_order, "explicit solver eta truncation");
    cmd->add_option("--oracle-cutoff", v.oracle_cutoff, "truncated-operator cutoff");
}

ecs::RunConfig build_config(const CLI::App* cmd, const FlagValues& v) {
    ecs::RunConfig cfg;
    if (cmd->count("--config")) cfg = ecs::load_config_file(v.config_path);
    if (cmd->count("--n")) cfg.target = ecs::parse_lattice_vector(v.n);
    if (cmd->count("--n") && !cmd->count("--N"))
        cfg.n_particles = static_cast<int>(cfg.target.size());
    if (cmd->count("--N")) {
        cfg.n_particles = v.n_particles;
        if (cmd->count("--n") && static_cast<int>(cfg.target.size()) != v.n_particles)
            throw ecs::ConfigError("--n and --N disagree on the particle count");
        if (!cmd->count("--n") &&
            static_cast<int>(cfg.target.size()) != v.n_particles)
            cfg.target = ecs::LatticeVector(v.n_particles, 0);
    }
    if (cmd->count("--lambda")) {
        cfg.lambda_origin = v.lambda;
        cfg.lambda = ecs::parse_lambda(v.lambda);
    }
    if (cmd->count("--q")) cfg.q = v.q;
    if (cmd->count("--method")) cfg.method = v.method;
    if (cmd->count("--smax")) cfg.policy.s_max = v.smax;
    if (cmd->count("--nucut")) cfg.policy.nu_cutoff = v.nucut;
    if (cmd->count("--shell")) cfg.policy.shell_radius = v.shell;
    if (cmd->count("--a")) cfg.a_override = v.a;
    if (cmd->count("--delta-mode")) cfg.constants_mode = v.delta_mode;
    if (cmd->count("--nodes")) cfg.nodes = v.nodes;
    if (cmd->count("--out")) cfg.out_path = v.out;
    if (cmd->count("--format")) cfg.format = v.format;
    if (cmd->count("--only")) cfg.only = v.only;
    if (cmd->count("--orders")) cfg.orders = v.orders;
    if (cmd->count("--eta-order")) cfg.eta_order = v.eta_order;
    if (cmd->count("--oracle-cutoff")) cfg.oracle_cutoff = v.oracle_cutoff;
    if (cfg.format != "json" && cfg.format != "csv")
        throw ecs::ConfigError("format must be json or csv");
    return cfg;
}

int run(const CLI::App* cmd, const FlagValues& v,
        ecs::CommandResult (*fn)(const ecs::RunConfig&)) {
    ecs::RunConfig cfg;
    try {
        cfg = build_config(cmd, v);
    } catch (const ecs::Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return ecs::kConfigError;
    }
    try {
        auto result = fn(cfg);
        if (!result.message.empty()) std::fprintf(stderr, "%s\n", result.message.c_str());
        return ecs::write_output(result, cfg);
    } catch (const ecs::ResonanceError& e) {
        std::fprintf(stderr, "resonance: %s\nhint: retry with --method degenerate\n", e.what());
        return ecs::kResonance;
    } catch (const ecs::NoConvergenceError& e) {
        std::fprintf(stderr, "no convergence: %s\n", e.what());
        return ecs::kNoConvergence;
    } catch (const ecs::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return ecs::kConfigError;
    } catch (const ecs::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eigenvalues and eigenfunctions of the elliptic Calogero-Sutherland model"};
    app.require_subcommand(1);

    FlagValues vs, vo, vv, vq;
    auto* spectrum = app.add_subcommand("spectrum", "solve for one lattice vector");
    add_common_flags(spectrum, vs);
    auto* compare = app.add_subcommand("oracle-compare",
                                       "solvers against the truncated-matrix oracle");
    add_common_flags(compare, vo);
    auto* verify = app.add_subcommand("verify", "identity and bound suite");
    add_common_flags(verify, vv);
    auto* qseries = app.add_subcommand("qseries", "eta-graded terms over a q grid");
    add_common_flags(qseries, vq);

    CLI11_PARSE(app, argc, argv);

    if (spectrum->parsed()) return run(spectrum, vs, ecs::cmd_spectrum);
    if (compare->parsed()) return run(compare, vo, ecs::cmd_oracle_compare);
    if (verify->parsed()) return run(verify, vv, ecs::cmd_verify);
    if (qseries->parsed()) return run(qseries, vq, ecs::cmd_qseries);
    return ecs::kConfigError;
}
