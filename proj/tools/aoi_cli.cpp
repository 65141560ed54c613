// Command-line front end for analytic evaluation, simulation, sweeps and the validation suite.
#include <aoi/experiment.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit : int { ok = 0, usage = 1, validation_failed = 2, numerical = 3 };

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<double> theta;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    std::optional<double> horizon;
    std::optional<std::uint64_t> deliveries;
    std::optional<std::size_t> threads;
    std::optional<std::string> output;
    std::optional<std::string> policies;
    std::optional<std::string> mode;
    std::optional<std::string> trace;
    bool corrupt_a_prime = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "experiment file (INI)")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.overrides, "override a file key: section.key=value (repeatable)");
    cmd->add_option("--theta", o.theta, "preemption probability (system.theta)");
    cmd->add_option("--seed", o.seed, "master seed (simulation.seed)");
    cmd->add_option("--replications", o.replications, "independent replications (simulation.replications)");
    cmd->add_option("--horizon", o.horizon, "simulated time per replication (simulation.horizon)");
    cmd->add_option("--deliveries", o.deliveries, "per-source delivery target (simulation.deliveries)");
    cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores (simulation.threads)");
    cmd->add_option("-o,--output", o.output, "CSV destination, '-' for stdout (output.path)");
    cmd->add_option("--policies", o.policies, "comma-separated policies (sweep.policies)");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aoi::ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string number(double x) { return aoi::format_number(x); }

/// Precedence: command-line flag > --set > file > built-in default.
aoi::ExperimentSpec build_spec(const CommonOptions& o) {
    const std::string text = o.config.empty() ? std::string{} : read_text(o.config);
    auto tree = aoi::read_spec_tree(text);
    for (const auto& item : o.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw aoi::ParseError("--set expects section.key=value", 0, item);
        aoi::set_spec_value(tree, item.substr(0, eq), item.substr(eq + 1));
    }
    if (o.theta) aoi::set_spec_value(tree, "system.theta", number(*o.theta));
    if (o.seed) aoi::set_spec_value(tree, "simulation.seed", std::to_string(*o.seed));
    if (o.replications) aoi::set_spec_value(tree, "simulation.replications", std::to_string(*o.replications));
    if (o.horizon) aoi::set_spec_value(tree, "simulation.horizon", number(*o.horizon));
    if (o.deliveries) {
        aoi::set_spec_value(tree, "simulation.deliveries", std::to_string(*o.deliveries));
        if (!o.horizon) aoi::set_spec_value(tree, "simulation.horizon", "0");
    }
    if (o.threads) aoi::set_spec_value(tree, "simulation.threads", std::to_string(*o.threads));
    if (o.output) aoi::set_spec_value(tree, "output.path", *o.output == "-" ? "" : *o.output);
    if (o.policies) aoi::set_spec_value(tree, "sweep.policies", *o.policies);
    if (o.mode) aoi::set_spec_value(tree, "sweep.mode", *o.mode);
    if (o.trace) aoi::set_spec_value(tree, "output.trace", *o.trace);
    return aoi::spec_from_tree(tree, text);
}

int run_table(const aoi::ExperimentSpec& spec) {
    std::ofstream file;
    if (!spec.output.empty()) {
        file.open(spec.output, std::ios::binary);
        if (!file) throw aoi::ParseError("cannot write '" + spec.output + "'", 0, "path");
    }
    std::ostream& os = spec.output.empty() ? std::cout : file;
    aoi::write_csv_header(os);
    aoi::run_sweep(spec, [&](const aoi::SweepRecord& r) { aoi::write_csv_record(os, r); });
    return ok;
}

void write_trace(const aoi::ExperimentSpec& spec) {
    aoi::Policy policy = spec.policies.front();
    if (policy.kind == aoi::PolicyKind::probabilistic) policy.theta = spec.system.theta;
    aoi::SimConfig sim = spec.sim;
    sim.record_trace = true;
    const aoi::SimReport report = aoi::simulate(spec.system, policy, sim);
    std::ofstream os(spec.trace_output, std::ios::binary);
    if (!os) throw aoi::ParseError("cannot write '" + spec.trace_output + "'", 0, "trace");
    os << "replication,source,generation_time,delivery_time,system_time,interdeparture,paoi\n";
    for (const auto& r : report.trace)
        os << r.replication << ',' << r.source + 1 << ',' << number(r.generated) << ',' << number(r.delivered) << ','
           << number(r.system_time) << ',' << number(r.interdeparture) << ',' << number(r.peak_age) << '\n';
}

int run_validate(const aoi::ExperimentSpec& spec, bool corrupt) {
    aoi::ValidationOptions options;
    options.corrupt_a_prime = corrupt;
    const aoi::ValidationReport report = aoi::validate(spec, options);
    std::size_t failed = 0;
    for (const auto& c : report.checks) {
        if (!c.passed) ++failed;
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " [" << c.detail << "] measured=" << number(c.measured)
                  << " bound=" << number(c.bound) << "\n";
    }
    std::cout << report.checks.size() - failed << "/" << report.checks.size() << " checks passed\n";
    return failed == 0 ? ok : validation_failed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-information moments for multi-source M/G/1/1 queues with probabilistic preemption"};
    app.require_subcommand(1);

    CommonOptions analytic_opts, simulate_opts, sweep_opts, validate_opts;
    auto* analytic = app.add_subcommand("analytic", "closed-form moments at the configured point");
    add_common(analytic, analytic_opts);
    auto* simulate = app.add_subcommand("simulate", "discrete-event estimates at the configured point");
    add_common(simulate, simulate_opts);
    simulate->add_option("--trace", simulate_opts.trace, "per-delivery CSV dump for the first policy (output.trace)");
    auto* sweep = app.add_subcommand("sweep", "grid sweep over theta or lambda1");
    add_common(sweep, sweep_opts);
    sweep->add_option("--mode", sweep_opts.mode, "analytic, simulate or both (sweep.mode)");
    auto* validate = app.add_subcommand("validate", "cross-check formulas, graph solver and simulator");
    add_common(validate, validate_opts);
    validate->add_option("--mode", validate_opts.mode, "analytic skips the simulation checks (sweep.mode)");
    validate->add_flag("--corrupt-a-prime", validate_opts.corrupt_a_prime,
                       "flip the sign of the preemption term to confirm the suite catches it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (analytic->parsed()) {
            auto spec = build_spec(analytic_opts);
            spec.axis = aoi::SweepAxis::none;
            spec.mode = aoi::RunMode::analytic;
            return run_table(spec);
        }
        if (simulate->parsed()) {
            auto spec = build_spec(simulate_opts);
            spec.axis = aoi::SweepAxis::none;
            spec.mode = aoi::RunMode::simulate;
            const int rc = run_table(spec);
            if (!spec.trace_output.empty()) write_trace(spec);
            return rc;
        }
        if (sweep->parsed()) return run_table(build_spec(sweep_opts));
        if (validate->parsed()) {
            auto spec = build_spec(validate_opts);
            if (!validate_opts.mode) spec.mode = aoi::RunMode::both;
            return run_validate(spec, validate_opts.corrupt_a_prime);
        }
    } catch (const aoi::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage;
    } catch (const aoi::ValidationError& e) {
        std::cerr << "invalid experiment: " << e.what() << "\n";
        return usage;
    } catch (const aoi::InvalidConfig& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return usage;
    } catch (const aoi::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
    return usage;
}
