#pragma once

#include <aoi/analytic.hpp>
#include <aoi/checks.hpp>
#include <aoi/errors.hpp>
#include <aoi/semi_markov.hpp>
#include <aoi/service.hpp>
#include <aoi/simulator.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace aoi {

enum class SweepAxis { none, theta, lambda1 };
enum class RunMode { analytic, simulate, both };

inline std::string to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::theta: return "theta";
    case SweepAxis::lambda1: return "lambda1";
    }
    return "?";
}

inline std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::analytic: return "analytic";
    case RunMode::simulate: return "simulate";
    case RunMode::both: return "both";
    }
    return "?";
}

struct ExperimentSpec {
    SystemConfig system{{2.0, 6.0}, 0.28, ServiceDistribution::lognormal(-1.0, 1.0)};
    SweepAxis axis = SweepAxis::none;
    double start = 0.0;
    double stop = 1.0;
    std::size_t points = 11;
    std::vector<Policy> policies{Policy::probabilistic(0.28)};
    RunMode mode = RunMode::analytic;
    SimConfig sim = [] {
        SimConfig s;
        s.horizon = 1e5;
        s.replications = 10;
        return s;
    }();
    std::string output;       ///< CSV path; empty means standard output
    std::string trace_output; ///< optional per-delivery dump for single-point simulations

    /// Throws ValidationError when an invariant is broken.
    void validate() const {
        try {
            system.validate();
        } catch (const InvalidConfig& e) {
            throw ValidationError(e.what());
        }
        if (!(system.theta >= 0.0 && system.theta <= 1.0))
            throw ValidationError("theta = " + std::to_string(system.theta) + " is outside [0, 1]");
        if (policies.empty()) throw ValidationError("at least one policy is required");
        if (axis != SweepAxis::none) {
            if (!(start < stop)) throw ValidationError("sweep start must be below stop");
            if (points < 2) throw ValidationError("a sweep needs at least 2 points");
        }
        if (axis == SweepAxis::theta && !(start >= 0.0 && stop <= 1.0))
            throw ValidationError("theta sweep must stay inside [0, 1]");
        if (axis == SweepAxis::lambda1) {
            if (system.sources() != 2)
                throw ValidationError("lambda1 sweep needs exactly 2 sources, got " + std::to_string(system.sources()));
            if (!(stop > 0.0 && start < system.total_rate()))
                throw ValidationError("lambda1 sweep range leaves no point with both rates positive");
        }
        if (mode != RunMode::analytic) {
            try {
                sim.validate();
            } catch (const InvalidConfig& e) {
                throw ValidationError(e.what());
            }
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

/// Line of `key` inside `[section]` in the raw document, or 0.
inline std::size_t line_of(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream is(text);
    std::string line, current;
    for (std::size_t n = 1; std::getline(is, line); ++n) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            current = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (current == section && eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
    }
    return 0;
}

inline double parse_double(const std::string& v, const std::string& what) {
    double x = 0.0;
    const std::string t = trim(v);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ParseError("'" + v + "' is not a number", 0, what);
    return x;
}

inline std::uint64_t parse_unsigned(const std::string& v, const std::string& what) {
    std::uint64_t x = 0;
    const std::string t = trim(v);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        // Allow integral values in scientific notation such as 1e5.
        const double d = parse_double(t, what);
        if (!(d >= 0.0 && d == std::floor(d) && d < 1.8e19))
            throw ParseError("'" + v + "' is not a non-negative integer", 0, what);
        return static_cast<std::uint64_t>(d);
    }
    return x;
}

} // namespace detail

/// Parses `exponential(rate=1)`, `gamma(shape=2, rate=1)`, `deterministic(value=1)`
/// or `lognormal(alpha=-1, omega=1)`.
inline ServiceDistribution parse_service(const std::string& text) {
    static const std::regex form(R"(^\s*([a-z_]+)\s*\(([^)]*)\)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, form)) throw ParseError("service must look like name(key=value, ...)", 0, "service");
    const std::string name = m[1];
    std::map<std::string, double> args;
    if (!detail::trim(m[2]).empty())
        for (const auto& part : detail::split(m[2], ',')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw ParseError("service argument '" + part + "' lacks '='", 0, "service");
            const std::string key = detail::trim(part.substr(0, eq));
            if (!args.emplace(key, detail::parse_double(part.substr(eq + 1), "service")).second)
                throw ParseError("service argument '" + key + "' given twice", 0, "service");
        }
    auto take = [&](std::initializer_list<const char*> names) {
        std::vector<double> values;
        for (const char* n : names) {
            auto it = args.find(n);
            if (it == args.end()) throw ParseError(name + " needs argument '" + n + "'", 0, "service");
            values.push_back(it->second);
            args.erase(it);
        }
        if (!args.empty()) throw ParseError(name + " has no argument '" + args.begin()->first + "'", 0, "service");
        return values;
    };
    try {
        if (name == "exponential") return ServiceDistribution::exponential(take({"rate"})[0]);
        if (name == "gamma") {
            const auto v = take({"shape", "rate"});
            return ServiceDistribution::gamma(v[0], v[1]);
        }
        if (name == "deterministic") return ServiceDistribution::deterministic(take({"value"})[0]);
        if (name == "lognormal") {
            const auto v = take({"alpha", "omega"});
            return ServiceDistribution::lognormal(v[0], v[1]);
        }
    } catch (const InvalidConfig& e) {
        throw ValidationError(e.what());
    }
    throw ParseError("unknown service distribution '" + name + "'", 0, "service");
}

inline Policy parse_policy(const std::string& name, double theta) {
    if (name == "probabilistic") return Policy::probabilistic(theta);
    if (name == "non_preemptive") return Policy::non_preemptive();
    if (name == "self_preemptive") return Policy::self_preemptive();
    if (name == "globally_preemptive") return Policy::globally_preemptive();
    throw ParseError("unknown policy '" + name + "'", 0, "policies");
}

/// Recognized keys per section.
inline const std::map<std::string, std::set<std::string>>& spec_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"system", {"arrival_rates", "theta", "service"}},
        {"sweep", {"axis", "start", "stop", "points", "policies", "mode"}},
        {"simulation", {"horizon", "deliveries", "warmup", "seed", "replications", "batches", "threads"}},
        {"output", {"path", "trace"}},
    };
    return keys;
}

/// Reads an INI document into a property tree and rejects unknown sections and keys.
inline boost::property_tree::ptree read_spec_tree(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }
    const auto& keys = spec_keys();
    for (const auto& [section, body] : tree) {
        auto it = keys.find(section);
        if (it == keys.end()) {
            if (body.empty()) throw ParseError("key outside of any section", detail::line_of(text, "", section), section);
            throw ParseError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body)
            if (!it->second.contains(key))
                throw ParseError("unknown key in [" + section + "]", detail::line_of(text, section, key), key);
    }
    return tree;
}

/// Sets `section.key` to `value`, validating the name.
inline void set_spec_value(boost::property_tree::ptree& tree, const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) throw ParseError("override must name section.key", 0, dotted);
    const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
    const auto& keys = spec_keys();
    auto it = keys.find(section);
    if (it == keys.end() || !it->second.contains(key)) throw ParseError("unknown key", 0, dotted);
    tree.put(boost::property_tree::ptree::path_type(section + "/" + key, '/'), value);
}

/// Builds a validated spec from a parsed tree. `text` is only used for line numbers.
inline ExperimentSpec spec_from_tree(const boost::property_tree::ptree& tree, const std::string& text = {}) {
    ExperimentSpec spec;
    auto get = [&](const char* section, const char* key) -> std::optional<std::string> {
        const auto child = tree.get_child_optional(boost::property_tree::ptree::path_type(
            std::string(section) + "/" + key, '/'));
        if (!child) return std::nullopt;
        return child->get_value<std::string>();
    };
    auto with_line = [&](const char* section, const char* key, auto&& fn) {
        const auto v = get(section, key);
        if (!v) return;
        try {
            fn(*v);
        } catch (const ParseError& e) {
            throw ParseError(e.message(), detail::line_of(text, section, key), key);
        }
    };

    with_line("system", "arrival_rates", [&](const std::string& v) {
        spec.system.arrival_rates.clear();
        for (const auto& item : detail::split(v, ','))
            spec.system.arrival_rates.push_back(detail::parse_double(item, "arrival_rates"));
    });
    with_line("system", "theta", [&](const std::string& v) { spec.system.theta = detail::parse_double(v, "theta"); });
    with_line("system", "service", [&](const std::string& v) { spec.system.service = parse_service(v); });

    with_line("sweep", "axis", [&](const std::string& v) {
        const std::string t = detail::trim(v);
        if (t == "none") spec.axis = SweepAxis::none;
        else if (t == "theta") spec.axis = SweepAxis::theta;
        else if (t == "lambda1") spec.axis = SweepAxis::lambda1;
        else throw ParseError("axis must be none, theta or lambda1");
    });
    with_line("sweep", "start", [&](const std::string& v) { spec.start = detail::parse_double(v, "start"); });
    with_line("sweep", "stop", [&](const std::string& v) { spec.stop = detail::parse_double(v, "stop"); });
    with_line("sweep", "points", [&](const std::string& v) { spec.points = detail::parse_unsigned(v, "points"); });
    with_line("sweep", "mode", [&](const std::string& v) {
        const std::string t = detail::trim(v);
        if (t == "analytic") spec.mode = RunMode::analytic;
        else if (t == "simulate") spec.mode = RunMode::simulate;
        else if (t == "both") spec.mode = RunMode::both;
        else throw ParseError("mode must be analytic, simulate or both");
    });
    spec.policies = {Policy::probabilistic(spec.system.theta)};
    with_line("sweep", "policies", [&](const std::string& v) {
        spec.policies.clear();
        for (const auto& name : detail::split(v, ',')) {
            const Policy p = parse_policy(name, spec.system.theta);
            if (std::find(spec.policies.begin(), spec.policies.end(), p) != spec.policies.end())
                throw ParseError("policy '" + name + "' listed twice");
            spec.policies.push_back(p);
        }
    });

    with_line("simulation", "horizon", [&](const std::string& v) { spec.sim.horizon = detail::parse_double(v, "horizon"); });
    with_line("simulation", "deliveries", [&](const std::string& v) {
        spec.sim.deliveries = detail::parse_unsigned(v, "deliveries");
        // An explicit delivery count selects the count-based stop rule unless a horizon is also given.
        if (!get("simulation", "horizon")) spec.sim.horizon = 0.0;
    });
    with_line("simulation", "warmup", [&](const std::string& v) { spec.sim.warmup = detail::parse_double(v, "warmup"); });
    with_line("simulation", "seed", [&](const std::string& v) { spec.sim.seed = detail::parse_unsigned(v, "seed"); });
    with_line("simulation", "replications",
              [&](const std::string& v) { spec.sim.replications = detail::parse_unsigned(v, "replications"); });
    with_line("simulation", "batches", [&](const std::string& v) { spec.sim.batches = detail::parse_unsigned(v, "batches"); });
    with_line("simulation", "threads", [&](const std::string& v) { spec.sim.threads = detail::parse_unsigned(v, "threads"); });

    with_line("output", "path", [&](const std::string& v) { spec.output = detail::trim(v); });
    with_line("output", "trace", [&](const std::string& v) { spec.trace_output = detail::trim(v); });

    spec.validate();
    return spec;
}

inline ExperimentSpec parse_spec(const std::string& text) { return spec_from_tree(read_spec_tree(text), text); }

// ---------------------------------------------------------------------------------------------
// Sweeps

struct SourceRow {
    double mean_aoi = NAN;
    double mean_paoi = NAN;
    double aoi_m2 = NAN;
    double paoi_m2 = NAN;
    double ci_halfwidth = NAN; ///< NaN for analytic values
};

/// One (grid point, policy, mode) result; written as one CSV line per source.
struct SweepRecord {
    double axis_value = NAN;
    Policy policy;
    RunMode mode = RunMode::analytic; ///< analytic or simulate
    std::vector<SourceRow> sources;
    double sum_mean_aoi = NAN;
    double sum_halfwidth = NAN;
    double diff_ratio_pct = NAN;
    std::string remark;
};

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{"axis_value", "policy",  "source",       "mean_aoi",
                                               "mean_paoi",  "aoi_m2",  "paoi_m2",      "ci_halfwidth",
                                               "sum_mean_aoi", "diff_ratio_pct", "mode", "remark"};
    return cols;
}

inline std::string format_number(double x) {
    if (std::isnan(x)) return {};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline void write_csv_header(std::ostream& os) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
}

inline void write_csv_record(std::ostream& os, const SweepRecord& r) {
    for (std::size_t c = 0; c < r.sources.size(); ++c) {
        const SourceRow& s = r.sources[c];
        const std::vector<std::string> cells{format_number(r.axis_value),  r.policy.name(),
                                             std::to_string(c + 1),        format_number(s.mean_aoi),
                                             format_number(s.mean_paoi),   format_number(s.aoi_m2),
                                             format_number(s.paoi_m2),     format_number(s.ci_halfwidth),
                                             format_number(r.sum_mean_aoi), format_number(r.diff_ratio_pct),
                                             to_string(r.mode),            r.remark};
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
        os << "\n";
    }
    os.flush();
}

struct SweepPoint {
    double axis_value = NAN;
    SystemConfig system;
};

/// Grid points of an experiment; lambda1 points with a non-positive rate on either source are dropped.
inline std::vector<SweepPoint> sweep_points(const ExperimentSpec& spec) {
    std::vector<SweepPoint> out;
    if (spec.axis == SweepAxis::none) {
        out.push_back({NAN, spec.system});
        return out;
    }
    const double total = spec.system.total_rate();
    for (std::size_t i = 0; i < spec.points; ++i) {
        const double x = i + 1 == spec.points
                             ? spec.stop
                             : spec.start + (spec.stop - spec.start) * static_cast<double>(i) /
                                                static_cast<double>(spec.points - 1);
        SweepPoint p{x, spec.system};
        if (spec.axis == SweepAxis::theta) {
            p.system.theta = x;
        } else {
            if (!(x > 0.0) || !(total - x > 0.0)) continue;
            p.system.arrival_rates = {x, total - x};
        }
        out.push_back(p);
    }
    return out;
}

namespace detail {

inline SweepRecord analytic_record(const SystemConfig& point_cfg, const Policy& policy) {
    SweepRecord r;
    r.policy = policy;
    r.mode = RunMode::analytic;
    r.sources.resize(point_cfg.sources());
    if (policy.kind == PolicyKind::globally_preemptive) {
        r.remark = "no closed form for this policy; use simulate mode";
        return r;
    }
    SystemConfig cfg = point_cfg;
    cfg.theta = effective_theta(policy);
    const auto metrics = all_moments(cfg, 2);
    r.sum_mean_aoi = 0.0;
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        r.sources[c] = {metrics[c].aoi_moments[0], metrics[c].paoi_moments[0], metrics[c].aoi_moments[1],
                        metrics[c].paoi_moments[1], NAN};
        r.sum_mean_aoi += metrics[c].aoi_moments[0];
    }
    return r;
}

inline SweepRecord simulated_record(const SystemConfig& point_cfg, const Policy& policy, const SimConfig& sim) {
    SweepRecord r;
    r.policy = policy;
    r.mode = RunMode::simulate;
    SystemConfig cfg = point_cfg;
    if (policy.kind == PolicyKind::probabilistic) cfg.theta = policy.theta;
    const SimReport rep = simulate(cfg, policy, sim);
    r.sum_mean_aoi = 0.0;
    for (const auto& s : rep.sources) {
        r.sources.push_back({s.mean_aoi.mean, s.mean_paoi.mean, s.aoi_m2, s.paoi.raw(2), s.mean_aoi.half_width});
        r.sum_mean_aoi += s.mean_aoi.mean;
    }
    r.sum_halfwidth = rep.sum_mean_aoi.half_width;
    return r;
}

inline void fill_ratios(std::vector<SweepRecord>& records) {
    const auto prob = std::find_if(records.begin(), records.end(),
                                   [](const SweepRecord& r) { return r.policy.kind == PolicyKind::probabilistic; });
    if (prob == records.end() || std::isnan(prob->sum_mean_aoi)) return;
    const double base = prob->sum_mean_aoi;
    for (auto& r : records)
        if (!std::isnan(r.sum_mean_aoi)) r.diff_ratio_pct = (r.sum_mean_aoi - base) / base * 100.0;
}

} // namespace detail

/// Runs the sweep and hands each record to `sink` in deterministic grid order as soon as
/// its grid point completes, so partial results survive a later failure.
inline std::vector<SweepRecord> run_sweep(const ExperimentSpec& spec,
                                          const std::function<void(const SweepRecord&)>& sink = {}) {
    spec.validate();
    std::vector<SweepRecord> all;
    // Baselines do not depend on theta, so a theta sweep computes them once.
    std::map<std::pair<int, int>, SweepRecord> baseline_cache;
    const bool cache_baselines = spec.axis == SweepAxis::theta || spec.axis == SweepAxis::none;

    std::vector<RunMode> modes;
    if (spec.mode != RunMode::simulate) modes.push_back(RunMode::analytic);
    if (spec.mode != RunMode::analytic) modes.push_back(RunMode::simulate);

    for (const SweepPoint& point : sweep_points(spec)) {
        std::vector<SweepRecord> at_point;
        for (RunMode mode : modes) {
            std::vector<SweepRecord> block;
            for (const Policy& configured : spec.policies) {
                Policy policy = configured;
                if (policy.kind == PolicyKind::probabilistic) policy.theta = point.system.theta;
                const bool baseline = policy.kind != PolicyKind::probabilistic;
                const auto key = std::pair{static_cast<int>(mode), static_cast<int>(policy.kind)};
                if (baseline && cache_baselines) {
                    if (auto it = baseline_cache.find(key); it != baseline_cache.end()) {
                        block.push_back(it->second);
                        continue;
                    }
                }
                SweepRecord r = mode == RunMode::analytic ? detail::analytic_record(point.system, policy)
                                                          : detail::simulated_record(point.system, policy, spec.sim);
                if (baseline && cache_baselines) baseline_cache.emplace(key, r);
                block.push_back(std::move(r));
            }
            detail::fill_ratios(block);
            for (auto& r : block) r.axis_value = point.axis_value;
            at_point.insert(at_point.end(), block.begin(), block.end());
        }
        for (const auto& r : at_point) {
            if (sink) sink(r);
            all.push_back(r);
        }
    }
    return all;
}

// ---------------------------------------------------------------------------------------------
// Validation suite

struct ValidationCheck {
    std::string name;
    std::string detail;
    double measured = 0.0;
    double bound = 0.0;
    bool passed = false;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
    }
};

struct ValidationOptions {
    /// Flips the sign of a'_c in the closed form; the graph comparison must then fail.
    bool corrupt_a_prime = false;
    /// Deliveries per source used for the distribution-fit checks.
    std::uint64_t fit_deliveries = 20000;
};

namespace detail {

inline std::string source_label(std::size_t c) { return "source " + std::to_string(c + 1); }

} // namespace detail

/// Cross-checks the formulas at every grid point of the experiment and compares them against simulation.
inline ValidationReport validate(const ExperimentSpec& spec, const ValidationOptions& options = {}) {
    spec.validate();
    ValidationReport report;
    auto add = [&](std::string name, std::string detail, double measured, double bound, bool passed) {
        report.checks.push_back({std::move(name), std::move(detail), measured, bound, passed});
    };
    const double sign = options.corrupt_a_prime ? -1.0 : 1.0;
    const int order = Jet::default_order;

    for (const SweepPoint& point : sweep_points(spec)) {
        const SystemConfig& cfg = point.system;
        const std::string at = std::isnan(point.axis_value) ? std::string{}
                                                           : " at " + to_string(spec.axis) + "=" +
                                                                 format_number(point.axis_value);
        const AnalyticModel model(cfg, order, sign);
        const AnalyticModel moment_model(cfg, jet_order_for_moments(4), sign);
        for (std::size_t c = 0; c < cfg.sources(); ++c) {
            const std::string where = detail::source_label(c) + at;
            // A numerical failure inside a check counts as that check failing.
            auto check = [&](const std::string& name, double bound, auto measure) {
                try {
                    const double v = measure();
                    add(name, where, v, bound, v <= bound);
                } catch (const Error& e) {
                    add(name, where + ": " + e.what(), NAN, bound, false);
                }
            };
            check("normalization", 1e-10, [&] {
                double worst = 0.0;
                for (const Jet& j : {model.system_time(c), model.interdeparture(c), model.paoi(c)})
                    worst = std::max(worst, std::abs(j[0] - 1.0));
                return worst;
            });
            check("normalization_aoi", 1e-8, [&] { return std::abs(model.aoi(c)[0] - 1.0); });

            const LabeledDigraph g = build_interdeparture_graph(cfg, c, order);
            const auto h = transfer_functions(g);
            check("closed_form_vs_graph", 1e-9, [&] {
                return max_relative_difference(model.interdeparture(c), h[g.find(delivered_node_name)]);
            });
            check("graph_residual", 1e-11, [&] { return transfer_residual(g, h); });
            check("moment_routes", moment_route_tolerance,
                  [&] { return moment_model.metrics(c, 4).route_discrepancy; });
        }
    }

    if (spec.mode == RunMode::analytic) return report;

    // Policy limits under shared seeds.
    SimConfig short_sim = spec.sim;
    short_sim.horizon = spec.sim.horizon > 0.0 ? std::min(spec.sim.horizon, 1e4) : 0.0;
    short_sim.deliveries = std::min<std::uint64_t>(spec.sim.deliveries, 5000);
    short_sim.replications = std::min<std::size_t>(spec.sim.replications, 2);
    const bool zero_same = simulate(spec.system, Policy::probabilistic(0.0), short_sim) ==
                           simulate(spec.system, Policy::non_preemptive(), short_sim);
    add("policy_limit_theta0", "probabilistic(0) vs non_preemptive", zero_same ? 0.0 : 1.0, 0.0, zero_same);
    const bool one_same = simulate(spec.system, Policy::probabilistic(1.0), short_sim) ==
                          simulate(spec.system, Policy::self_preemptive(), short_sim);
    add("policy_limit_theta1", "probabilistic(1) vs self_preemptive", one_same ? 0.0 : 1.0, 0.0, one_same);

    // Analytic against simulation at the configured operating point.
    const Policy policy = Policy::probabilistic(spec.system.theta);
    const SimReport rep = simulate(spec.system, policy, spec.sim);
    const auto metrics = all_moments(spec.system, 2);
    for (std::size_t c = 0; c < spec.system.sources(); ++c) {
        const auto& s = rep.sources[c];
        const double aoi_band = std::max(0.02 * metrics[c].mean_aoi(), s.mean_aoi.half_width);
        const double aoi_gap = std::abs(s.mean_aoi.mean - metrics[c].mean_aoi());
        add("analytic_vs_simulation_aoi", detail::source_label(c), aoi_gap, aoi_band, aoi_gap <= aoi_band);
        const double paoi_band = std::max(0.02 * metrics[c].mean_paoi(), s.mean_paoi.half_width);
        const double paoi_gap = std::abs(s.mean_paoi.mean - metrics[c].mean_paoi());
        add("analytic_vs_simulation_paoi", detail::source_label(c), paoi_gap, paoi_band, paoi_gap <= paoi_band);
    }

    // Distribution-level fits on a delivery-count run.
    SimConfig fit_sim = spec.sim;
    fit_sim.horizon = 0.0;
    fit_sim.deliveries = std::max(options.fit_deliveries, min_check_samples);
    fit_sim.replications = 1;
    const SimReport fit = simulate(spec.system, policy, fit_sim);
    for (const CheckResult& r : empirical_checks(fit, spec.system, policy).checks) {
        std::string detail = detail::source_label(r.source) + ": expected " + format_number(r.expected);
        if (r.p_value >= 0.0) detail += ", p=" + format_number(r.p_value);
        add(r.name, detail, r.measured, r.bound, r.passed);
    }
    return report;
}

} // namespace aoi
