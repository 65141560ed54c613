#pragma once

#include <aoi/analytic.hpp>
#include <aoi/errors.hpp>
#include <aoi/service.hpp>
#include <aoi/simulator.hpp>
#include <aoi/statistics.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace aoi {

struct CheckResult {
    std::string name;
    std::size_t source = 0;
    double measured = 0.0;
    double expected = 0.0;
    double bound = 0.0;   ///< allowed |measured - expected|, or the p-value floor for fit tests
    double p_value = -1.0;
    bool passed = false;
};

struct CheckSummary {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

/// Law of the system time of delivered packets: f_U(t) e^{-theta lambda_c t} / M_U(-theta lambda_c).
class TiltedServiceLaw {
public:
    TiltedServiceLaw(ServiceDistribution service, double tilt)
        : service_(std::move(service)), tilt_(tilt), norm_(service_.mgf_point(-tilt)) {}

    /// Integration by parts: int_0^t e^{-k u} f_U(u) du = e^{-k t} F_U(t) + k int_0^t e^{-k u} F_U(u) du.
    double cdf(double t) const {
        if (t <= 0.0) return 0.0;
        if (tilt_ == 0.0) return service_.cdf(t);
        double tail = 0.0;
        tail = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double u) { return std::exp(-tilt_ * u) * service_.cdf(u); }, 0.0, t, 15, 1e-13);
        return std::min(1.0, (std::exp(-tilt_ * t) * service_.cdf(t) + tilt_ * tail) / norm_);
    }

    double quantile(double q) const {
        double lo = 0.0, hi = std::max(service_.mean(), 1e-12);
        while (cdf(hi) < q) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < q ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    ServiceDistribution service_;
    double tilt_;
    double norm_;
};

inline constexpr std::size_t fit_bins = 50;
inline constexpr double fit_p_floor = 1e-3;
inline constexpr double sigma_band = 3.0;
inline constexpr std::uint64_t min_check_samples = 10000;

/// Effective preemption probability of a policy that the delivery-cycle formulas describe.
inline double effective_theta(const Policy& policy) {
    switch (policy.kind) {
    case PolicyKind::probabilistic: return policy.theta;
    case PolicyKind::non_preemptive: return 0.0;
    case PolicyKind::self_preemptive: return 1.0;
    case PolicyKind::globally_preemptive: break;
    }
    throw InvalidConfig("empirical checks need a probabilistic (or limiting) policy");
}

namespace detail {

inline CheckResult proportion_check(std::string name, std::size_t source, std::uint64_t hits, std::uint64_t trials,
                                    double p) {
    CheckResult r{std::move(name), source};
    r.expected = p;
    r.measured = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
    r.bound = sigma_band * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    r.passed = std::abs(r.measured - r.expected) <= r.bound;
    return r;
}

} // namespace detail

/// Goodness-of-fit of the simulated model against the delivery-cycle building blocks:
/// system-time law (chi-square), delivery probability, arrival-race probability, and
/// the rate of preempting same-source arrivals seen by a busy server.
inline CheckSummary empirical_checks(const SimReport& report, const SystemConfig& cfg, const Policy& policy,
                                     std::uint64_t min_samples = min_check_samples) {
    const double theta = effective_theta(policy);
    if (report.sources.size() != cfg.sources()) throw InvalidConfig("report does not match the configuration");
    const double lambda = cfg.total_rate();
    std::uint64_t idle_total = 0;
    for (const auto& s : report.sources) idle_total += s.transitions.idle_arrivals;

    CheckSummary out;
    for (std::size_t c = 0; c < cfg.sources(); ++c) {
        const SourceReport& sr = report.sources[c];
        const double tilt = theta * cfg.arrival_rates[c];
        const auto& samples = sr.system_time_samples;
        if (samples.size() < min_samples)
            throw InsufficientSamples("source " + std::to_string(c + 1) + " has " + std::to_string(samples.size()) +
                                      " system-time samples, need " + std::to_string(min_samples));

        if (std::holds_alternative<Deterministic>(cfg.service.law())) {
            const double d = std::get<Deterministic>(cfg.service.law()).value;
            CheckResult r{"system_time_law", c};
            r.expected = d;
            r.measured = *std::max_element(samples.begin(), samples.end(), [d](double a, double b) {
                return std::abs(a - d) < std::abs(b - d);
            });
            r.bound = 1e-9 * d;
            r.passed = std::abs(r.measured - d) <= r.bound;
            out.checks.push_back(r);
        } else {
            const TiltedServiceLaw law(cfg.service, tilt);
            std::vector<double> edges;
            for (std::size_t b = 1; b < fit_bins; ++b)
                edges.push_back(law.quantile(static_cast<double>(b) / static_cast<double>(fit_bins)));
            std::vector<std::uint64_t> counts(fit_bins, 0);
            for (double x : samples)
                ++counts[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin())];
            const auto chi = stats::chi_square_equiprobable(counts);
            CheckResult r{"system_time_law", c};
            r.measured = chi.statistic;
            r.expected = static_cast<double>(chi.dof);
            r.bound = fit_p_floor;
            r.p_value = chi.p_value;
            r.passed = chi.p_value > fit_p_floor;
            out.checks.push_back(r);
        }

        const std::uint64_t resolved = sr.transitions.served_to_completion + sr.counters.preempted;
        if (resolved < min_samples) throw InsufficientSamples("too few resolved services for source " + std::to_string(c + 1));
        out.checks.push_back(detail::proportion_check("delivery_probability", c, sr.transitions.served_to_completion,
                                                      resolved, cfg.service.mgf_point(-tilt)));

        if (idle_total < min_samples) throw InsufficientSamples("too few idle-server arrivals");
        out.checks.push_back(detail::proportion_check("arrival_race", c, sr.transitions.idle_arrivals, idle_total,
                                                      cfg.arrival_rates[c] / lambda));

        // Preempting arrivals form a Poisson process of rate theta*lambda_c while the server is busy
        // with source c, so the count over the busy time is Poisson with mean theta*lambda_c*busy.
        CheckResult r{"preemption_rate", c};
        const double busy = sr.transitions.busy_time;
        r.expected = tilt;
        r.measured = busy > 0.0 ? static_cast<double>(sr.transitions.same_source_preemptions) / busy : 0.0;
        r.bound = busy > 0.0 ? sigma_band * std::sqrt(tilt / busy) : 0.0;
        r.passed = std::abs(r.measured - r.expected) <= r.bound;
        out.checks.push_back(r);
    }
    return out;
}

} // namespace aoi
