#pragma once

#include <aoi/errors.hpp>
#include <aoi/jet.hpp>
#include <aoi/service.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace aoi {

/// Multi-source M/G/1/1 system under the probabilistically preemptive policy.
struct SystemConfig {
    std::vector<double> arrival_rates; ///< lambda_c per source, 1/time
    double theta = 0.0;                ///< same-source preemption probability
    ServiceDistribution service = ServiceDistribution::exponential(1.0);

    std::size_t sources() const noexcept { return arrival_rates.size(); }
    double total_rate() const { return std::accumulate(arrival_rates.begin(), arrival_rates.end(), 0.0); }

    void validate() const {
        if (arrival_rates.empty()) throw InvalidConfig("at least one source is required");
        for (std::size_t c = 0; c < arrival_rates.size(); ++c)
            if (!(arrival_rates[c] > 0.0) || !std::isfinite(arrival_rates[c]))
                throw InvalidConfig("arrival rate of source " + std::to_string(c + 1) + " must be positive and finite");
        if (!std::isfinite(total_rate())) throw InvalidConfig("total arrival rate is not finite");
        if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidConfig("theta must lie in [0, 1]");
    }

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// Exact moments of the age processes of one source.
struct AoiMetrics {
    std::size_t source = 0;
    std::vector<double> aoi_moments;  ///< [m-1] = E[delta^m], m = 1..M
    std::vector<double> paoi_moments; ///< [m-1] = E[A^m]
    double mean_system_time = 0.0;
    double mean_interdeparture = 0.0;
    /// Largest relative gap between the binomial-formula and direct-jet routes.
    double route_discrepancy = 0.0;

    double mean_aoi() const { return aoi_moments.at(0); }
    double mean_paoi() const { return paoi_moments.at(0); }
};

enum class Transform { aoi, paoi, system_time, interdeparture };

inline std::string to_string(Transform t) {
    switch (t) {
    case Transform::aoi: return "aoi";
    case Transform::paoi: return "paoi";
    case Transform::system_time: return "system_time";
    case Transform::interdeparture: return "interdeparture";
    }
    return "?";
}

inline constexpr double moment_route_tolerance = 1e-8;
/// mgf_point_eval refuses arguments this close to the removable point s = theta * lambda_c.
inline constexpr double removable_point_guard = 1e-9;

namespace detail {

/// Per-source series shared by the closed forms: everything is a jet in s about 0.
struct SourceSeries {
    Jet shifted_mgf; ///< M_U(s - theta lambda_c)
    Jet a;           ///< lambda_c M_U(s - theta lambda_c) / (lambda - s)
    Jet a_prime;     ///< theta lambda_c (1 - M_U(s - theta lambda_c)) / (theta lambda_c - s)
};

inline SourceSeries source_series(const SystemConfig& cfg, std::size_t c, int order, double a_prime_sign = 1.0) {
    const double lambda = cfg.total_rate();
    const double rate = cfg.arrival_rates[c];
    const double shift = cfg.theta * rate;
    Jet shifted = cfg.service.mgf_jet(-shift, order).recentered(0.0);
    const Jet lambda_minus_s = Jet::constant(0.0, order, lambda) - Jet::variable(0.0, order);
    Jet a = rate * shifted / lambda_minus_s;
    // theta lambda_c = 0 makes a' vanish identically; otherwise a' = theta lambda_c * (M_U(x) - 1) / x at
    // x = s - theta lambda_c, expanded directly from the service law to keep full precision.
    Jet a_prime = shift == 0.0 ? Jet::zero(0.0, order)
                               : shift * cfg.service.mgf_slope_jet(-shift, order).recentered(0.0);
    a_prime *= a_prime_sign;
    return {std::move(shifted), std::move(a), std::move(a_prime)};
}

} // namespace detail

/// Closed-form transforms for every source of one configuration at a fixed jet order.
///
/// Construction expands the service law once per source; the accessors only do jet algebra.
class AnalyticModel {
public:
    AnalyticModel(SystemConfig cfg, int order, double a_prime_sign = 1.0) : cfg_(std::move(cfg)), order_(order) {
        cfg_.validate();
        if (order_ < 2) throw std::invalid_argument("jet order must be at least 2");
        series_.reserve(cfg_.sources());
        for (std::size_t c = 0; c < cfg_.sources(); ++c)
            series_.push_back(detail::source_series(cfg_, c, order_, a_prime_sign));
    }

    const SystemConfig& config() const noexcept { return cfg_; }
    int order() const noexcept { return order_; }

    /// M_T(s) = M_U(s - theta lambda_c) / M_U(-theta lambda_c).
    Jet system_time(std::size_t c) const {
        const Jet& m = at(c).shifted_mgf;
        Jet t = m / m[0];
        t[0] = 1.0;
        return t;
    }

    /// M_Y(s) = a_c / ((1 - a'_c) (1 - sum_{c' != c} a_{c'} / (1 - a'_{c'}))).
    Jet interdeparture(std::size_t c) const {
        const SourceSeries& own = at(c);
        Jet others = Jet::zero(0.0, order_);
        for (std::size_t k = 0; k < series_.size(); ++k) {
            if (k == c) continue;
            others += series_[k].a / (1.0 - series_[k].a_prime);
        }
        return own.a / ((1.0 - own.a_prime) * (1.0 - others));
    }

    /// M_A(s) = M_T(s) M_Y(s).
    Jet paoi(std::size_t c) const { return system_time(c) * interdeparture(c); }

    /// M_delta(s) = (M_A(s) - M_T(s)) / (s Ybar); one order lower than the model.
    Jet aoi(std::size_t c) const {
        const Jet t = system_time(c);
        const Jet y = interdeparture(c);
        const double mean_y = y.derivative_value(1);
        return (t * y - t).deflate() / mean_y;
    }

    double mean_interdeparture(std::size_t c) const { return interdeparture(c).derivative_value(1); }

    /// Moments 1..max_order of AoI and PAoI, computed by the binomial formulas from T and Y
    /// moments and cross-checked against direct derivatives of the AoI/PAoI jets.
    AoiMetrics metrics(std::size_t c, int max_order) const {
        if (max_order < 1) throw std::invalid_argument("moment order must be at least 1");
        if (order_ < max_order + 2)
            throw std::invalid_argument("jet order " + std::to_string(order_) + " too small for moment order " +
                                        std::to_string(max_order));
        const Jet t = system_time(c);
        const Jet y = interdeparture(c);
        const Jet paoi_jet = t * y;
        const double mean_y = y.derivative_value(1);
        const Jet aoi_jet = (paoi_jet - t).deflate() / mean_y;

        std::vector<double> et(static_cast<std::size_t>(max_order) + 2), ey(et.size());
        for (std::size_t j = 0; j < et.size(); ++j) {
            et[j] = t.derivative_value(static_cast<int>(j));
            ey[j] = y.derivative_value(static_cast<int>(j));
        }
        et[0] = ey[0] = 1.0;

        AoiMetrics out;
        out.source = c;
        out.mean_system_time = et[1];
        out.mean_interdeparture = mean_y;
        for (int m = 1; m <= max_order; ++m) {
            double peak = 0.0;
            for (int i = 0; i <= m; ++i) peak += binomial(m, i) * et[static_cast<std::size_t>(i)] * ey[static_cast<std::size_t>(m - i)];
            double age = 0.0;
            for (int i = 0; i <= m + 1; ++i)
                age += binomial(m + 1, i) * et[static_cast<std::size_t>(i)] * ey[static_cast<std::size_t>(m + 1 - i)];
            age = (age - et[static_cast<std::size_t>(m + 1)]) / ((m + 1) * mean_y);

            const double direct_age = aoi_jet.derivative_value(m);
            const double direct_peak = paoi_jet.derivative_value(m);
            const double gap = std::max(relative_gap(age, direct_age), relative_gap(peak, direct_peak));
            out.route_discrepancy = std::max(out.route_discrepancy, gap);
            if (!(gap <= moment_route_tolerance))
                throw ConsistencyError("moment routes disagree for source " + std::to_string(c + 1) + ", m = " +
                                       std::to_string(m) + ": relative gap " + std::to_string(gap));
            out.aoi_moments.push_back(age);
            out.paoi_moments.push_back(peak);
        }
        return out;
    }

    /// Pointwise value of one transform at real s.
    double point(std::size_t c, double s, Transform which) const {
        at(c);
        if (s == 0.0) return 1.0;
        const double lambda = cfg_.total_rate();
        if (!(s < lambda))
            throw OutsideConvergenceRegion("s = " + std::to_string(s) + " must be below the total arrival rate");

        struct Terms {
            double m, a, a_prime;
        };
        std::vector<Terms> terms(cfg_.sources());
        for (std::size_t k = 0; k < cfg_.sources(); ++k) {
            const double shift = cfg_.theta * cfg_.arrival_rates[k];
            const double x = s - shift;
            if (!cfg_.service.in_mgf_domain(x))
                throw OutsideConvergenceRegion("service MGF diverges at s - theta*lambda_" + std::to_string(k + 1) +
                                               " = " + std::to_string(x));
            if (shift > 0.0 && std::abs(x) < removable_point_guard)
                throw OutsideConvergenceRegion("s is within " + std::to_string(removable_point_guard) +
                                               " of the removable point theta*lambda_" + std::to_string(k + 1));
            Terms& tk = terms[k];
            tk.m = cfg_.service.mgf_point(x);
            tk.a = cfg_.arrival_rates[k] * tk.m / (lambda - s);
            tk.a_prime = shift == 0.0 ? 0.0 : shift * (1.0 - tk.m) / (shift - s);
            if (!(tk.a_prime < 1.0))
                throw OutsideConvergenceRegion("preemption loop gain a'_" + std::to_string(k + 1) + " reaches 1");
        }
        double others = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (k != c) others += terms[k].a / (1.0 - terms[k].a_prime);
        if (!(others < 1.0)) throw OutsideConvergenceRegion("competing-source loop gain reaches 1");

        const double system_time = terms[c].m / cfg_.service.mgf_point(-cfg_.theta * cfg_.arrival_rates[c]);
        const double interdeparture = terms[c].a / ((1.0 - terms[c].a_prime) * (1.0 - others));
        switch (which) {
        case Transform::system_time: return system_time;
        case Transform::interdeparture: return interdeparture;
        case Transform::paoi: return system_time * interdeparture;
        case Transform::aoi:
            return system_time * (interdeparture - 1.0) / (s * mean_interdeparture(c));
        }
        return 0.0;
    }

private:
    using SourceSeries = detail::SourceSeries;

    const SourceSeries& at(std::size_t c) const {
        if (c >= series_.size())
            throw std::out_of_range("source index " + std::to_string(c) + " out of range for " +
                                    std::to_string(series_.size()) + " sources");
        return series_[c];
    }

    static double binomial(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    }

    static double relative_gap(double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    }

    SystemConfig cfg_;
    int order_;
    std::vector<SourceSeries> series_;
};

/// Jet order used for moments up to `max_order`: deflation eats one order, two more are guard.
inline int jet_order_for_moments(int max_order) { return max_order + 3; }

inline Jet system_time_mgf_jet(const SystemConfig& cfg, std::size_t c, int order = Jet::default_order) {
    return AnalyticModel(cfg, order).system_time(c);
}

inline Jet interdeparture_mgf_jet(const SystemConfig& cfg, std::size_t c, int order = Jet::default_order) {
    return AnalyticModel(cfg, order).interdeparture(c);
}

inline Jet paoi_mgf_jet(const SystemConfig& cfg, std::size_t c, int order = Jet::default_order) {
    return AnalyticModel(cfg, order).paoi(c);
}

inline Jet aoi_mgf_jet(const SystemConfig& cfg, std::size_t c, int order = Jet::default_order) {
    return AnalyticModel(cfg, order).aoi(c);
}

inline AoiMetrics moments(const SystemConfig& cfg, std::size_t c, int max_order) {
    return AnalyticModel(cfg, jet_order_for_moments(max_order)).metrics(c, max_order);
}

/// Metrics of every source at once.
inline std::vector<AoiMetrics> all_moments(const SystemConfig& cfg, int max_order) {
    const AnalyticModel model(cfg, jet_order_for_moments(max_order));
    std::vector<AoiMetrics> out;
    for (std::size_t c = 0; c < cfg.sources(); ++c) out.push_back(model.metrics(c, max_order));
    return out;
}

inline double mgf_point_eval(const SystemConfig& cfg, std::size_t c, double s, Transform which) {
    return AnalyticModel(cfg, 2).point(c, s, which);
}

} // namespace aoi
