#pragma once

#include <aoi/errors.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace aoi::stats {

/// Streaming power sums up to the fourth order.
struct RunningMoments {
    std::uint64_t count = 0;
    double sum[4] = {0.0, 0.0, 0.0, 0.0};

    void add(double x) noexcept {
        ++count;
        double p = x;
        for (double& s : sum) {
            s += p;
            p *= x;
        }
    }

    void merge(const RunningMoments& o) noexcept {
        count += o.count;
        for (int k = 0; k < 4; ++k) sum[k] += o.sum[k];
    }

    /// Raw sample moment E[X^k], k = 1..4.
    double raw(int k) const noexcept { return count == 0 ? 0.0 : sum[k - 1] / static_cast<double>(count); }
    double mean() const noexcept { return raw(1); }

    double variance() const noexcept {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        return std::max(0.0, (sum[1] - sum[0] * sum[0] / n) / (n - 1.0));
    }

    friend bool operator==(const RunningMoments&, const RunningMoments&) = default;
};

/// Two-sided 95% Student-t critical value.
inline double t_critical_95(std::size_t dof) {
    if (dof == 0) return 0.0;
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(dist, 0.025));
}

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t batches = 0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Batch-means 95% interval treating the batch values as i.i.d.
inline Interval batch_interval(std::span<const double> values) {
    Interval out;
    out.batches = values.size();
    if (values.empty()) return out;
    double s = 0.0;
    for (double v : values) s += v;
    out.mean = s / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.half_width = t_critical_95(values.size() - 1) * sd / std::sqrt(static_cast<double>(values.size()));
    return out;
}

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 0.0;
};

/// Pearson chi-square against equal expected counts per bin.
inline ChiSquareResult chi_square_equiprobable(std::span<const std::uint64_t> counts) {
    if (counts.size() < 2) throw InsufficientSamples("chi-square needs at least two bins");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw InsufficientSamples("chi-square on an empty sample");
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    ChiSquareResult r;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        r.statistic += d * d / expected;
    }
    r.dof = counts.size() - 1;
    boost::math::chi_squared dist(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

/// Sample mean of e^{s x} and its standard error; s must be non-positive.
struct MgfEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

inline MgfEstimate empirical_mgf(std::span<const double> samples, double s) {
    if (s > 0.0) throw PositiveExponentRejected("empirical MGF only accepts s <= 0");
    if (samples.size() < 100) throw InsufficientSamples("empirical MGF needs at least 100 samples");
    if (s == 0.0) return {1.0, 0.0};
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += std::exp(s * x);
    mean /= n;
    double ss = 0.0;
    for (double x : samples) {
        const double d = std::exp(s * x) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace aoi::stats
