#include <aoi/analytic.hpp>
#include <aoi/checks.hpp>
#include <aoi/simulator.hpp>
#include <aoi/statistics.hpp>

#include <gtest/gtest.h>

#include <cmath>

using aoi::Policy;
using aoi::ServiceDistribution;
using aoi::SimConfig;
using aoi::SystemConfig;

namespace {

SimConfig horizon_run(double horizon, std::size_t replications = 2, std::uint64_t seed = 42) {
    SimConfig sim;
    sim.horizon = horizon;
    sim.replications = replications;
    sim.seed = seed;
    return sim;
}

const SystemConfig two_exp{{1.0, 1.0}, 0.5, ServiceDistribution::exponential(1.0)};
const SystemConfig lognormal_cfg{{2.0, 6.0}, 0.28, ServiceDistribution::lognormal(-1.0, 1.0)};

} // namespace

TEST(Statistics, RunningMoments) {
    aoi::stats::RunningMoments m;
    for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
    EXPECT_DOUBLE_EQ(m.mean(), 2.5);
    EXPECT_DOUBLE_EQ(m.raw(2), 7.5);
    EXPECT_DOUBLE_EQ(m.variance(), 5.0 / 3.0);
    aoi::stats::RunningMoments a, b;
    a.add(1.0);
    a.add(2.0);
    b.add(3.0);
    b.add(4.0);
    a.merge(b);
    EXPECT_EQ(a, m);
}

TEST(Statistics, BatchInterval) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto iv = aoi::stats::batch_interval(v);
    EXPECT_DOUBLE_EQ(iv.mean, 3.0);
    // t_{0.975, 4} = 2.776445...
    EXPECT_NEAR(iv.half_width, 2.7764451051977987 * std::sqrt(2.5 / 5.0), 1e-12);
    EXPECT_NEAR(aoi::stats::t_critical_95(1000000), 1.959966, 1e-5);
}

TEST(Statistics, ChiSquare) {
    const std::vector<std::uint64_t> flat(10, 100);
    const auto r = aoi::stats::chi_square_equiprobable(flat);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.dof, 9u);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);
    const std::vector<std::uint64_t> skewed{1000, 0, 0, 0};
    EXPECT_LT(aoi::stats::chi_square_equiprobable(skewed).p_value, 1e-100);
    EXPECT_THROW(aoi::stats::chi_square_equiprobable(std::vector<std::uint64_t>{5}), aoi::InsufficientSamples);
}

TEST(Statistics, EmpiricalMgf) {
    std::vector<double> same(200, 1.5);
    const auto zero = aoi::stats::empirical_mgf(same, 0.0);
    EXPECT_EQ(zero.estimate, 1.0);
    EXPECT_EQ(zero.standard_error, 0.0);
    const auto degenerate = aoi::stats::empirical_mgf(same, -0.4);
    EXPECT_NEAR(degenerate.estimate, std::exp(-0.6), 1e-14);
    EXPECT_NEAR(degenerate.standard_error, 0.0, 1e-14);
    EXPECT_THROW(aoi::stats::empirical_mgf(same, 0.1), aoi::PositiveExponentRejected);
    EXPECT_THROW(aoi::stats::empirical_mgf(std::vector<double>(99, 1.0), -1.0), aoi::InsufficientSamples);

    aoi::Engine g(5);
    const auto e = ServiceDistribution::exponential(1.0);
    std::vector<double> xs(1000000);
    for (auto& x : xs) x = e.sample(g);
    const auto est = aoi::stats::empirical_mgf(xs, -1.0);
    EXPECT_NEAR(est.estimate, 0.5, 3.0 * est.standard_error);
}

TEST(Simulator, RejectsInvalidConfigs) {
    SimConfig sim = horizon_run(100.0);
    sim.batches = 9;
    EXPECT_THROW(aoi::simulate(two_exp, Policy::non_preemptive(), sim), aoi::InvalidConfig);
    sim = horizon_run(0.0);
    EXPECT_THROW(aoi::simulate(two_exp, Policy::non_preemptive(), sim), aoi::InvalidConfig);
    sim = horizon_run(100.0);
    sim.warmup = 1.0;
    EXPECT_THROW(aoi::simulate(two_exp, Policy::non_preemptive(), sim), aoi::InvalidConfig);
    sim = horizon_run(100.0);
    sim.mgf_points = {0.5};
    EXPECT_THROW(aoi::simulate(two_exp, Policy::non_preemptive(), sim), aoi::InvalidConfig);
    EXPECT_THROW(aoi::simulate(two_exp, Policy::probabilistic(1.5), horizon_run(100.0)), aoi::InvalidConfig);
}

TEST(Simulator, CounterConservation) {
    for (const Policy& p : {Policy::probabilistic(0.3), Policy::non_preemptive(), Policy::self_preemptive(),
                            Policy::globally_preemptive()}) {
        const auto r = aoi::simulate(lognormal_cfg, p, horizon_run(2000.0, 3));
        for (const auto& s : r.sources) {
            const auto& k = s.counters;
            EXPECT_GT(k.arrivals, 0u);
            EXPECT_EQ(k.arrivals, k.delivered + k.preempted + k.discarded + k.in_flight) << p.name();
            EXPECT_LE(k.in_flight, 3u);
            EXPECT_GE(s.mean_aoi.mean, s.mean_system_time.mean);
        }
    }
}

TEST(Simulator, Reproducible) {
    SimConfig sim = horizon_run(3000.0, 3, 7);
    sim.record_trace = true;
    sim.mgf_points = {-0.5};
    const auto a = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.4), sim);
    const auto b = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.4), sim);
    EXPECT_TRUE(a == b);
    sim.threads = 1;
    EXPECT_TRUE(aoi::simulate(lognormal_cfg, Policy::probabilistic(0.4), sim) == a);
    sim.seed = 8;
    EXPECT_FALSE(aoi::simulate(lognormal_cfg, Policy::probabilistic(0.4), sim) == a);
}

TEST(Simulator, PolicyLimits) {
    SimConfig sim = horizon_run(5000.0, 2, 11);
    sim.record_trace = true;
    EXPECT_TRUE(aoi::simulate(lognormal_cfg, Policy::probabilistic(0.0), sim) ==
                aoi::simulate(lognormal_cfg, Policy::non_preemptive(), sim));
    EXPECT_TRUE(aoi::simulate(lognormal_cfg, Policy::probabilistic(1.0), sim) ==
                aoi::simulate(lognormal_cfg, Policy::self_preemptive(), sim));
    const SystemConfig single{{1.0}, 0.0, ServiceDistribution::exponential(1.0)};
    EXPECT_TRUE(aoi::simulate(single, Policy::globally_preemptive(), sim) ==
                aoi::simulate(single, Policy::self_preemptive(), sim));
    EXPECT_FALSE(aoi::simulate(lognormal_cfg, Policy::probabilistic(0.5), sim) ==
                 aoi::simulate(lognormal_cfg, Policy::self_preemptive(), sim));
}

TEST(Simulator, TraceIdentities) {
    SimConfig sim = horizon_run(5000.0, 2, 3);
    sim.record_trace = true;
    const auto r = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.28), sim);
    ASSERT_FALSE(r.trace.empty());
    std::vector<std::vector<const aoi::TraceRow*>> last(2, std::vector<const aoi::TraceRow*>(2, nullptr));
    std::size_t checked = 0;
    for (const auto& row : r.trace) {
        const aoi::TraceRow*& prev = last[row.replication][row.source];
        EXPECT_EQ(row.system_time, row.delivered - row.generated);
        if (prev != nullptr) {
            const double y = row.delivered - prev->delivered;
            EXPECT_EQ(row.interdeparture, y);
            EXPECT_EQ(row.peak_age, y + prev->system_time);
            const double sawtooth = prev->system_time * y + 0.5 * y * y;
            EXPECT_NEAR(row.segment_area, sawtooth, 1e-9 * sawtooth);
            ++checked;
        } else {
            EXPECT_TRUE(std::isnan(row.peak_age));
        }
        prev = &row;
    }
    EXPECT_GT(checked, 1000u);
}

TEST(Simulator, DeliveryCountStopRule) {
    SimConfig sim;
    sim.deliveries = 5000;
    sim.replications = 2;
    const auto r = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.28), sim);
    for (const auto& s : r.sources) EXPECT_GE(s.system_time.count, 2u * 5000u);
    SimConfig no_warmup = sim;
    no_warmup.warmup = 0.0;
    const auto q = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.28), no_warmup);
    for (const auto& s : q.sources) EXPECT_GE(s.system_time.count, 2u * 5000u);
}

TEST(Simulator, SinglePreemptiveExponentialAnchor) {
    const SystemConfig cfg{{1.0}, 1.0, ServiceDistribution::exponential(1.0)};
    const auto r = aoi::simulate(cfg, Policy::probabilistic(1.0), horizon_run(1e6, 1, 2));
    const auto& s = r.sources[0];
    EXPECT_LT(s.mean_aoi.half_width, 0.02);
    EXPECT_NEAR(s.mean_aoi.mean, 2.0, std::max(s.mean_aoi.half_width, 0.02 * 2.0));
    EXPECT_NEAR(s.mean_interdeparture.mean, 2.0, std::max(s.mean_interdeparture.half_width, 0.02 * 2.0));
    EXPECT_NEAR(s.mean_paoi.mean, 2.5, std::max(s.mean_paoi.half_width, 0.02 * 2.5));
}

TEST(Simulator, AgeMgfMatchesAnalytic) {
    SimConfig sim = horizon_run(2e5, 4, 19);
    sim.mgf_points = {-0.5};
    const auto r = aoi::simulate(two_exp, Policy::probabilistic(0.5), sim);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& iv = r.sources[c].aoi_mgf[0];
        const double analytic = aoi::mgf_point_eval(two_exp, c, -0.5, aoi::Transform::aoi);
        // Batch-means standard error from the 95% half-width.
        const double se = iv.half_width / aoi::stats::t_critical_95(iv.batches - 1);
        EXPECT_NEAR(iv.mean, analytic, 3.0 * se) << "source " << c + 1;
    }
}

TEST(Simulator, LogNormalSumAgeMatchesAnalytic) {
    const auto r = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.28), horizon_run(1e5, 4, 5));
    double analytic = 0.0;
    for (const auto& m : aoi::all_moments(lognormal_cfg, 2)) analytic += m.mean_aoi();
    EXPECT_NEAR(r.sum_mean_aoi.mean, analytic, std::max(r.sum_mean_aoi.half_width, 0.02 * analytic));
    for (std::size_t c = 0; c < 2; ++c) {
        const auto m = aoi::moments(lognormal_cfg, c, 2);
        const auto& s = r.sources[c];
        EXPECT_NEAR(s.mean_paoi.mean, m.mean_paoi(), std::max(s.mean_paoi.half_width, 0.02 * m.mean_paoi()));
        EXPECT_NEAR(s.mean_system_time.mean, m.mean_system_time,
                    std::max(s.mean_system_time.half_width, 0.02 * m.mean_system_time));
        EXPECT_NEAR(s.aoi_m2, m.aoi_moments[1], 0.05 * m.aoi_moments[1]);
    }
}

TEST(Checks, TiltedLawReducesToServiceAtZero) {
    const auto law = ServiceDistribution::lognormal(-1.0, 1.0);
    const aoi::TiltedServiceLaw tilted(law, 0.0);
    for (double t : {0.1, 0.5, 2.0}) EXPECT_EQ(tilted.cdf(t), law.cdf(t));
    // Exponential(mu) tilted by k is Exponential(mu + k).
    const aoi::TiltedServiceLaw e(ServiceDistribution::exponential(1.0), 0.7);
    for (double t : {0.1, 0.5, 2.0}) EXPECT_NEAR(e.cdf(t), 1.0 - std::exp(-1.7 * t), 1e-12);
    EXPECT_NEAR(e.quantile(0.5), std::log(2.0) / 1.7, 1e-10);
}

TEST(Checks, ExponentialDeliveryProbability) {
    const SystemConfig cfg{{2.0, 1.0}, 0.5, ServiceDistribution::exponential(1.0)};
    const auto r = aoi::simulate(cfg, Policy::probabilistic(0.5), horizon_run(1e5, 2, 13));
    const auto summary = aoi::empirical_checks(r, cfg, Policy::probabilistic(0.5));
    for (const auto& c : summary.checks) {
        EXPECT_TRUE(c.passed) << c.name << " source " << c.source + 1 << ": " << c.measured << " vs " << c.expected;
        if (c.name == "delivery_probability" && c.source == 0) EXPECT_DOUBLE_EQ(c.expected, 0.5);
    }
    EXPECT_TRUE(summary.all_passed());
}

TEST(Checks, LogNormalFits) {
    SimConfig sim;
    sim.deliveries = 100000;
    sim.seed = 77;
    const auto r = aoi::simulate(lognormal_cfg, Policy::probabilistic(0.28), sim);
    const auto summary = aoi::empirical_checks(r, lognormal_cfg, Policy::probabilistic(0.28));
    for (const auto& c : summary.checks)
        EXPECT_TRUE(c.passed) << c.name << " source " << c.source + 1 << ": " << c.measured << " vs " << c.expected
                              << " p=" << c.p_value;
}

TEST(Checks, DetectsWrongModel) {
    // Feeding a theta = 0 run to the theta = 0.9 checks must fail the fit.
    SimConfig sim;
    sim.deliveries = 50000;
    const auto r = aoi::simulate(lognormal_cfg, Policy::non_preemptive(), sim);
    EXPECT_FALSE(aoi::empirical_checks(r, lognormal_cfg, Policy::probabilistic(0.9)).all_passed());
}

TEST(Checks, InsufficientSamples) {
    const auto r = aoi::simulate(two_exp, Policy::probabilistic(0.5), horizon_run(100.0, 1));
    EXPECT_THROW(aoi::empirical_checks(r, two_exp, Policy::probabilistic(0.5)), aoi::InsufficientSamples);
    EXPECT_THROW(aoi::empirical_checks(r, two_exp, Policy::globally_preemptive()), aoi::InvalidConfig);
}
