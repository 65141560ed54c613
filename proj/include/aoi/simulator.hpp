#pragma once

#include <aoi/analytic.hpp>
#include <aoi/errors.hpp>
#include <aoi/random.hpp>
#include <aoi/service.hpp>
#include <aoi/statistics.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <queue>
#include <string>
#include <thread>
#include <vector>

namespace aoi {

enum class PolicyKind { probabilistic, non_preemptive, self_preemptive, globally_preemptive };

/// Packet-management rule applied when an arrival finds the server busy.
struct Policy {
    PolicyKind kind = PolicyKind::probabilistic;
    double theta = 0.0; ///< only meaningful for probabilistic

    static Policy probabilistic(double theta) { return {PolicyKind::probabilistic, theta}; }
    static Policy non_preemptive() { return {PolicyKind::non_preemptive, 0.0}; }
    static Policy self_preemptive() { return {PolicyKind::self_preemptive, 1.0}; }
    static Policy globally_preemptive() { return {PolicyKind::globally_preemptive, 0.0}; }

    void validate() const {
        if (kind == PolicyKind::probabilistic && !(theta >= 0.0 && theta <= 1.0))
            throw InvalidConfig("preemption probability must lie in [0, 1]");
    }

    std::string name() const {
        switch (kind) {
        case PolicyKind::probabilistic: return "probabilistic";
        case PolicyKind::non_preemptive: return "non_preemptive";
        case PolicyKind::self_preemptive: return "self_preemptive";
        case PolicyKind::globally_preemptive: return "globally_preemptive";
        }
        return "?";
    }

    friend bool operator==(const Policy&, const Policy&) = default;
};

struct SimConfig {
    double horizon = 0.0;           ///< stop time; used when > 0
    std::uint64_t deliveries = 0;   ///< per-source post-warmup deliveries; used when horizon == 0
    double warmup = 0.1;            ///< fraction of the horizon (or of `deliveries`) discarded
    std::uint64_t seed = 1;
    std::size_t replications = 1;
    std::size_t batches = 10;
    std::vector<double> mgf_points;  ///< s <= 0 values at which the time-average of e^{s delta} is tracked
    std::size_t reservoir_capacity = 100000;
    bool record_trace = false;
    std::size_t threads = 0;         ///< 0 picks the hardware concurrency

    void validate() const {
        if (!(horizon > 0.0) && deliveries == 0) throw InvalidConfig("either a horizon or a delivery count is required");
        if (horizon < 0.0 || !std::isfinite(horizon)) throw InvalidConfig("horizon must be finite and non-negative");
        if (!(warmup >= 0.0 && warmup < 1.0)) throw InvalidConfig("warmup fraction must lie in [0, 1)");
        if (replications == 0) throw InvalidConfig("at least one replication is required");
        if (batches < 10) throw InvalidConfig("at least 10 batches are required");
        for (double s : mgf_points)
            if (!(s <= 0.0)) throw InvalidConfig("MGF probe points must be non-positive");
    }
};

/// One delivered packet, for raw dumps.
struct TraceRow {
    std::uint32_t replication;
    std::uint32_t source;
    double generated;
    double delivered;
    double system_time;
    double interdeparture; ///< NaN for the first recorded delivery of a source
    double peak_age;       ///< NaN likewise
    double segment_area;   ///< integral of the age over the preceding inter-delivery interval

    friend bool operator==(const TraceRow& a, const TraceRow& b) {
        auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
        return a.replication == b.replication && a.source == b.source && a.generated == b.generated &&
               a.delivered == b.delivered && a.system_time == b.system_time &&
               same(a.interdeparture, b.interdeparture) && same(a.peak_age, b.peak_age) &&
               same(a.segment_area, b.segment_area);
    }
};

/// Packet accounting, restricted to packets generated after warmup.
struct Counters {
    std::uint64_t arrivals = 0;
    std::uint64_t delivered = 0;
    std::uint64_t preempted = 0;
    std::uint64_t discarded = 0;
    std::uint64_t in_flight = 0;
    friend bool operator==(const Counters&, const Counters&) = default;
};

/// Frequencies of the delivery-cycle transitions.
struct TransitionCounts {
    std::uint64_t idle_arrivals = 0;         ///< arrivals that found the server idle
    std::uint64_t entered_service = 0;
    std::uint64_t served_to_completion = 0;  ///< services that ended in delivery
    std::uint64_t same_source_preemptions = 0;
    double busy_time = 0.0;                  ///< total time spent serving this source
    friend bool operator==(const TransitionCounts&, const TransitionCounts&) = default;
};

struct SourceReport {
    stats::Interval mean_aoi;     ///< time-average age with batch-means half-width
    double aoi_m2 = 0.0;          ///< time-average of age squared
    stats::Interval mean_paoi;
    stats::RunningMoments paoi;
    stats::RunningMoments system_time;
    stats::RunningMoments interdeparture;
    stats::Interval mean_system_time;
    stats::Interval mean_interdeparture;
    std::vector<stats::Interval> aoi_mgf; ///< one per SimConfig::mgf_points entry
    Counters counters;
    TransitionCounts transitions;
    std::vector<double> system_time_samples;
    std::vector<double> interdeparture_samples;
    double observed_time = 0.0;   ///< total length of the inter-delivery segments averaged over

    friend bool operator==(const SourceReport&, const SourceReport&) = default;
};

struct SimReport {
    std::vector<SourceReport> sources;
    stats::Interval sum_mean_aoi;
    std::vector<TraceRow> trace;
    std::size_t replications = 0;
    std::size_t batches_per_replication = 0;

    friend bool operator==(const SimReport&, const SimReport&) = default;
};

namespace detail {

struct BatchSums {
    double area = 0.0;
    double area2 = 0.0;
    double duration = 0.0;
    double paoi_sum = 0.0;
    std::uint64_t paoi_n = 0;
    double y_sum = 0.0;
    std::uint64_t y_n = 0;
    double t_sum = 0.0;
    std::uint64_t t_n = 0;
    std::vector<double> mgf_area;
};

struct SourceRun {
    std::vector<BatchSums> batches;
    stats::RunningMoments paoi, system_time, interdeparture;
    Counters counters;
    TransitionCounts transitions;
    std::vector<double> t_reservoir, y_reservoir;
    std::uint64_t t_seen = 0, y_seen = 0;
};

struct ReplicationResult {
    std::vector<SourceRun> sources;
    std::vector<TraceRow> trace;
};

inline void reservoir_add(std::vector<double>& r, std::uint64_t& seen, double x, std::size_t capacity, Engine& g) {
    ++seen;
    if (r.size() < capacity) {
        r.push_back(x);
        return;
    }
    const std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen - 1)(g);
    if (j < capacity) r[j] = x;
}

/// One independent replication of the event-driven model.
class Replication {
public:
    Replication(const SystemConfig& cfg, const Policy& policy, const SimConfig& sim, std::uint32_t index)
        : cfg_(cfg), policy_(policy), sim_(sim), index_(index), n_(cfg.sources()) {
        for (std::size_t c = 0; c < n_; ++c) {
            arrivals_.push_back(make_stream(sim.seed, index, c, StreamKind::arrivals));
            service_.push_back(make_stream(sim.seed, index, c, StreamKind::service));
            bernoulli_.push_back(make_stream(sim.seed, index, c, StreamKind::preemption));
            reservoir_.push_back(make_stream(sim.seed, index, c, StreamKind::reservoir));
        }
        src_.resize(n_);
        result_.sources.resize(n_);
        for (auto& s : result_.sources) {
            s.batches.resize(sim.batches);
            for (auto& b : s.batches) b.mgf_area.assign(sim.mgf_points.size(), 0.0);
        }
        time_based_ = sim.horizon > 0.0;
        warmup_end_ = time_based_ ? sim.warmup * sim.horizon : std::numeric_limits<double>::infinity();
        warmup_deliveries_ = static_cast<std::uint64_t>(std::ceil(sim.warmup * static_cast<double>(sim.deliveries)));
        in_warmup_ = time_based_ ? warmup_end_ > 0.0 : warmup_deliveries_ > 0;
        if (!in_warmup_) warmup_end_ = 0.0;
    }

    ReplicationResult run() {
        for (std::size_t c = 0; c < n_; ++c) schedule_arrival(c, 0.0);
        while (!events_.empty()) {
            const Event ev = events_.top();
            if (time_based_ && ev.time > sim_.horizon) break;
            events_.pop();
            if (ev.kind == Event::completion && ev.epoch != epoch_) continue;
            advance(ev.time);
            if (ev.kind == Event::arrival) on_arrival(ev.source, ev.time);
            else on_completion(ev.time);
            if (!time_based_ && done()) break;
        }
        if (busy_ && in_service_counted_) result_.sources[in_service_].counters.in_flight = 1;
        return std::move(result_);
    }

private:
    struct Event {
        enum Kind : std::uint8_t { arrival, completion };
        double time;
        std::uint64_t seq;
        Kind kind;
        std::uint32_t source;
        std::uint64_t epoch;
        bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    struct SourceState {
        bool have_reference = false; ///< a post-warmup delivery has set the age
        double reference_gen = 0.0;  ///< generation time of the freshest delivered packet
        double last_delivery = 0.0;
        double last_system_time = 0.0;
        std::uint64_t post_warmup_deliveries = 0;
        std::uint64_t warmup_deliveries = 0;
        double seg_area = 0.0, seg_area2 = 0.0;
        std::vector<double> seg_mgf;
    };

    void push(double time, Event::Kind kind, std::uint32_t source) {
        events_.push({time, seq_++, kind, source, epoch_});
    }

    void schedule_arrival(std::size_t c, double now) {
        const double gap = std::exponential_distribution<double>(cfg_.arrival_rates[c])(arrivals_[c]);
        push(now + gap, Event::arrival, static_cast<std::uint32_t>(c));
    }

    /// Integrates each source's age over [now_, t] on the current linear piece.
    void advance(double t) {
        if (t > now_) {
            for (auto& s : src_) {
                if (!s.have_reference) continue;
                const double a = now_ - s.reference_gen;
                const double b = t - s.reference_gen;
                s.seg_area += 0.5 * (a + b) * (t - now_);
                s.seg_area2 += (b * b * b - a * a * a) / 3.0;
                for (std::size_t j = 0; j < sim_.mgf_points.size(); ++j) {
                    const double sp = sim_.mgf_points[j];
                    s.seg_mgf[j] += sp == 0.0 ? (b - a) : (std::exp(sp * b) - std::exp(sp * a)) / sp;
                }
            }
        }
        now_ = t;
        if (in_warmup_ && time_based_ && now_ >= warmup_end_) end_warmup();
    }

    void end_warmup() {
        in_warmup_ = false;
        warmup_end_ = now_;
    }

    bool counted(double generated) const { return !in_warmup_ && generated >= warmup_end_; }

    void start_service(std::size_t c, double now) {
        busy_ = true;
        in_service_ = c;
        in_service_gen_ = now;
        service_start_ = now;
        in_service_counted_ = counted(now);
        ++epoch_;
        if (in_service_counted_) ++result_.sources[c].transitions.entered_service;
        const double duration = cfg_.service.sample(service_[c]);
        push(now + duration, Event::completion, static_cast<std::uint32_t>(c));
    }

    void close_service(double now) {
        if (in_service_counted_) result_.sources[in_service_].transitions.busy_time += now - service_start_;
    }

    bool preempts(std::size_t arriving) {
        const bool same = arriving == in_service_;
        switch (policy_.kind) {
        case PolicyKind::probabilistic:
            // The Bernoulli draw comes from its own substream and only for same-source arrivals,
            // so theta = 0 and theta = 1 replay the non- and self-preemptive runs exactly.
            return same && uniform01(bernoulli_[arriving]) < policy_.theta;
        case PolicyKind::non_preemptive: return false;
        case PolicyKind::self_preemptive: return same;
        case PolicyKind::globally_preemptive: return true;
        }
        return false;
    }

    void on_arrival(std::size_t c, double now) {
        schedule_arrival(c, now);
        auto& out = result_.sources[c];
        const bool count_it = counted(now);
        if (count_it) ++out.counters.arrivals;
        if (!busy_) {
            if (count_it) ++out.transitions.idle_arrivals;
            start_service(c, now);
            return;
        }
        if (preempts(c)) {
            auto& victim = result_.sources[in_service_];
            if (in_service_counted_) {
                ++victim.counters.preempted;
                if (in_service_ == c) ++victim.transitions.same_source_preemptions;
            }
            close_service(now);
            start_service(c, now);
        } else if (count_it) {
            ++out.counters.discarded;
        }
    }

    void on_completion(double now) {
        const std::size_t c = in_service_;
        auto& out = result_.sources[c];
        close_service(now);
        if (in_service_counted_) {
            ++out.counters.delivered;
            ++out.transitions.served_to_completion;
        }
        busy_ = false;
        ++epoch_;
        deliver(c, in_service_gen_, now);
    }

    std::size_t batch_of(const SourceState& s, double now) const {
        const std::size_t nb = sim_.batches;
        double pos;
        if (time_based_) {
            const double span = sim_.horizon - warmup_end_;
            pos = span > 0.0 ? (now - warmup_end_) / span : 0.0;
        } else {
            pos = static_cast<double>(s.post_warmup_deliveries) / static_cast<double>(sim_.deliveries);
        }
        const auto b = static_cast<std::size_t>(std::max(0.0, pos * static_cast<double>(nb)));
        return std::min(b, nb - 1);
    }

    void deliver(std::size_t c, double generated, double now) {
        SourceState& s = src_[c];
        auto& out = result_.sources[c];
        const double system_time = now - generated;

        if (in_warmup_) {
            // Delivery-count warmup: leave it once every source has delivered its share.
            ++s.warmup_deliveries;
            if (!time_based_ && std::all_of(src_.begin(), src_.end(), [&](const SourceState& x) {
                    return x.warmup_deliveries >= warmup_deliveries_;
                }))
                end_warmup();
            return;
        }

        const std::size_t b = batch_of(s, now);
        BatchSums& batch = out.batches[b];
        batch.t_sum += system_time;
        ++batch.t_n;
        out.system_time.add(system_time);
        reservoir_add(out.t_reservoir, out.t_seen, system_time, sim_.reservoir_capacity, reservoir_[c]);

        TraceRow row{index_, static_cast<std::uint32_t>(c), generated, now, system_time,
                     std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
        if (s.have_reference) {
            const double y = now - s.last_delivery;
            const double peak = y + s.last_system_time;
            batch.area += s.seg_area;
            batch.area2 += s.seg_area2;
            batch.duration += y;
            for (std::size_t j = 0; j < s.seg_mgf.size(); ++j) batch.mgf_area[j] += s.seg_mgf[j];
            batch.paoi_sum += peak;
            ++batch.paoi_n;
            batch.y_sum += y;
            ++batch.y_n;
            out.paoi.add(peak);
            out.interdeparture.add(y);
            reservoir_add(out.y_reservoir, out.y_seen, y, sim_.reservoir_capacity, reservoir_[c]);
            row.interdeparture = y;
            row.peak_age = peak;
            row.segment_area = s.seg_area;
        }
        if (sim_.record_trace) result_.trace.push_back(row);

        s.have_reference = true;
        s.reference_gen = generated;
        s.last_delivery = now;
        s.last_system_time = system_time;
        s.seg_area = s.seg_area2 = 0.0;
        s.seg_mgf.assign(sim_.mgf_points.size(), 0.0);
        ++s.post_warmup_deliveries;
    }

    bool done() const {
        return !in_warmup_ && std::all_of(src_.begin(), src_.end(), [&](const SourceState& s) {
            return s.post_warmup_deliveries >= sim_.deliveries;
        });
    }

    const SystemConfig& cfg_;
    Policy policy_;
    const SimConfig& sim_;
    std::uint32_t index_;
    std::size_t n_;

    std::vector<Engine> arrivals_, service_, bernoulli_, reservoir_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t seq_ = 0;
    std::uint64_t epoch_ = 0;
    double now_ = 0.0;

    bool time_based_ = true;
    bool in_warmup_ = false;
    double warmup_end_ = 0.0;
    std::uint64_t warmup_deliveries_ = 0;

    bool busy_ = false;
    std::size_t in_service_ = 0;
    double in_service_gen_ = 0.0;
    double service_start_ = 0.0;
    bool in_service_counted_ = false;

    std::vector<SourceState> src_;
    ReplicationResult result_;
};

inline std::vector<double> merge_reservoirs(const std::vector<const std::vector<double>*>& parts,
                                            const std::vector<std::uint64_t>& seen, std::size_t capacity) {
    std::uint64_t total_seen = 0;
    std::size_t total_kept = 0;
    for (std::size_t r = 0; r < parts.size(); ++r) {
        total_seen += seen[r];
        total_kept += parts[r]->size();
    }
    std::vector<double> out;
    out.reserve(std::min(total_kept, capacity));
    for (std::size_t r = 0; r < parts.size(); ++r) {
        std::size_t take = parts[r]->size();
        if (total_kept > capacity && total_seen > 0)
            take = std::min(take, static_cast<std::size_t>(static_cast<double>(capacity) *
                                                           static_cast<double>(seen[r]) /
                                                           static_cast<double>(total_seen)));
        out.insert(out.end(), parts[r]->begin(), parts[r]->begin() + static_cast<std::ptrdiff_t>(take));
    }
    return out;
}

inline SimReport merge(const SystemConfig& cfg, const SimConfig& sim,
                       const std::vector<ReplicationResult>& reps) {
    SimReport report;
    report.replications = reps.size();
    report.batches_per_replication = sim.batches;
    const std::size_t n = cfg.sources();
    const std::size_t total_batches = reps.size() * sim.batches;
    std::vector<double> sum_batches(total_batches, 0.0);
    std::vector<bool> sum_valid(total_batches, true);

    for (std::size_t c = 0; c < n; ++c) {
        SourceReport sr;
        double area = 0.0, area2 = 0.0, duration = 0.0, paoi_sum = 0.0, y_sum = 0.0, t_sum = 0.0;
        std::uint64_t paoi_n = 0, y_n = 0, t_n = 0;
        std::vector<double> mgf_area(sim.mgf_points.size(), 0.0);
        std::vector<double> aoi_b, paoi_b, y_b, t_b;
        std::vector<std::vector<double>> mgf_b(sim.mgf_points.size());
        std::vector<const std::vector<double>*> t_parts, y_parts;
        std::vector<std::uint64_t> t_seen, y_seen;

        for (std::size_t r = 0; r < reps.size(); ++r) {
            const SourceRun& run = reps[r].sources[c];
            for (std::size_t b = 0; b < run.batches.size(); ++b) {
                const BatchSums& bs = run.batches[b];
                area += bs.area;
                area2 += bs.area2;
                duration += bs.duration;
                paoi_sum += bs.paoi_sum;
                paoi_n += bs.paoi_n;
                y_sum += bs.y_sum;
                y_n += bs.y_n;
                t_sum += bs.t_sum;
                t_n += bs.t_n;
                for (std::size_t j = 0; j < mgf_area.size(); ++j) mgf_area[j] += bs.mgf_area[j];
                const std::size_t slot = r * sim.batches + b;
                if (bs.duration > 0.0) {
                    aoi_b.push_back(bs.area / bs.duration);
                    sum_batches[slot] += bs.area / bs.duration;
                    for (std::size_t j = 0; j < mgf_area.size(); ++j) mgf_b[j].push_back(bs.mgf_area[j] / bs.duration);
                } else {
                    sum_valid[slot] = false;
                }
                if (bs.paoi_n > 0) paoi_b.push_back(bs.paoi_sum / static_cast<double>(bs.paoi_n));
                if (bs.y_n > 0) y_b.push_back(bs.y_sum / static_cast<double>(bs.y_n));
                if (bs.t_n > 0) t_b.push_back(bs.t_sum / static_cast<double>(bs.t_n));
            }
            sr.paoi.merge(run.paoi);
            sr.system_time.merge(run.system_time);
            sr.interdeparture.merge(run.interdeparture);
            sr.counters.arrivals += run.counters.arrivals;
            sr.counters.delivered += run.counters.delivered;
            sr.counters.preempted += run.counters.preempted;
            sr.counters.discarded += run.counters.discarded;
            sr.counters.in_flight += run.counters.in_flight;
            sr.transitions.idle_arrivals += run.transitions.idle_arrivals;
            sr.transitions.entered_service += run.transitions.entered_service;
            sr.transitions.served_to_completion += run.transitions.served_to_completion;
            sr.transitions.same_source_preemptions += run.transitions.same_source_preemptions;
            sr.transitions.busy_time += run.transitions.busy_time;
            t_parts.push_back(&run.t_reservoir);
            y_parts.push_back(&run.y_reservoir);
            t_seen.push_back(run.t_seen);
            y_seen.push_back(run.y_seen);
        }

        // Pooled ratio estimators as point values; the batch spread gives the half-widths.
        sr.observed_time = duration;
        sr.mean_aoi = stats::batch_interval(aoi_b);
        sr.mean_aoi.mean = duration > 0.0 ? area / duration : 0.0;
        sr.aoi_m2 = duration > 0.0 ? area2 / duration : 0.0;
        sr.mean_paoi = stats::batch_interval(paoi_b);
        sr.mean_paoi.mean = paoi_n > 0 ? paoi_sum / static_cast<double>(paoi_n) : 0.0;
        sr.mean_interdeparture = stats::batch_interval(y_b);
        sr.mean_interdeparture.mean = y_n > 0 ? y_sum / static_cast<double>(y_n) : 0.0;
        sr.mean_system_time = stats::batch_interval(t_b);
        sr.mean_system_time.mean = t_n > 0 ? t_sum / static_cast<double>(t_n) : 0.0;
        for (std::size_t j = 0; j < mgf_area.size(); ++j) {
            stats::Interval iv = stats::batch_interval(mgf_b[j]);
            iv.mean = duration > 0.0 ? mgf_area[j] / duration : 0.0;
            sr.aoi_mgf.push_back(iv);
        }
        sr.system_time_samples = merge_reservoirs(t_parts, t_seen, sim.reservoir_capacity);
        sr.interdeparture_samples = merge_reservoirs(y_parts, y_seen, sim.reservoir_capacity);
        report.sources.push_back(std::move(sr));
    }

    std::vector<double> sums;
    for (std::size_t i = 0; i < total_batches; ++i)
        if (sum_valid[i]) sums.push_back(sum_batches[i]);
    report.sum_mean_aoi = stats::batch_interval(sums);
    report.sum_mean_aoi.mean = 0.0;
    for (const auto& sr : report.sources) report.sum_mean_aoi.mean += sr.mean_aoi.mean;

    for (const auto& rep : reps) report.trace.insert(report.trace.end(), rep.trace.begin(), rep.trace.end());
    return report;
}

} // namespace detail

/// Runs every replication (concurrently when threads allow) and merges them in index order.
inline SimReport simulate(const SystemConfig& cfg, const Policy& policy, const SimConfig& sim) {
    cfg.validate();
    policy.validate();
    sim.validate();

    std::vector<detail::ReplicationResult> results(sim.replications);
    std::size_t workers = sim.threads != 0 ? sim.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, sim.replications);

    if (workers <= 1) {
        for (std::size_t r = 0; r < sim.replications; ++r)
            results[r] = detail::Replication(cfg, policy, sim, static_cast<std::uint32_t>(r)).run();
    } else {
        std::mutex mutex;
        std::size_t next = 0;
        std::exception_ptr failure;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t r;
                    {
                        std::lock_guard lock(mutex);
                        if (next >= sim.replications || failure) return;
                        r = next++;
                    }
                    try {
                        results[r] = detail::Replication(cfg, policy, sim, static_cast<std::uint32_t>(r)).run();
                    } catch (...) {
                        std::lock_guard lock(mutex);
                        failure = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    return detail::merge(cfg, sim, results);
}

} // namespace aoi
