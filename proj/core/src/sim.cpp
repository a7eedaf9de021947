#include "dualcusum/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "dualcusum/errors.hpp"

namespace dualcusum {

namespace {

class System {
public:
    explicit System(const NetworkConfig& cfg)
        : cfg_(cfg),
          mode_(cfg.sensor_mode()),
          fusion_(cfg.fusion_model()),
          w_(static_cast<std::size_t>(cfg.sensors)),
          cap_(cfg.cap_after_change()) {}

    void run(Rng& rng, RunOutcome& out) {
        const auto L = static_cast<std::size_t>(cfg_.sensors);
        std::int64_t T = 1;
        if (cfg_.fixed_change_time) {
            T = *cfg_.fixed_change_time;
        } else {
            std::geometric_distribution<std::int64_t> geom(cfg_.rho);
            T = geom(rng) + 1;
        }
        out = RunOutcome{};
        out.change_time = T;
        out.transmit_slots.assign(L, 0);
        std::fill(w_.begin(), w_.end(), 0.0);
        double f = 0.0;
        const std::int64_t last = cfg_.stop_at_change ? T - 1 : T - 1 + cap_;
        for (std::int64_t k = 1; k <= last; ++k) {
            const DistributionSpec& obs = k < T ? cfg_.pre : cfg_.post;
            double y = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                w_[l] = std::max(0.0, w_[l] + sensor_increment(sample(obs, rng), mode_));
                if (w_[l] > cfg_.gamma) {
                    y += cfg_.b;
                    ++out.transmit_slots[l];
                }
            }
            y += sample(cfg_.mac_noise, rng);
            f = std::max(0.0, f + fusion_increment(y, fusion_));
            if (f > cfg_.beta) {
                out.tau = k;
                out.false_alarm = k < T;
                out.delay = std::max<std::int64_t>(0, k - T);
                return;
            }
        }
        if (cfg_.stop_at_change) {
            out.stopped = true;
        } else {
            out.censored = true;
        }
    }

private:
    const NetworkConfig& cfg_;
    SensorMode mode_;
    FusionModel fusion_;
    std::vector<double> w_;
    std::int64_t cap_;
};

struct ChunkStats {
    std::uint64_t runs = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t censored = 0;
    std::uint64_t stopped = 0;
    std::uint64_t completed = 0;  // not censored and not stopped
    double delay_sum = 0.0;
    double delay_sq = 0.0;
    std::uint64_t detections = 0;  // tau >= T
    double cond_sum = 0.0;
    std::vector<double> energy_sum;
    std::vector<double> energy_sq;

    void add(const RunOutcome& o, double b) {
        ++runs;
        if (energy_sum.empty()) {
            energy_sum.assign(o.transmit_slots.size(), 0.0);
            energy_sq.assign(o.transmit_slots.size(), 0.0);
        }
        for (std::size_t l = 0; l < o.transmit_slots.size(); ++l) {
            const double e = o.energy(l, b);
            energy_sum[l] += e;
            energy_sq[l] += e * e;
        }
        if (o.false_alarm) {
            ++false_alarms;
        }
        if (o.censored) {
            ++censored;
            return;
        }
        if (o.stopped) {
            ++stopped;
            return;
        }
        ++completed;
        const auto d = static_cast<double>(o.delay);
        delay_sum += d;
        delay_sq += d * d;
        if (!o.false_alarm) {
            ++detections;
            cond_sum += d;
        }
    }

    void merge(const ChunkStats& c) {
        runs += c.runs;
        false_alarms += c.false_alarms;
        censored += c.censored;
        stopped += c.stopped;
        completed += c.completed;
        delay_sum += c.delay_sum;
        delay_sq += c.delay_sq;
        detections += c.detections;
        cond_sum += c.cond_sum;
        if (energy_sum.empty()) {
            energy_sum = c.energy_sum;
            energy_sq = c.energy_sq;
        } else {
            for (std::size_t l = 0; l < energy_sum.size() && l < c.energy_sum.size(); ++l) {
                energy_sum[l] += c.energy_sum[l];
                energy_sq[l] += c.energy_sq[l];
            }
        }
    }
};

ChunkStats run_chunk(const NetworkConfig& cfg, std::uint64_t chunk) {
    const std::uint64_t first = chunk * kChunk;
    const std::uint64_t n = std::min(kChunk, cfg.replications - first);
    Rng rng = make_stream(cfg.seed, chunk);
    System sys(cfg);
    RunOutcome o;
    ChunkStats s;
    for (std::uint64_t i = 0; i < n; ++i) {
        sys.run(rng, o);
        s.add(o, cfg.b);
    }
    return s;
}

double half_width(double sum, double sq, double n) {
    if (n < 2) {
        return 0.0;
    }
    const double m = sum / n;
    const double var = std::max(0.0, (sq - n * m * m) / (n - 1));
    return 1.96 * std::sqrt(var / n);
}

}  // namespace

RunOutcome run_once(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    System sys(cfg);
    RunOutcome o;
    sys.run(rng, o);
    return o;
}

void stream_outcomes(const NetworkConfig& cfg, const std::function<void(std::uint64_t, const RunOutcome&)>& sink) {
    cfg.validate();
    System sys(cfg);
    RunOutcome o;
    const std::uint64_t chunks = (cfg.replications + kChunk - 1) / kChunk;
    for (std::uint64_t c = 0; c < chunks; ++c) {
        Rng rng = make_stream(cfg.seed, c);
        const std::uint64_t n = std::min(kChunk, cfg.replications - c * kChunk);
        for (std::uint64_t i = 0; i < n; ++i) {
            sys.run(rng, o);
            sink(c * kChunk + i, o);
        }
    }
}

PerfReport estimate(const NetworkConfig& cfg) {
    cfg.validate();
    const std::uint64_t chunks = (cfg.replications + kChunk - 1) / kChunk;
    std::vector<ChunkStats> results(chunks);
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t c = next++; c < chunks; c = next++) {
            results[c] = run_chunk(cfg, c);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    ChunkStats total;
    for (const auto& c : results) {
        total.merge(c);
    }

    PerfReport r;
    r.method = PerfReport::Method::Simulated;
    r.config_hash = cfg.hash();
    r.replications = total.runs;
    r.false_alarms = total.false_alarms;
    r.censored = total.censored;

    const std::uint64_t decided = total.runs - total.censored;
    if (decided == 0) {
        throw EstimationError("no replication finished before the slot cap");
    }
    const auto nd = static_cast<double>(decided);
    r.pfa = static_cast<double>(total.false_alarms) / nd;
    r.pfa_ci = 1.96 * std::sqrt(r.pfa * (1.0 - r.pfa) / nd);

    if (cfg.stop_at_change) {
        r.edd = std::numeric_limits<double>::quiet_NaN();
        r.edd_conditional = std::numeric_limits<double>::quiet_NaN();
    } else {
        if (total.completed == 0) {
            throw EstimationError("no replication completed");
        }
        const auto nc = static_cast<double>(total.completed);
        r.edd = total.delay_sum / nc;
        r.edd_ci = half_width(total.delay_sum, total.delay_sq, nc);
        r.edd_conditional = total.detections ? total.cond_sum / static_cast<double>(total.detections)
                                             : std::numeric_limits<double>::quiet_NaN();
    }

    const auto nr = static_cast<double>(total.runs);
    std::size_t worst = 0;
    for (std::size_t l = 1; l < total.energy_sum.size(); ++l) {
        if (total.energy_sum[l] > total.energy_sum[worst]) {
            worst = l;
        }
    }
    if (!total.energy_sum.empty()) {
        r.energy = total.energy_sum[worst] / nr;
        r.energy_ci = half_width(total.energy_sum[worst], total.energy_sq[worst], nr);
    }

    const bool fa_possible = !(cfg.fixed_change_time && *cfg.fixed_change_time <= 1);
    if (fa_possible && total.false_alarms < 50) {
        std::ostringstream os;
        os << "only " << total.false_alarms << " false alarms observed; P_FA estimate is imprecise";
        r.warnings.push_back(os.str());
    }
    if (total.censored > 0) {
        std::ostringstream os;
        os << total.censored << " runs censored at the slot cap";
        r.warnings.push_back(os.str());
    }
    return r;
}

std::vector<Excursion> measure_excursions(const IncrementLawPtr& law, double gamma, std::size_t count,
                                          std::uint64_t seed) {
    if (!(law->mean() < 0)) {
        throw ModelViolationError("excursions need negative pre-change drift");
    }
    ExcursionSampler sampler(law, gamma);
    Rng rng = make_stream(seed, 0xe5c);
    std::vector<Excursion> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(sampler.next(rng));
    }
    return out;
}

std::vector<Excursion> measure_excursions(const NetworkConfig& cfg, std::size_t count) {
    cfg.validate();
    return measure_excursions(increment_law({cfg.increment_kind(), Regime::PreChange}), cfg.gamma, count, cfg.seed);
}

MeanEstimate mean_fpt_monte_carlo(const IncrementLawPtr& law, double gamma, std::uint64_t runs, std::uint64_t seed,
                                  unsigned threads) {
    if (runs < 2) {
        throw PrecisionError("need at least two runs");
    }
    if (!(law->mean() < 0)) {
        throw ModelViolationError("first passage oracle needs negative drift");
    }
    const std::uint64_t chunks = (runs + kChunk - 1) / kChunk;
    std::vector<std::pair<double, double>> sums(chunks);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t c = next++; c < chunks; c = next++) {
            ExcursionSampler sampler(law, gamma);
            Rng rng = make_stream(seed, c);
            const std::uint64_t n = std::min(kChunk, runs - c * kChunk);
            double s1 = 0.0;
            double s2 = 0.0;
            for (std::uint64_t i = 0; i < n; ++i) {
                const auto t = static_cast<double>(sampler.next_crossing(rng).fpt);
                s1 += t;
                s2 += t * t;
            }
            sums[c] = {s1, s2};
        }
    };
    threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& [a, b] : sums) {
        s1 += a;
        s2 += b;
    }
    const auto n = static_cast<double>(runs);
    return {s1 / n, half_width(s1, s2, n), runs};
}

std::vector<double> pooled_batch_gaps(const IncrementLawPtr& law, double gamma, int sensors, std::int64_t slots,
                                      std::uint64_t seed) {
    if (sensors < 1) {
        throw ConfigError("need at least one sensor");
    }
    std::vector<std::int64_t> starts;
    for (int l = 0; l < sensors; ++l) {
        ExcursionSampler sampler(law, gamma);
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(l));
        while (true) {
            const Excursion e = sampler.next(rng);
            if (e.censored || e.start > slots) {
                break;
            }
            starts.push_back(e.start);
        }
    }
    std::sort(starts.begin(), starts.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < starts.size(); ++i) {
        gaps.push_back(static_cast<double>(starts[i] - starts[i - 1]));
    }
    return gaps;
}

}  // namespace dualcusum
