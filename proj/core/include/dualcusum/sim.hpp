#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dualcusum/config.hpp"
#include "dualcusum/excursion.hpp"
#include "dualcusum/perf.hpp"

namespace dualcusum {

struct RunOutcome {
    std::int64_t tau = -1;  // alarm slot, -1 when none was raised
    std::int64_t change_time = 1;
    bool false_alarm = false;
    bool censored = false;  // slot cap reached without an alarm
    bool stopped = false;   // stop_at_change run ended at the change slot
    std::int64_t delay = 0;  // (tau - T)^+
    std::vector<std::int64_t> transmit_slots;  // per sensor, slots with Y > 0 up to tau

    double energy(std::size_t sensor, double b) const {
        return b * b * static_cast<double>(transmit_slots[sensor]);
    }
};

/// One replication of the full system. T is drawn once (geometric on
/// {1, 2, ...} unless fixed), sensors observe pre before T and post from T on,
/// transmit b while their statistic is strictly above gamma, and the run stops
/// at the first fusion statistic strictly above beta.
RunOutcome run_once(const NetworkConfig& cfg, Rng& rng);

/// Plain Monte Carlo over cfg.replications runs. Runs are grouped in chunks of
/// kChunk consecutive replications, each chunk owning the stream
/// make_stream(seed, chunk index), and chunks are reduced in index order, so
/// results do not depend on the thread count.
PerfReport estimate(const NetworkConfig& cfg);

inline constexpr std::uint64_t kChunk = 1000;

/// Calls `sink` for every outcome in replication order (single threaded).
void stream_outcomes(const NetworkConfig& cfg, const std::function<void(std::uint64_t, const RunOutcome&)>& sink);

/// Consecutive excursions of one sensor's pre-change statistic above gamma.
std::vector<Excursion> measure_excursions(const NetworkConfig& cfg, std::size_t count);
std::vector<Excursion> measure_excursions(const IncrementLawPtr& law, double gamma, std::size_t count,
                                          std::uint64_t seed);

struct MeanEstimate {
    double mean = 0.0;
    double ci = 0.0;  // 95% half-width
    std::uint64_t runs = 0;
};

/// Monte Carlo mean of the first passage time from W = 0 to gamma over
/// independent runs, chunked like estimate().
MeanEstimate mean_fpt_monte_carlo(const IncrementLawPtr& law, double gamma, std::uint64_t runs, std::uint64_t seed,
                                  unsigned threads = 0);

/// Pooled inter-batch gaps of `sensors` independent pre-change walks over
/// `slots` slots (sorted batch start times, differenced).
std::vector<double> pooled_batch_gaps(const IncrementLawPtr& law, double gamma, int sensors, std::int64_t slots,
                                      std::uint64_t seed);

}  // namespace dualcusum
