#pragma once

#include <cstdint>
#include <limits>

#include "dualcusum/dist.hpp"

namespace dualcusum {

/// One excursion of the reflected walk above a level, started from W = 0:
/// the first passage time to the level (>=), the overshoot at that slot, the
/// batch size (slots with W >= level until the walk returns to 0, crossing
/// slot included) and the number of slots from crossing to the return.
struct Excursion {
    std::int64_t fpt = 0;
    double overshoot = 0.0;
    std::int64_t batch = 0;
    std::int64_t return_time = 0;
    std::int64_t start = 0;  // absolute slot of the crossing
    bool censored = false;
};

/// Generates consecutive excursions of a single walk. Each call to next()
/// resumes from the regeneration point at W = 0 left by the previous one, so
/// successive fpt values are the inter-batch gaps of the exceedance process.
class ExcursionSampler {
public:
    ExcursionSampler(IncrementLawPtr law, double level,
                     std::int64_t max_slots = std::numeric_limits<std::int64_t>::max());

    Excursion next(Rng& rng);

    /// Runs only to the first passage from W = 0 (batch fields left at 0).
    /// Usable under any drift sign.
    Excursion next_crossing(Rng& rng);

private:
    IncrementLawPtr law_;
    double level_;
    std::int64_t max_slots_;
    std::int64_t clock_ = 0;
};

}  // namespace dualcusum
