#include "dualcusum/excursion.hpp"

#include <algorithm>

#include "dualcusum/errors.hpp"

namespace dualcusum {

ExcursionSampler::ExcursionSampler(IncrementLawPtr law, double level, std::int64_t max_slots)
    : law_(std::move(law)), level_(level), max_slots_(max_slots) {
    if (!law_) {
        throw ConfigError("excursion sampler needs an increment law");
    }
    if (!(level > 0)) {
        throw ConfigError("excursion level must be > 0");
    }
}

Excursion ExcursionSampler::next_crossing(Rng& rng) {
    Excursion e;
    const IncrementLaw& law = *law_;
    double w = 0.0;
    std::int64_t k = 0;
    while (w < level_) {
        if (k >= max_slots_) {
            e.censored = true;
            break;
        }
        w = std::max(0.0, w + law.sample(rng));
        ++k;
    }
    e.fpt = k;
    e.overshoot = e.censored ? 0.0 : w - level_;
    e.start = clock_ + k;
    clock_ += k;
    return e;
}

Excursion ExcursionSampler::next(Rng& rng) {
    Excursion e;
    const IncrementLaw& law = *law_;
    double w = 0.0;
    std::int64_t k = 0;
    while (w < level_) {
        if (k >= max_slots_) {
            e.fpt = k;
            e.censored = true;
            clock_ += k;
            return e;
        }
        w = std::max(0.0, w + law.sample(rng));
        ++k;
    }
    e.fpt = k;
    e.overshoot = w - level_;
    e.start = clock_ + k;
    e.batch = 1;
    std::int64_t r = 0;
    while (w > 0.0) {
        w = std::max(0.0, w + law.sample(rng));
        ++r;
        if (w >= level_) {
            ++e.batch;
        }
        if (r >= max_slots_) {
            e.censored = true;
            break;
        }
    }
    e.return_time = r;
    clock_ += k + r;
    return e;
}

}  // namespace dualcusum
