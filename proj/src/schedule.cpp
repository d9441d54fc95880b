#include "fer/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace fer {

std::int64_t accuracy_ticks(double accuracy) { return std::llround(accuracy * 10000.0); }

PlateauSchedule::PlateauSchedule(double initial_lr, int patience, double factor)
    : lr_(initial_lr), patience_(patience), factor_(factor) {
    if (!(initial_lr > 0.0)) throw std::invalid_argument("initial learning rate must be positive");
    if (patience < 1) throw std::invalid_argument("plateau patience must be at least 1");
    if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("lr factor must lie in (0, 1)");
}

double PlateauSchedule::observe(double validation_accuracy) {
    const auto ticks = accuracy_ticks(validation_accuracy);
    if (!have_best_ || ticks > best_) {
        have_best_ = true;
        best_ = ticks;
        stale_ = 0;
        return lr_;
    }
    if (++stale_ >= patience_) {
        lr_ *= factor_;
        stale_ = 0;
    }
    return lr_;
}

double step_lr_schedule(std::span<const double> history, double initial_lr, int patience, double factor) {
    if (history.empty()) throw std::invalid_argument("learning-rate schedule needs a nonempty history");
    PlateauSchedule schedule(initial_lr, patience, factor);
    for (double acc : history) schedule.observe(acc);
    return schedule.lr();
}

}  // namespace fer
