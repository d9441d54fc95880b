#pragma once

#include <cstdint>
#include <span>

namespace fer {

/// Validation accuracy quantized to 4 decimals; improvements are strict increases
/// of this value.
std::int64_t accuracy_ticks(double accuracy);

/// Reduce-on-plateau learning rate. After `patience` consecutive epochs without a
/// strict improvement over the best accuracy so far, the rate is multiplied by
/// `factor` and the patience counter restarts. The best accuracy is never reset.
class PlateauSchedule {
public:
    PlateauSchedule(double initial_lr, int patience = 10, double factor = 0.5);

    /// Records one epoch's validation accuracy; returns the rate for the next epoch.
    double observe(double validation_accuracy);

    double lr() const { return lr_; }
    int epochs_since_improvement() const { return stale_; }

private:
    double lr_;
    int patience_;
    double factor_;
    bool have_best_ = false;
    std::int64_t best_ = 0;
    int stale_ = 0;
};

/// Replays a validation-accuracy history from `initial_lr`; returns the rate in
/// effect after the last recorded epoch.
double step_lr_schedule(std::span<const double> history, double initial_lr, int patience = 10, double factor = 0.5);

}  // namespace fer
