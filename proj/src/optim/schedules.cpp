#include "lhopt/optim/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lhopt::optim {

std::string_view schedule_name(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::multistep: return "multistep";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::quadratic: return "quadratic";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::cosine_to_zero: return "cosine_to_zero";
    case ScheduleKind::cosine_to_tenth: return "cosine_to_tenth";
    }
    throw std::logic_error("unknown ScheduleKind");
}

double schedule_value(ScheduleKind kind, double base_lr, double progress) {
    if (!(progress >= 0.0 && progress <= 1.0)) throw std::domain_error("schedule_value: progress outside [0, 1]");
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    switch (kind) {
    case ScheduleKind::constant: return base_lr;
    case ScheduleKind::multistep:
        if (progress < 1.0 / 3.0) return base_lr;
        if (progress < 2.0 / 3.0) return base_lr * 0.1;
        return base_lr * 0.01;
    case ScheduleKind::linear: return base_lr * (1.0 - progress);
    case ScheduleKind::quadratic: return base_lr * (1.0 - progress) * (1.0 - progress);
    case ScheduleKind::exponential: return base_lr * std::pow(0.01, progress);
    case ScheduleKind::cosine_to_zero: return base_lr * cosine;
    case ScheduleKind::cosine_to_tenth: return base_lr * (0.1 + 0.9 * cosine);
    }
    throw std::logic_error("unknown ScheduleKind");
}

std::vector<BaselineSpec> baseline_grid() {
    std::vector<BaselineSpec> grid;
    for (double lr : baseline_learning_rates)
        for (ScheduleKind kind : all_schedule_kinds) grid.push_back({lr, kind});
    return grid;
}

} // namespace lhopt::optim
