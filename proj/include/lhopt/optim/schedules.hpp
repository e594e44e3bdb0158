#pragma once

#include <array>
#include <string_view>
#include <vector>

namespace lhopt::optim {

enum class ScheduleKind {
    constant,
    multistep,
    linear,
    quadratic,
    exponential,
    cosine_to_zero,
    cosine_to_tenth,
};

inline constexpr std::array<ScheduleKind, 7> all_schedule_kinds = {
    ScheduleKind::constant,    ScheduleKind::multistep,      ScheduleKind::linear,         ScheduleKind::quadratic,
    ScheduleKind::exponential, ScheduleKind::cosine_to_zero, ScheduleKind::cosine_to_tenth,
};

std::string_view schedule_name(ScheduleKind kind);

/// Learning rate at `progress` in [0, 1]. Throws std::domain_error outside.
/// multistep drops by 10x at 1/3 and 2/3; exponential decays to 1% at the end.
double schedule_value(ScheduleKind kind, double base_lr, double progress);

struct BaselineSpec {
    double base_lr;
    ScheduleKind schedule;
};

inline constexpr std::array<double, 5> baseline_learning_rates = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};

/// The 5 learning rates x 7 schedules AdamW grid.
std::vector<BaselineSpec> baseline_grid();

} // namespace lhopt::optim
