#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lhopt/actions/action_space.hpp"
#include "lhopt/optim/hyper_params.hpp"

namespace lhopt::harness {

inline constexpr int schedule_format_version = 1;
inline constexpr const char* schedule_optimizer_id = "ciao";

/// Column order of a schedule record after `progress` and before `restart`.
const std::vector<std::string>& schedule_hyper_columns();

struct ScheduleRecord {
    double progress = 0.0;
    optim::HyperParams hypers;
    /// Restart action taken before these hyperparameters applied (0 = none).
    int restart = 0;

    bool operator==(const ScheduleRecord&) const = default;
};

/// Piecewise-constant hyperparameter trajectory keyed by training progress.
/// Each record holds until the next record's progress.
struct ScheduleFile {
    int version = schedule_format_version;
    std::string optimizer = schedule_optimizer_id;
    std::uint64_t policy_hash = 0;
    std::uint64_t task_seed = 0;
    std::vector<ScheduleRecord> records;

    /// Record active at `progress` in [0, 1]. Throws std::domain_error outside.
    const ScheduleRecord& at(double progress) const;

    bool operator==(const ScheduleFile&) const = default;
};

class ScheduleParseError : public std::runtime_error {
public:
    ScheduleParseError(std::size_t line, const std::string& field, const std::string& message);
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Throws std::invalid_argument unless records exist, the first is at
/// progress 0, progress strictly increases inside [0, 1), every hyperparameter
/// lies within `bounds` and restart indices are in range.
void validate_schedule(const ScheduleFile& schedule, const actions::HyperBounds& bounds = {});

/// Text form: '#' comment lines, `key value` header lines, a `columns` line,
/// then one whitespace-separated record per line. Doubles use the shortest
/// representation that reads back to the same value.
std::string serialize_schedule(const ScheduleFile& schedule);
ScheduleFile parse_schedule(const std::string& text, const actions::HyperBounds& bounds = {});

void write_schedule(const ScheduleFile& schedule, const std::filesystem::path& path);
ScheduleFile read_schedule(const std::filesystem::path& path, const actions::HyperBounds& bounds = {});

} // namespace lhopt::harness
