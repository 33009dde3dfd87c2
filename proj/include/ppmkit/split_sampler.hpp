#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppmkit/event_log.hpp"

namespace ppm {

/// Temporal split of a log at t_split. train and test_completed partition
/// the input; test_truncated holds the pre-t_split prefix of every test
/// trace that has at least one event ending by t_split. Test traces whose
/// first event ends after t_split cannot be predicted and are listed in
/// skipped_cases instead.
struct SplitResult {
    Minutes t_split = 0;
    EventLog train;            // traces fully completed by t_split
    EventLog test_completed;   // the rest, in full (ground truth)
    EventLog test_truncated;   // running prefixes as of t_split
    std::optional<EventLog> validation;
    std::vector<std::string> skipped_cases;
};

/// Earliest timestamp t such that at least fraction * |log| traces have all
/// their events ending at or before t. fraction in (0, 1].
Minutes compute_t_split(const EventLog& log, double fraction);

SplitResult temporal_split(const EventLog& log, Minutes t_split);

/// Uniform sample of n traces without replacement, deterministic in seed.
/// Sampled traces keep their original log order.
EventLog sample_training(const EventLog& train, std::size_t n, std::uint64_t seed);

/// Partitions the log into (remainder, validation) where validation holds
/// round(fraction * |log|) traces. fraction in (0, 1).
std::pair<EventLog, EventLog> sample_validation(const EventLog& train, double fraction,
                                                std::uint64_t seed);

/// Audit manifest: one row per trace with columns
/// case_id, bucket (train | test | test_skipped), truncation_length.
void write_split_manifest(const SplitResult& split, const std::string& path);

}  // namespace ppm
