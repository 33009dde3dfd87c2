#include "ppmkit/split_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "ppmkit/csv.hpp"
#include "ppmkit/rng.hpp"

namespace ppm {

Minutes compute_t_split(const EventLog& log, double fraction) {
    if (log.empty()) raise(ErrorKind::InvalidArgument, "compute_t_split on empty log");
    if (!(fraction > 0.0) || fraction > 1.0) {
        raise(ErrorKind::InvalidArgument, "split fraction must be in (0, 1], got ", fraction);
    }
    std::vector<Minutes> completions;
    completions.reserve(log.size());
    for (const auto& trace : log.traces) completions.push_back(trace.completion_time());
    std::sort(completions.begin(), completions.end());

    auto n = static_cast<double>(completions.size());
    auto need = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
    need = std::clamp<std::size_t>(need, 1, completions.size());
    return completions[need - 1];
}

SplitResult temporal_split(const EventLog& log, Minutes t_split) {
    SplitResult result;
    result.t_split = t_split;
    result.train.schema = log.schema;
    result.test_completed.schema = log.schema;
    result.test_truncated.schema = log.schema;

    for (const auto& trace : log.traces) {
        if (trace.empty()) continue;
        if (trace.completion_time() <= t_split) {
            result.train.traces.push_back(trace);
            continue;
        }
        result.test_completed.traces.push_back(trace);

        Trace truncated;
        truncated.case_id = trace.case_id;
        for (const auto& e : trace.events) {
            if (e.t_end <= t_split) truncated.events.push_back(e);
        }
        if (truncated.empty()) {
            result.skipped_cases.push_back(trace.case_id);
        } else {
            result.test_truncated.traces.push_back(std::move(truncated));
        }
    }
    return result;
}

EventLog sample_training(const EventLog& train, std::size_t n, std::uint64_t seed) {
    if (n > train.size()) {
        raise(ErrorKind::InvalidArgument, "cannot sample ", n, " traces from a log of ",
              train.size());
    }
    Rng rng = make_rng(seed);
    auto picked = sample_indices(train.size(), n, rng);

    EventLog sample;
    sample.schema = train.schema;
    sample.traces.reserve(n);
    for (std::size_t idx : picked) sample.traces.push_back(train.traces[idx]);
    return sample;
}

std::pair<EventLog, EventLog> sample_validation(const EventLog& train, double fraction,
                                                std::uint64_t seed) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        raise(ErrorKind::InvalidArgument, "validation fraction must be in (0, 1), got ", fraction);
    }
    std::size_t n_valid = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(train.size())));
    n_valid = std::min(n_valid, train.size());

    Rng rng = make_rng(seed);
    auto picked = sample_indices(train.size(), n_valid, rng);

    EventLog remainder, validation;
    remainder.schema = train.schema;
    validation.schema = train.schema;
    std::size_t next_pick = 0;
    for (std::size_t i = 0; i < train.traces.size(); ++i) {
        if (next_pick < picked.size() && picked[next_pick] == i) {
            validation.traces.push_back(train.traces[i]);
            ++next_pick;
        } else {
            remainder.traces.push_back(train.traces[i]);
        }
    }
    return {std::move(remainder), std::move(validation)};
}

void write_split_manifest(const SplitResult& split, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& trace : split.train.traces) {
        rows.push_back({trace.case_id, "train", std::to_string(trace.size())});
    }
    for (const auto& trace : split.test_truncated.traces) {
        rows.push_back({trace.case_id, "test", std::to_string(trace.size())});
    }
    for (const auto& case_id : split.skipped_cases) {
        rows.push_back({case_id, "test_skipped", "0"});
    }
    write_csv_file(path, {"case_id", "bucket", "truncation_length"}, rows);
}

}  // namespace ppm
