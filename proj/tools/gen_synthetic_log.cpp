// Generates the bundled synthetic event log: a six-activity claim-handling
// process with two global attributes (numeric amount, categorical channel)
// whose total time and review-occurrence correlate with both. Deterministic
// for a fixed seed.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ppmkit/csv.hpp"
#include "ppmkit/event_log.hpp"
#include "ppmkit/rng.hpp"
#include "ppmkit/time_utils.hpp"

using namespace ppm;

int main(int argc, char** argv) {
    std::string out_path = argc > 1 ? argv[1] : "data/synthetic_log.csv";
    std::size_t n_traces = argc > 2 ? std::stoul(argv[2]) : 320;
    std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 42;

    const std::vector<std::string> channels = {"online", "branch", "broker"};
    Rng rng = make_rng(seed);

    Minutes horizon_start = parse_iso8601_minutes("2024-01-02T08:00Z");
    // Case arrivals spread over ~200 days so the 80% temporal split leaves a
    // healthy band of genuinely running traces.
    Minutes spacing = 200 * 1440 / static_cast<Minutes>(n_traces);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < n_traces; ++i) {
        std::string case_id = "case_" + std::to_string(1000 + i);
        double amount = 1000.0 + 100.0 * static_cast<double>(bounded(rng, 291));  // 1000..30000
        const std::string& channel = channels[bounded(rng, channels.size())];

        Minutes t = horizon_start + static_cast<Minutes>(i) * spacing +
                    static_cast<Minutes>(bounded(rng, 600));

        // Higher amounts move slower; broker cases add handling overhead.
        double pace = 1.0 + amount / 15000.0 + (channel == "broker" ? 0.8 : 0.0) +
                      0.4 * uniform01(rng);

        std::vector<std::string> activities = {"Register Claim", "Assess Damage"};
        if (amount > 12000 || channel == "broker") activities.push_back("Request Documents");
        if (uniform01(rng) < 0.3) activities.push_back("Assess Damage");
        // Expensive or branch-handled claims tend to need the final review.
        bool review = amount > 16000 ? uniform01(rng) < 0.85
                                     : (channel == "branch" ? uniform01(rng) < 0.55
                                                            : uniform01(rng) < 0.2);
        if (review) activities.push_back("Final Review");
        if (uniform01(rng) < 0.25) activities.push_back("Notify Customer");
        activities.push_back("Close Claim");

        // Long-running cases: each step waits hours-to-days, so at any split
        // point a band of cases is genuinely mid-flight.
        for (const auto& activity : activities) {
            Minutes gap = static_cast<Minutes>((480.0 + static_cast<double>(bounded(rng, 5760))) * pace);
            Minutes duration = static_cast<Minutes>((160.0 + static_cast<double>(bounded(rng, 1920))) * pace);
            if (activity == "Final Review") duration += static_cast<Minutes>(9600.0 * pace);
            Minutes start = t + gap;
            Minutes end = start + duration;
            char amount_text[32];
            std::snprintf(amount_text, sizeof(amount_text), "%.0f", amount);
            rows.push_back({case_id, activity, format_iso8601_minutes(start),
                            format_iso8601_minutes(end), amount_text, channel});
            t = end;
        }
    }

    write_csv_file(out_path, {"case_id", "activity", "start_ts", "end_ts", "amount", "channel"},
                   rows);
    std::cout << "wrote " << rows.size() << " events / " << n_traces << " traces to " << out_path
              << "\n";
    return 0;
}
