#include "ppmkit/beta_learners.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ppm {

bool is_regression(BetaFamily family) {
    switch (family) {
        case BetaFamily::KnnAct:
        case BetaFamily::KnnAtt:
        case BetaFamily::TimeSeq:
        case BetaFamily::PathPred:
            return true;
        default:
            return false;
    }
}

std::string to_string(BetaFamily family) {
    switch (family) {
        case BetaFamily::KnnAct: return "knn_act";
        case BetaFamily::KnnAtt: return "knn_att";
        case BetaFamily::TimeSeq: return "time_seq";
        case BetaFamily::PathPred: return "path_pred";
        case BetaFamily::ActivityBased: return "activity_based";
        case BetaFamily::StateBased: return "state_based";
        case BetaFamily::AttBased: return "att_based";
        case BetaFamily::PositiveEvidence: return "positive_evidence";
    }
    return "?";
}

std::string to_string(Aggregation aggregation) {
    switch (aggregation) {
        case Aggregation::None: return "none";
        case Aggregation::Mean: return "mean";
        case Aggregation::Median: return "median";
        case Aggregation::Mode: return "mode";
    }
    return "?";
}

BetaFamily parse_family(const std::string& text) {
    for (BetaFamily family : {BetaFamily::KnnAct, BetaFamily::KnnAtt, BetaFamily::TimeSeq,
                              BetaFamily::PathPred, BetaFamily::ActivityBased,
                              BetaFamily::StateBased, BetaFamily::AttBased,
                              BetaFamily::PositiveEvidence}) {
        if (to_string(family) == text) return family;
    }
    raise(ErrorKind::Config, "unknown beta-learner family '", text, "'");
}

Aggregation parse_aggregation(const std::string& text) {
    for (Aggregation agg : {Aggregation::None, Aggregation::Mean, Aggregation::Median,
                            Aggregation::Mode}) {
        if (to_string(agg) == text) return agg;
    }
    raise(ErrorKind::Config, "unknown aggregation '", text, "'");
}

std::string BetaLearnerSpec::id() const {
    if (is_regression(family)) return to_string(family) + " " + to_string(aggregation);
    return to_string(family);
}

void BetaLearnerSpec::validate() const {
    if (is_regression(family)) {
        if (aggregation == Aggregation::None) {
            raise(ErrorKind::Config, "regression family ", to_string(family),
                  " needs an aggregation (mean|median|mode)");
        }
    } else if (aggregation != Aggregation::None) {
        raise(ErrorKind::Config, "classification family ", to_string(family),
              " takes no aggregation");
    }
    if (k < 0) raise(ErrorKind::Config, "k must be >= 0");
    if (mode_bin_minutes <= 0) raise(ErrorKind::Config, "mode_bin_minutes must be positive");
}

int FittedLearner::effective_k() const {
    int base = spec.k > 0 ? spec.k : 10;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(base), train_size()));
}

FittedLearner fit(const BetaLearnerSpec& spec, const EventLog& train, const LogSchema& schema) {
    spec.validate();
    if (train.empty()) raise(ErrorKind::InvalidArgument, "cannot fit on an empty training log");
    if (!is_regression(spec.family) && !schema.target_activity) {
        raise(ErrorKind::Schema, "classification family ", to_string(spec.family),
              " requires a target_activity in the schema");
    }

    FittedLearner learner;
    learner.spec = spec;
    learner.schema = schema;
    learner.alphabet = train.activity_alphabet();

    auto globals = schema.global_attributes();
    learner.attr_min.assign(globals.size(), std::numeric_limits<double>::infinity());
    learner.attr_max.assign(globals.size(), -std::numeric_limits<double>::infinity());

    for (const auto& trace : train.traces) {
        if (trace.empty()) continue;
        learner.act_counts.push_back([&] {
            std::vector<double> counts(learner.alphabet.size() + 1, 0.0);
            for (const auto& e : trace.events) {
                auto it = std::lower_bound(learner.alphabet.begin(), learner.alphabet.end(),
                                           e.activity);
                if (it != learner.alphabet.end() && *it == e.activity) {
                    counts[static_cast<std::size_t>(it - learner.alphabet.begin())] += 1.0;
                } else {
                    counts.back() += 1.0;
                }
            }
            return counts;
        }());

        std::vector<AttributeValue> attrs;
        for (std::size_t g = 0; g < globals.size(); ++g) {
            const AttributeValue* v = trace.events.front().attr(globals[g]->name);
            if (!v) raise(ErrorKind::Schema, "trace '", trace.case_id, "' is missing attribute '",
                          globals[g]->name, "'");
            attrs.push_back(*v);
            if (std::holds_alternative<double>(*v)) {
                double d = std::get<double>(*v);
                learner.attr_min[g] = std::min(learner.attr_min[g], d);
                learner.attr_max[g] = std::max(learner.attr_max[g], d);
            }
        }
        learner.attr_rows.push_back(std::move(attrs));
        learner.elapsed_seqs.push_back(trace.cumulative_elapsed());
        learner.act_seqs.push_back(trace.activities());

        Minutes total = total_time_minutes(trace);
        if (total < 0) {
            raise(ErrorKind::Schema, "trace '", trace.case_id, "' has negative total time");
        }
        learner.total_times.push_back(total);
        learner.occurrence_labels.push_back(
            schema.target_activity && trace.contains_activity(*schema.target_activity) ? 1 : 0);
    }
    if (learner.total_times.empty()) {
        raise(ErrorKind::InvalidArgument, "training log has no non-empty traces");
    }
    return learner;
}

std::vector<double> activity_count_vector(const FittedLearner& learner, const Trace& trace) {
    std::vector<double> counts(learner.alphabet.size() + 1, 0.0);
    for (const auto& e : trace.events) {
        auto it = std::lower_bound(learner.alphabet.begin(), learner.alphabet.end(), e.activity);
        if (it != learner.alphabet.end() && *it == e.activity) {
            counts[static_cast<std::size_t>(it - learner.alphabet.begin())] += 1.0;
        } else {
            counts.back() += 1.0;
        }
    }
    return counts;
}

double activity_distance(const FittedLearner& learner, const std::vector<double>& query,
                         std::size_t train_index) {
    const auto& row = learner.act_counts[train_index];
    double sum = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        double d = query[i] - row[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double attribute_distance(const FittedLearner& learner,
                          const std::vector<AttributeValue>& query, std::size_t train_index) {
    const auto& row = learner.attr_rows[train_index];
    if (row.empty()) return 0.0;
    double sum = 0;
    for (std::size_t g = 0; g < row.size(); ++g) {
        const AttributeValue& a = query[g];
        const AttributeValue& b = row[g];
        if (std::holds_alternative<double>(b)) {
            double span = learner.attr_max[g] - learner.attr_min[g];
            if (span <= 0) continue;  // constant dimension contributes nothing
            double qa = std::holds_alternative<double>(a) ? std::get<double>(a) : 0.0;
            double scaled_a = (qa - learner.attr_min[g]) / span;
            double scaled_b = (std::get<double>(b) - learner.attr_min[g]) / span;
            sum += std::fabs(scaled_a - scaled_b);
        } else {
            sum += attribute_equal(a, b) ? 0.0 : 1.0;
        }
    }
    return sum / static_cast<double>(row.size());
}

double time_seq_distance(const FittedLearner& learner, const std::vector<Minutes>& query,
                         std::size_t train_index) {
    const auto& row = learner.elapsed_seqs[train_index];
    std::size_t len = std::min(query.size(), row.size());
    if (len == 0) return 0.0;
    double sum = 0;
    for (std::size_t i = 0; i < len; ++i) {
        double d = static_cast<double>(query[i] - row[i]);
        sum += d * d;
    }
    return std::sqrt(sum) / static_cast<double>(len);
}

namespace {

std::vector<std::size_t> k_smallest(const std::vector<double>& distances, int k) {
    std::vector<std::size_t> order(distances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ties at the k-th distance break by ascending training index.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return a < b;
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(k)));
    return order;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const FittedLearner& learner, const Trace& prefix) {
    if (prefix.empty()) raise(ErrorKind::InvalidArgument, "cannot predict for an empty prefix");
    std::vector<double> distances(learner.train_size(), 0.0);
    switch (learner.spec.family) {
        case BetaFamily::KnnAct:
        case BetaFamily::ActivityBased: {
            auto query = activity_count_vector(learner, prefix);
            for (std::size_t i = 0; i < distances.size(); ++i) {
                distances[i] = activity_distance(learner, query, i);
            }
            break;
        }
        case BetaFamily::KnnAtt:
        case BetaFamily::AttBased: {
            std::vector<AttributeValue> query;
            for (const auto& [name, value] : prefix.global_values(learner.schema)) {
                query.push_back(value);
            }
            for (std::size_t i = 0; i < distances.size(); ++i) {
                distances[i] = attribute_distance(learner, query, i);
            }
            break;
        }
        case BetaFamily::TimeSeq: {
            auto query = prefix.cumulative_elapsed();
            for (std::size_t i = 0; i < distances.size(); ++i) {
                distances[i] = time_seq_distance(learner, query, i);
            }
            break;
        }
        default:
            raise(ErrorKind::InvalidArgument, "family ", to_string(learner.spec.family),
                  " has no neighbour set");
    }
    return k_smallest(distances, learner.effective_k());
}

std::vector<std::size_t> path_candidates(const FittedLearner& learner, const Trace& prefix) {
    if (prefix.empty()) raise(ErrorKind::InvalidArgument, "cannot predict for an empty prefix");
    auto query = prefix.activities();

    // Full match: the training sequence starts with the whole prefix.
    std::vector<std::size_t> matches;
    for (std::size_t i = 0; i < learner.act_seqs.size(); ++i) {
        const auto& seq = learner.act_seqs[i];
        if (seq.size() >= query.size() && std::equal(query.begin(), query.end(), seq.begin())) {
            matches.push_back(i);
        }
    }
    if (!matches.empty()) return matches;

    // Backoff: the last j activities appear contiguously anywhere.
    for (std::size_t j = query.size() - 1; j >= 1; --j) {
        auto tail_begin = query.end() - static_cast<std::ptrdiff_t>(j);
        for (std::size_t i = 0; i < learner.act_seqs.size(); ++i) {
            const auto& seq = learner.act_seqs[i];
            if (seq.size() < j) continue;
            auto it = std::search(seq.begin(), seq.end(), tail_begin, query.end());
            if (it != seq.end()) matches.push_back(i);
        }
        if (!matches.empty()) return matches;
    }

    // Total fallback: the whole training set.
    matches.resize(learner.train_size());
    std::iota(matches.begin(), matches.end(), std::size_t{0});
    return matches;
}

double aggregate(const std::vector<double>& values, Aggregation aggregation,
                 double mode_bin_minutes) {
    if (values.empty()) raise(ErrorKind::InvalidArgument, "cannot aggregate zero values");
    switch (aggregation) {
        case Aggregation::Mean:
            return std::accumulate(values.begin(), values.end(), 0.0) /
                   static_cast<double>(values.size());
        case Aggregation::Median: {
            std::vector<double> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            std::size_t mid = sorted.size() / 2;
            if (sorted.size() % 2 == 1) return sorted[mid];
            return (sorted[mid - 1] + sorted[mid]) / 2.0;
        }
        case Aggregation::Mode: {
            // Exact-value mode is degenerate on continuous durations: bin
            // first, then take the median within the most populous bin
            // (lowest bin wins ties).
            std::map<long long, std::vector<double>> bins;
            for (double v : values) {
                bins[static_cast<long long>(std::floor(v / mode_bin_minutes))].push_back(v);
            }
            const std::vector<double>* best = nullptr;
            std::size_t best_size = 0;
            for (const auto& [bin, members] : bins) {
                if (members.size() > best_size) {
                    best = &members;
                    best_size = members.size();
                }
            }
            return aggregate(*best, Aggregation::Median, mode_bin_minutes);
        }
        case Aggregation::None:
            break;
    }
    raise(ErrorKind::InvalidArgument, "aggregation 'none' cannot aggregate");
}

double predict_total_time(const FittedLearner& learner, const Trace& prefix) {
    if (!is_regression(learner.spec.family)) {
        raise(ErrorKind::InvalidArgument, "family ", to_string(learner.spec.family),
              " is not a regression family");
    }
    if (prefix.empty()) raise(ErrorKind::InvalidArgument, "cannot predict for an empty prefix");

    std::vector<std::size_t> chosen = learner.spec.family == BetaFamily::PathPred
                                          ? path_candidates(learner, prefix)
                                          : nearest_neighbors(learner, prefix);
    std::vector<double> values;
    values.reserve(chosen.size());
    for (std::size_t idx : chosen) values.push_back(static_cast<double>(learner.total_times[idx]));
    return aggregate(values, learner.spec.aggregation, learner.spec.mode_bin_minutes);
}

bool predict_occurrence(const FittedLearner& learner, const Trace& prefix,
                        const std::string& target) {
    if (is_regression(learner.spec.family)) {
        raise(ErrorKind::InvalidArgument, "family ", to_string(learner.spec.family),
              " is not a classification family");
    }
    if (prefix.empty()) raise(ErrorKind::InvalidArgument, "cannot predict for an empty prefix");

    switch (learner.spec.family) {
        case BetaFamily::PositiveEvidence:
            return prefix.contains_activity(target);
        case BetaFamily::StateBased: {
            // Training traces that contain the prefix's last activity; the
            // whole training set when none does.
            const std::string& last = prefix.events.back().activity;
            std::size_t containing = 0, positive = 0;
            for (std::size_t i = 0; i < learner.act_seqs.size(); ++i) {
                const auto& seq = learner.act_seqs[i];
                if (std::find(seq.begin(), seq.end(), last) == seq.end()) continue;
                ++containing;
                positive += learner.occurrence_labels[i] ? 1 : 0;
            }
            if (containing == 0) {
                containing = learner.train_size();
                positive = static_cast<std::size_t>(
                    std::count(learner.occurrence_labels.begin(), learner.occurrence_labels.end(), 1));
            }
            return 2 * positive >= containing;
        }
        case BetaFamily::ActivityBased:
        case BetaFamily::AttBased: {
            auto neighbors = nearest_neighbors(learner, prefix);
            std::size_t positive = 0;
            for (std::size_t idx : neighbors) positive += learner.occurrence_labels[idx] ? 1 : 0;
            std::size_t negative = neighbors.size() - positive;
            if (positive == negative) return learner.spec.tie_predict_true;
            return positive > negative;
        }
        default:
            raise(ErrorKind::InvalidArgument, "unhandled classification family");
    }
}

std::vector<BetaLearnerSpec> default_learners(KpiKind kpi) {
    std::vector<BetaLearnerSpec> specs;
    if (kpi == KpiKind::TotalTime) {
        for (BetaFamily family : {BetaFamily::KnnAct, BetaFamily::KnnAtt, BetaFamily::TimeSeq,
                                  BetaFamily::PathPred}) {
            for (Aggregation agg : {Aggregation::Mean, Aggregation::Median, Aggregation::Mode}) {
                specs.push_back(BetaLearnerSpec{family, agg});
            }
        }
    } else {
        for (BetaFamily family : {BetaFamily::ActivityBased, BetaFamily::StateBased,
                                  BetaFamily::AttBased, BetaFamily::PositiveEvidence}) {
            specs.push_back(BetaLearnerSpec{family, Aggregation::None});
        }
    }
    return specs;
}

}  // namespace ppm
