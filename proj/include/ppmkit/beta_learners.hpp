#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ppmkit/event_log.hpp"

namespace ppm {

/// Predictor families distilled from recurring LLM reasoning patterns.
/// The first four are regression families (total time, with an aggregation
/// function); the last four are classification families (activity
/// occurrence).
enum class BetaFamily {
    KnnAct,
    KnnAtt,
    TimeSeq,
    PathPred,
    ActivityBased,
    StateBased,
    AttBased,
    PositiveEvidence,
};

enum class Aggregation { None, Mean, Median, Mode };

bool is_regression(BetaFamily family);
std::string to_string(BetaFamily family);
std::string to_string(Aggregation aggregation);
BetaFamily parse_family(const std::string& text);
Aggregation parse_aggregation(const std::string& text);

struct BetaLearnerSpec {
    BetaFamily family = BetaFamily::KnnAct;
    Aggregation aggregation = Aggregation::None;
    /// Neighbour count; 0 means min(10, |train|).
    int k = 0;
    /// Bin width for mode aggregation over continuous durations.
    double mode_bin_minutes = 60.0;
    /// Split votes in classification predict true (target activities are
    /// flagged as high cost, so recall is preferred).
    bool tie_predict_true = true;

    /// Display id, e.g. "knn_act median" or "positive_evidence".
    std::string id() const;
    void validate() const;
};

/// Immutable per-family training index.
struct FittedLearner {
    BetaLearnerSpec spec;
    LogSchema schema;
    std::vector<std::string> alphabet;  // sorted activities of the training log

    // One row per training trace, in log order.
    std::vector<std::vector<double>> act_counts;      // |alphabet| + 1 (OTHER bucket)
    std::vector<std::vector<AttributeValue>> attr_rows;
    std::vector<std::vector<Minutes>> elapsed_seqs;
    std::vector<std::vector<std::string>> act_seqs;
    std::vector<Minutes> total_times;
    std::vector<char> occurrence_labels;

    // Min/max per global attribute over training, for min-max scaling.
    std::vector<double> attr_min;
    std::vector<double> attr_max;

    std::size_t train_size() const { return total_times.size(); }
    int effective_k() const;
};

FittedLearner fit(const BetaLearnerSpec& spec, const EventLog& train, const LogSchema& schema);

/// Activity-count vector of a trace over the learner's alphabet, with the
/// trailing OTHER bucket for unseen activities.
std::vector<double> activity_count_vector(const FittedLearner& learner, const Trace& trace);

/// Family distances, also used by the exhaustive-scan test oracles.
double activity_distance(const FittedLearner& learner, const std::vector<double>& query,
                         std::size_t train_index);
double attribute_distance(const FittedLearner& learner,
                          const std::vector<AttributeValue>& query, std::size_t train_index);
double time_seq_distance(const FittedLearner& learner, const std::vector<Minutes>& query,
                         std::size_t train_index);

/// Indices of the k nearest training traces for the learner's distance,
/// ordered by (distance, training index) ascending. Defined for the kNN
/// families (knn_act, knn_att, time_seq, activity_based, att_based).
std::vector<std::size_t> nearest_neighbors(const FittedLearner& learner, const Trace& prefix);

/// Candidate set of path_pred: training traces whose activity sequence
/// starts with the prefix's sequence, backing off to the longest matched
/// activity suffix, then to the whole training set.
std::vector<std::size_t> path_candidates(const FittedLearner& learner, const Trace& prefix);

double aggregate(const std::vector<double>& values, Aggregation aggregation,
                 double mode_bin_minutes);

/// Predicted total time in minutes for a running prefix.
double predict_total_time(const FittedLearner& learner, const Trace& prefix);

/// Predicted occurrence of the target activity for a running prefix.
bool predict_occurrence(const FittedLearner& learner, const Trace& prefix,
                        const std::string& target);

/// The full default set: 12 regression learners for total time, 4
/// classification learners for activity occurrence.
std::vector<BetaLearnerSpec> default_learners(KpiKind kpi);

}  // namespace ppm
