#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppmkit/beta_learners.hpp"
#include "ppmkit/event_log.hpp"

namespace ppm {

enum class MetricKind { Mae, F1 };

struct MetricResult {
    MetricKind metric = MetricKind::Mae;
    double value = 0;
    std::size_t n = 0;
    /// Set when the value follows a convention rather than the formula
    /// (e.g. F1 with no true positives).
    bool degenerate = false;

    // F1 companions.
    double precision = 0;
    double recall = 0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::vector<std::pair<double, double>> per_instance_reg;  // (actual, predicted)
    std::vector<std::pair<bool, bool>> per_instance_cls;
};

/// Mean absolute error over (actual, predicted) pairs, in minutes.
MetricResult mae(const std::vector<std::pair<double, double>>& pairs);

/// F1 over (actual, predicted) label pairs. F1 = 0 when TP = 0, flagged
/// degenerate when there are neither positive predictions nor positive
/// actuals.
MetricResult f1(const std::vector<std::pair<bool, bool>>& pairs);

enum class Decision { Reject, Retain };

struct TestResult {
    std::string test;
    double statistic = 0;
    double p_value = 1;
    double alpha = 0.05;
    Decision decision = Decision::Retain;
    bool degenerate = false;
    std::string note;

    // Friedman/Nemenyi extras.
    std::vector<double> avg_ranks;
    double critical_difference = 0;
    /// Upper bounds on pairwise p-values: the smallest embedded alpha level
    /// at which the rank difference exceeds the critical difference
    /// (1.0 when none does).
    std::vector<std::vector<double>> pairwise_p;
    std::vector<std::vector<int>> pairwise_reject;  // at the requested alpha
};

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; at least 5 non-zero differences are required. Ties get
/// average ranks. Exact p by enumeration of the sign distribution for
/// n <= 25, normal approximation with tie correction above. The statistic
/// is T = min(W+, W-).
TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                double alpha = 0.05);

/// Friedman test over a blocks x groups score matrix (average ranks on
/// ties), with Nemenyi post-hoc pairwise comparisons: reject when the
/// average-rank difference exceeds CD = q_alpha * sqrt(k(k+1) / (6N)).
TestResult friedman_nemenyi(const std::vector<std::vector<double>>& scores, double alpha = 0.05);

/// Critical value q_alpha for k groups (infinite degrees of freedom,
/// already divided by sqrt(2)), from the embedded tables for
/// alpha in {0.05, 0.01, 0.001} and k <= 10.
double nemenyi_q(double alpha, std::size_t k);

/// Stars for a p-value: *** < 0.001, ** < 0.01, * < 0.05, else "ns".
std::string significance_stars(double p_value);

/// Survival function of the chi-square distribution.
double chi_squared_sf(double x, double df);

struct GoodTuringEstimate {
    std::map<std::string, std::size_t> counts;      // family -> observations
    std::size_t total = 0;                          // N
    std::map<std::size_t, std::size_t> freq_of_freq;  // r -> N_r
    /// Raw smoothed probabilities P*(r) = (r+1) N_{r+1} / (N_r N).
    std::map<std::size_t, double> p_star;
    /// P*(r) rescaled so observed mass plus p0 sums to one.
    std::map<std::size_t, double> p_star_renorm;
    double p0 = 0;  // N_1 / N

    double expected_novel(double m) const { return m * p0; }
};

/// Good-Turing frequency estimation over per-family observation counts.
/// The raw estimator does not sum to one; p_star_renorm applies a simple
/// rescaling of the observed mass to (1 - p0).
GoodTuringEstimate good_turing(const std::map<std::string, std::size_t>& counts);

struct ReasoningTag {
    std::optional<BetaFamily> family;
    Aggregation aggregation = Aggregation::None;

    bool tagged() const { return family.has_value(); }
    /// "knn_att median", "positive_evidence", or "untagged".
    std::string label() const;
};

/// Rule-based tagger assigning a beta-learner family to a reasoning text by
/// keyword cues. A KPI hint restricts the candidate families; without one,
/// an aggregation cue implies the regression families. Unmatched text is
/// untagged.
ReasoningTag tag_reasoning(const std::string& reasoning,
                           std::optional<KpiKind> kpi_hint = std::nullopt);

/// Parses a tag label produced by ReasoningTag::label().
ReasoningTag parse_tag(const std::string& label);

/// Two-column sidecar CSV (case_id, family) with manual annotations that
/// override the tagger.
std::map<std::string, ReasoningTag> read_annotation_sidecar(const std::string& path);

/// Two-sample Kolmogorov-Smirnov statistic between empirical distributions.
double ks_statistic(std::vector<double> sample, std::vector<double> reference);

/// For each n in the grid: KS distance between the KPI distribution of the
/// first n traces of a seeded shuffle and the full-log KPI distribution.
/// The sample is monotone: each n extends the previous one.
std::vector<std::pair<std::size_t, double>> convergence_curve(
    const EventLog& log, const LogSchema& schema, const std::vector<std::size_t>& grid,
    std::uint64_t seed);

}  // namespace ppm
