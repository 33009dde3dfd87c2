#include "ppmkit/stats_eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "ppmkit/csv.hpp"
#include "ppmkit/rng.hpp"

namespace ppm {

MetricResult mae(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) raise(ErrorKind::InvalidArgument, "mae of an empty sample");
    double sum = 0;
    for (const auto& [actual, predicted] : pairs) {
        if (!std::isfinite(actual) || !std::isfinite(predicted)) {
            raise(ErrorKind::InvalidArgument, "mae requires finite values");
        }
        sum += std::fabs(actual - predicted);
    }
    MetricResult result;
    result.metric = MetricKind::Mae;
    result.n = pairs.size();
    result.value = sum / static_cast<double>(pairs.size());
    result.per_instance_reg = pairs;
    return result;
}

MetricResult f1(const std::vector<std::pair<bool, bool>>& pairs) {
    if (pairs.empty()) raise(ErrorKind::InvalidArgument, "f1 of an empty sample");
    MetricResult result;
    result.metric = MetricKind::F1;
    result.n = pairs.size();
    result.per_instance_cls = pairs;
    for (const auto& [actual, predicted] : pairs) {
        if (actual && predicted) ++result.tp;
        else if (!actual && predicted) ++result.fp;
        else if (actual && !predicted) ++result.fn;
        else ++result.tn;
    }
    if (result.tp == 0) {
        result.value = 0;
        result.precision = 0;
        result.recall = 0;
        result.degenerate = result.fp == 0 && result.fn == 0;
        return result;
    }
    result.precision = static_cast<double>(result.tp) / static_cast<double>(result.tp + result.fp);
    result.recall = static_cast<double>(result.tp) / static_cast<double>(result.tp + result.fn);
    result.value = 2 * result.precision * result.recall / (result.precision + result.recall);
    return result;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

namespace {

/// Average ranks of |values|, ties averaged. Returns ranks aligned with the
/// input order.
std::vector<double> average_ranks(const std::vector<double>& magnitudes) {
    std::vector<std::size_t> order(magnitudes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return magnitudes[a] < magnitudes[b];
    });
    std::vector<double> ranks(magnitudes.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// P(W+ <= threshold) under the exact null: every sign vector equally
/// likely. Dynamic program over doubled ranks (average ranks are
/// half-integers, so 2r is an integer).
double exact_cdf_wplus(const std::vector<double>& ranks, double threshold) {
    long long total2 = 0;
    std::vector<long long> ranks2;
    ranks2.reserve(ranks.size());
    for (double r : ranks) {
        ranks2.push_back(std::llround(2.0 * r));
        total2 += ranks2.back();
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long long reach = 0;
    for (long long r2 : ranks2) {
        reach += r2;
        for (long long s = reach; s >= r2; --s) {
            count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r2)];
        }
    }
    long long cap = std::llround(2.0 * threshold + 1e-9);
    double below = 0;
    for (long long s = 0; s <= std::min(cap, total2); ++s) {
        below += count[static_cast<std::size_t>(s)];
    }
    return below / std::pow(2.0, static_cast<double>(ranks.size()));
}

}  // namespace

TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                double alpha) {
    if (a.size() != b.size()) {
        raise(ErrorKind::InvalidArgument, "paired samples differ in length: ", a.size(), " vs ",
              b.size());
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0) diffs.push_back(d);
    }
    if (diffs.empty()) {
        raise(ErrorKind::Degenerate, "all paired differences are zero; no test decision");
    }
    if (diffs.size() < 5) {
        raise(ErrorKind::Degenerate, "only ", diffs.size(),
              " non-zero differences; at least 5 are required");
    }

    std::vector<double> magnitudes;
    magnitudes.reserve(diffs.size());
    for (double d : diffs) magnitudes.push_back(std::fabs(d));
    std::vector<double> ranks = average_ranks(magnitudes);

    double w_plus = 0, w_minus = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
        else w_minus += ranks[i];
    }
    double t_stat = std::min(w_plus, w_minus);
    std::size_t n = diffs.size();

    TestResult result;
    result.test = "wilcoxon_signed_rank";
    result.statistic = t_stat;
    result.alpha = alpha;

    if (n <= 25) {
        result.p_value = std::min(1.0, 2.0 * exact_cdf_wplus(ranks, t_stat));
        result.note = "exact";
    } else {
        // Normal approximation with tie correction on the variance.
        double mean = static_cast<double>(n) * (n + 1) / 4.0;
        double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 24.0;
        std::vector<double> sorted = magnitudes;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            double t = static_cast<double>(j - i + 1);
            if (t > 1) var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        if (var <= 0) raise(ErrorKind::Degenerate, "tie-corrected variance is zero");
        double z = (w_plus - mean) / std::sqrt(var);
        result.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
        result.note = "normal approximation";
    }
    result.decision = result.p_value < alpha ? Decision::Reject : Decision::Retain;
    return result;
}

// ---------------------------------------------------------------------------
// Friedman + Nemenyi

namespace {

// Critical values of the studentized range at infinite degrees of freedom,
// divided by sqrt(2); k = 2..10.
constexpr double kNemenyiQ05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
constexpr double kNemenyiQ01[] = {2.576, 2.913, 3.113, 3.255, 3.364, 3.452, 3.526, 3.590, 3.646};
constexpr double kNemenyiQ001[] = {3.291, 3.580, 3.754, 3.878, 3.973, 4.052, 4.117, 4.174, 4.224};

/// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) raise(ErrorKind::InvalidArgument, "gamma_p domain error");
    if (x == 0) return 0;
    double lg = std::lgamma(a);
    if (x < a + 1) {
        // Series expansion.
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Continued fraction (Lentz).
    double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (i - a);
        b += 2;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1 - q;
}

}  // namespace

double chi_squared_sf(double x, double df) {
    if (x <= 0) return 1;
    return 1 - gamma_p(df / 2.0, x / 2.0);
}

double nemenyi_q(double alpha, std::size_t k) {
    if (k < 2 || k > 10) {
        raise(ErrorKind::InvalidArgument, "Nemenyi table covers 2..10 groups, got ", k);
    }
    const double* table = nullptr;
    if (alpha == 0.05) table = kNemenyiQ05;
    else if (alpha == 0.01) table = kNemenyiQ01;
    else if (alpha == 0.001) table = kNemenyiQ001;
    else raise(ErrorKind::InvalidArgument, "Nemenyi table covers alpha in {0.05, 0.01, 0.001}");
    return table[k - 2];
}

std::string significance_stars(double p_value) {
    if (p_value < 0.001) return "***";
    if (p_value < 0.01) return "**";
    if (p_value < 0.05) return "*";
    return "ns";
}

TestResult friedman_nemenyi(const std::vector<std::vector<double>>& scores, double alpha) {
    std::size_t n_blocks = scores.size();
    if (n_blocks < 2) raise(ErrorKind::InvalidArgument, "need at least 2 blocks");
    std::size_t k = scores.front().size();
    if (k < 2) raise(ErrorKind::InvalidArgument, "need at least 2 groups");
    for (const auto& row : scores) {
        if (row.size() != k) raise(ErrorKind::InvalidArgument, "ragged score matrix");
    }
    bool all_equal = true;
    for (const auto& row : scores) {
        for (double v : row) {
            if (v != scores[0][0]) all_equal = false;
        }
    }
    if (all_equal) {
        raise(ErrorKind::Degenerate, "all scores are equal; ranks are uninformative");
    }

    // Within-block average ranks, ascending scores rank first.
    std::vector<double> rank_sum(k, 0.0);
    for (const auto& row : scores) {
        std::vector<double> ranks = average_ranks(row);
        for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
    }
    TestResult result;
    result.test = "friedman_nemenyi";
    result.alpha = alpha;
    result.avg_ranks.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        result.avg_ranks[j] = rank_sum[j] / static_cast<double>(n_blocks);
    }

    double nk = static_cast<double>(n_blocks);
    double kk = static_cast<double>(k);
    double sum_r2 = 0;
    for (double r : result.avg_ranks) sum_r2 += r * r;
    result.statistic = 12.0 * nk / (kk * (kk + 1)) * (sum_r2 - kk * (kk + 1) * (kk + 1) / 4.0);
    result.p_value = chi_squared_sf(result.statistic, kk - 1);

    result.critical_difference = nemenyi_q(alpha, k) * std::sqrt(kk * (kk + 1) / (6.0 * nk));

    result.pairwise_p.assign(k, std::vector<double>(k, 1.0));
    result.pairwise_reject.assign(k, std::vector<int>(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            double gap = std::fabs(result.avg_ranks[i] - result.avg_ranks[j]);
            // Smallest embedded level whose critical difference the gap
            // still exceeds: a conservative upper bound on the pairwise p.
            double p_upper = 1.0;
            for (double level : {0.05, 0.01, 0.001}) {
                double cd = nemenyi_q(level, k) * std::sqrt(kk * (kk + 1) / (6.0 * nk));
                if (gap > cd) p_upper = level;
            }
            result.pairwise_p[i][j] = p_upper;
            result.pairwise_reject[i][j] = gap > result.critical_difference ? 1 : 0;
        }
    }

    bool any_reject = false;
    for (std::size_t i = 0; i < k && !any_reject; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (result.pairwise_reject[i][j]) {
                any_reject = true;
                break;
            }
        }
    }
    result.decision =
        (result.p_value < alpha && any_reject) ? Decision::Reject : Decision::Retain;
    return result;
}

// ---------------------------------------------------------------------------
// Good-Turing

GoodTuringEstimate good_turing(const std::map<std::string, std::size_t>& counts) {
    if (counts.empty()) raise(ErrorKind::InvalidArgument, "good_turing of empty counts");
    GoodTuringEstimate est;
    est.counts = counts;
    for (const auto& [family, count] : counts) {
        if (count == 0) {
            raise(ErrorKind::InvalidArgument, "family '", family, "' has a zero count");
        }
        est.total += count;
        est.freq_of_freq[count] += 1;
    }

    double n = static_cast<double>(est.total);
    for (const auto& [r, n_r] : est.freq_of_freq) {
        auto next = est.freq_of_freq.find(r + 1);
        double n_r1 = next == est.freq_of_freq.end() ? 0.0 : static_cast<double>(next->second);
        est.p_star[r] = (static_cast<double>(r) + 1.0) * n_r1 / (static_cast<double>(n_r) * n);
    }
    auto singletons = est.freq_of_freq.find(1);
    est.p0 = singletons == est.freq_of_freq.end() ? 0.0
                                                  : static_cast<double>(singletons->second) / n;

    // Rescale the observed mass to (1 - p0) so the estimate is a
    // distribution; raw Good-Turing alone does not sum to one.
    double observed_mass = 0;
    for (const auto& [r, p] : est.p_star) {
        observed_mass += static_cast<double>(est.freq_of_freq.at(r)) * p;
    }
    for (const auto& [r, p] : est.p_star) {
        est.p_star_renorm[r] = observed_mass > 0 ? p * (1.0 - est.p0) / observed_mass : 0.0;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Reasoning tagger

namespace {

std::string lowercase(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int count_cues(const std::string& haystack, std::initializer_list<const char*> cues) {
    int hits = 0;
    for (const char* cue : cues) {
        if (haystack.find(cue) != std::string::npos) ++hits;
    }
    return hits;
}

}  // namespace

std::string ReasoningTag::label() const {
    if (!family) return "untagged";
    if (is_regression(*family)) return to_string(*family) + " " + to_string(aggregation);
    return to_string(*family);
}

ReasoningTag parse_tag(const std::string& label) {
    ReasoningTag tag;
    if (label.empty() || label == "untagged") return tag;
    auto space = label.find(' ');
    if (space == std::string::npos) {
        tag.family = parse_family(label);
        return tag;
    }
    tag.family = parse_family(label.substr(0, space));
    tag.aggregation = parse_aggregation(label.substr(space + 1));
    return tag;
}

ReasoningTag tag_reasoning(const std::string& reasoning, std::optional<KpiKind> kpi_hint) {
    ReasoningTag tag;
    if (reasoning.empty()) return tag;
    std::string text = lowercase(reasoning);

    Aggregation agg = Aggregation::None;
    if (text.find("median") != std::string::npos) agg = Aggregation::Median;
    else if (count_cues(text, {"mean", "average"}) > 0) agg = Aggregation::Mean;
    else if (count_cues(text, {"mode", "most common", "most frequent"}) > 0) agg = Aggregation::Mode;

    bool regression = kpi_hint ? *kpi_hint == KpiKind::TotalTime : agg != Aggregation::None;

    if (regression) {
        // A regression tag needs an aggregation cue to pin the learner.
        if (agg == Aggregation::None) return tag;
        struct Candidate {
            BetaFamily family;
            int score;
        };
        std::vector<Candidate> candidates = {
            {BetaFamily::KnnAtt,
             count_cues(text, {"in a range around", "similar characteristics", "filter for similar",
                               "attribute", "requested amount", "similar values"})},
            {BetaFamily::KnnAct,
             count_cues(text, {"sequence of activities", "similar activities", "activity counts",
                               "same activities", "neighbors by activity",
                               "neighbours by activity", "activity sequence"})},
            {BetaFamily::TimeSeq,
             count_cues(text, {"elapsed", "temporal pattern", "time sequence", "timing",
                               "cumulative times", "pace"})},
            {BetaFamily::PathPred,
             count_cues(text, {"path", "continuation", "extend the", "future activities",
                               "remaining activities", "complete the sequence"})},
        };
        const Candidate* best = nullptr;
        for (const auto& candidate : candidates) {
            if (candidate.score > 0 && (!best || candidate.score > best->score)) {
                best = &candidate;
            }
        }
        if (!best) return tag;
        tag.family = best->family;
        tag.aggregation = agg;
        return tag;
    }

    struct Candidate {
        BetaFamily family;
        int score;
    };
    std::vector<Candidate> candidates = {
        {BetaFamily::PositiveEvidence,
         count_cues(text, {"already occurred", "already happened", "already executed",
                           "has occurred", "already in the trace"})},
        {BetaFamily::StateBased,
         count_cues(text, {"last activity", "last event", "current state", "latest activity"})},
        {BetaFamily::AttBased,
         count_cues(text, {"attribute", "similar characteristics", "in a range around"})},
        {BetaFamily::ActivityBased,
         count_cues(text, {"sequence of activities", "similar activities", "activity counts",
                           "activity sequence"})},
    };
    const Candidate* best = nullptr;
    for (const auto& candidate : candidates) {
        if (candidate.score > 0 && (!best || candidate.score > best->score)) {
            best = &candidate;
        }
    }
    if (best) tag.family = best->family;
    return tag;
}

std::map<std::string, ReasoningTag> read_annotation_sidecar(const std::string& path) {
    CsvTable table = read_csv_file(path);
    int col_case = table.column("case_id");
    int col_family = table.column("family");
    if (col_case < 0 || col_family < 0) {
        raise(ErrorKind::Schema, path, ": expected header columns 'case_id' and 'family'");
    }
    std::map<std::string, ReasoningTag> annotations;
    for (const auto& row : table.rows) {
        annotations[row[col_case]] = parse_tag(row[col_family]);
    }
    return annotations;
}

// ---------------------------------------------------------------------------
// Convergence

double ks_statistic(std::vector<double> sample, std::vector<double> reference) {
    if (sample.empty() || reference.empty()) {
        raise(ErrorKind::InvalidArgument, "ks_statistic of an empty distribution");
    }
    std::sort(sample.begin(), sample.end());
    std::sort(reference.begin(), reference.end());
    double n1 = static_cast<double>(sample.size());
    double n2 = static_cast<double>(reference.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < sample.size() && j < reference.size()) {
        double x = std::min(sample[i], reference[j]);
        while (i < sample.size() && sample[i] <= x) ++i;
        while (j < reference.size() && reference[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    return d;
}

std::vector<std::pair<std::size_t, double>> convergence_curve(
    const EventLog& log, const LogSchema& schema, const std::vector<std::size_t>& grid,
    std::uint64_t seed) {
    std::vector<double> all;
    all.reserve(log.size());
    for (const auto& trace : log.traces) {
        all.push_back(kpi_as_double(kpi_value(trace, schema)));
    }

    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed);
    shuffle(order, rng);

    std::vector<std::pair<std::size_t, double>> curve;
    for (std::size_t n : grid) {
        if (n == 0 || n > all.size()) {
            raise(ErrorKind::InvalidArgument, "grid count ", n, " outside 1..", all.size());
        }
        std::vector<double> sample;
        sample.reserve(n);
        for (std::size_t i = 0; i < n; ++i) sample.push_back(all[order[i]]);
        curve.emplace_back(n, ks_statistic(std::move(sample), all));
    }
    return curve;
}

}  // namespace ppm
