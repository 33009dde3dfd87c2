#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ppmkit/prompt_engine.hpp"
#include "ppmkit/stats_eval.hpp"
#include "support/fixtures.hpp"

using namespace ppm;
using namespace ppm::testing;

TEST_SUITE_BEGIN("stats_eval");

// ---------------------------------------------------------------------------
// Metrics

TEST_CASE("mae") {
    SUBCASE("perfect predictions give zero") {
        CHECK(mae({{10, 10}, {20, 20}}).value == 0);
    }
    SUBCASE("hand-computed examples") {
        CHECK(mae({{10, 12}, {20, 16}}).value == doctest::Approx(3).epsilon(1e-12));
        CHECK(mae({{7486, 9713}}).value == doctest::Approx(2227).epsilon(1e-12));
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(mae({}), Error);
    }
    SUBCASE("translation invariance and positive scaling") {
        Rng rng = make_rng(71);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::pair<double, double>> pairs;
            for (int i = 0; i < 10; ++i) {
                pairs.emplace_back(static_cast<double>(bounded(rng, 1000)),
                                   static_cast<double>(bounded(rng, 1000)));
            }
            double base = mae(pairs).value;
            std::vector<std::pair<double, double>> shifted, scaled;
            for (auto [a, p] : pairs) {
                shifted.emplace_back(a + 137.0, p + 137.0);
                scaled.emplace_back(a * 3.0, p * 3.0);
            }
            CHECK(mae(shifted).value == doctest::Approx(base).epsilon(1e-12));
            CHECK(mae(scaled).value == doctest::Approx(3.0 * base).epsilon(1e-12));
        }
    }
}

TEST_CASE("f1") {
    SUBCASE("all correct positives") {
        CHECK(f1({{true, true}, {true, true}}).value == doctest::Approx(1.0));
    }
    SUBCASE("TP=2 FP=1 FN=1 gives 2/3") {
        MetricResult result = f1({{true, true}, {true, true}, {false, true}, {true, false}});
        CHECK(result.tp == 2);
        CHECK(result.fp == 1);
        CHECK(result.fn == 1);
        CHECK(result.precision == doctest::Approx(2.0 / 3));
        CHECK(result.recall == doctest::Approx(2.0 / 3));
        CHECK(result.value == doctest::Approx(2.0 / 3).epsilon(1e-12));
    }
    SUBCASE("no positives anywhere is degenerate zero") {
        MetricResult result = f1({{false, false}, {false, false}});
        CHECK(result.value == 0);
        CHECK(result.degenerate);
    }
    SUBCASE("TP=0 with positives present is plain zero") {
        MetricResult result = f1({{true, false}, {false, true}});
        CHECK(result.value == 0);
        CHECK_FALSE(result.degenerate);
    }
    SUBCASE("matches recomputation from the confusion matrix") {
        Rng rng = make_rng(72);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::pair<bool, bool>> pairs;
            for (int i = 0; i < 20; ++i) {
                pairs.emplace_back(bounded(rng, 2) == 1, bounded(rng, 2) == 1);
            }
            MetricResult result = f1(pairs);
            double tp = 0, fp = 0, fn = 0;
            for (auto [actual, predicted] : result.per_instance_cls) {
                tp += actual && predicted;
                fp += !actual && predicted;
                fn += actual && !predicted;
            }
            double expected = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
            CHECK(result.value == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

// ---------------------------------------------------------------------------
// Wilcoxon

namespace {

/// Enumeration oracle: every sign vector is equally likely under the null.
double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
    std::vector<double> magnitudes;
    for (double d : diffs) magnitudes.push_back(std::fabs(d));
    // Average ranks, recomputed independently.
    std::vector<double> ranks(diffs.size());
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
        double less = 0, equal = 0;
        for (double other : magnitudes) {
            if (other < magnitudes[i]) ++less;
            if (other == magnitudes[i]) ++equal;
        }
        ranks[i] = less + (equal + 1) / 2.0;
    }
    double w_plus = 0, w_minus = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
        else w_minus += ranks[i];
    }
    double t_obs = std::min(w_plus, w_minus);

    std::size_t n = diffs.size();
    std::size_t below = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) w += ranks[i];
        }
        if (w <= t_obs + 1e-12) ++below;
    }
    double p = 2.0 * static_cast<double>(below) / std::pow(2.0, static_cast<double>(n));
    return std::min(1.0, p);
}

}  // namespace

TEST_CASE("wilcoxon signed-rank") {
    SUBCASE("all-positive differences at n=6 give the exact two-sided 0.03125") {
        std::vector<double> a = {10, 20, 30, 40, 50, 60};
        std::vector<double> b = {9, 18, 27, 36, 45, 54};
        TestResult result = wilcoxon_signed_rank(a, b, 0.05);
        CHECK(result.p_value == doctest::Approx(0.03125).epsilon(1e-12));
        CHECK(result.statistic == 0);
        CHECK(result.decision == Decision::Reject);
    }
    SUBCASE("identical samples are degenerate") {
        std::vector<double> a = {1, 2, 3, 4, 5, 6};
        CHECK_THROWS_AS(wilcoxon_signed_rank(a, a, 0.05), Error);
    }
    SUBCASE("fewer than five non-zero differences is an error") {
        CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4}, {2, 3, 4, 5}, 0.05), Error);
        CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {2, 3, 4, 5, 5, 6}, 0.05), Error);
    }
    SUBCASE("mismatched lengths are an error") {
        CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3}, {1, 2}, 0.05), Error);
    }
    SUBCASE("symmetric differences retain the null") {
        std::vector<double> a = {10, 20, 30, 40, 50, 60};
        std::vector<double> b = {13, 17, 35, 35, 57, 53};  // differences -3,3,-5,5,-7,7
        TestResult result = wilcoxon_signed_rank(a, b, 0.05);
        CHECK(result.p_value > 0.9);
        CHECK(result.decision == Decision::Retain);
    }
    SUBCASE("exact p matches the enumeration oracle for n <= 12") {
        Rng rng = make_rng(73);
        for (int trial = 0; trial < 200; ++trial) {
            std::size_t n = 5 + bounded(rng, 8);  // 5..12
            std::vector<double> a, b;
            for (std::size_t i = 0; i < n; ++i) {
                double base = static_cast<double>(bounded(rng, 50));
                double delta = static_cast<double>(bounded(rng, 9)) - 4.0;
                if (delta == 0) delta = 1;  // keep every pair informative
                a.push_back(base + delta);
                b.push_back(base);
            }
            std::vector<double> diffs;
            for (std::size_t i = 0; i < n; ++i) diffs.push_back(a[i] - b[i]);
            TestResult result = wilcoxon_signed_rank(a, b, 0.05);
            CHECK(result.p_value ==
                  doctest::Approx(wilcoxon_enumeration_p(diffs)).epsilon(1e-12));
        }
    }
    SUBCASE("large samples use the normal approximation sensibly") {
        Rng rng = make_rng(74);
        std::vector<double> a, b;
        for (int i = 0; i < 60; ++i) {
            double base = static_cast<double>(bounded(rng, 1000));
            a.push_back(base + 5 + static_cast<double>(bounded(rng, 10)));
            b.push_back(base);
        }
        TestResult shifted = wilcoxon_signed_rank(a, b, 0.05);
        CHECK(shifted.decision == Decision::Reject);
        CHECK(shifted.note == "normal approximation");
        CHECK(shifted.p_value >= 0);
        CHECK(shifted.p_value <= 1);
    }
}

// ---------------------------------------------------------------------------
// Friedman + Nemenyi

namespace {

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// P(studentized range of k standard normals <= q) at infinite df, by
/// Simpson integration. Oracle for the embedded critical-value table.
double range_cdf(double q, int k) {
    if (q <= 0) return 0;
    double lo = -9.0, hi = 9.0 + q;
    int steps = 6000;
    double h = (hi - lo) / steps;
    double sum = 0;
    for (int i = 0; i <= steps; ++i) {
        double z = lo + i * h;
        double phi = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
        double f = phi * std::pow(phi_cdf(z) - phi_cdf(z - q), k - 1);
        double w = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
        sum += w * f;
    }
    return k * sum * h / 3.0;
}

}  // namespace

TEST_CASE("friedman + nemenyi") {
    SUBCASE("identical columns retain the null") {
        std::vector<std::vector<double>> scores = {{1, 1}, {2, 2}, {5, 5}, {9, 9}};
        TestResult result = friedman_nemenyi(scores, 0.05);
        CHECK(result.decision == Decision::Retain);
        CHECK(result.statistic == doctest::Approx(0));
    }
    SUBCASE("an all-equal matrix is degenerate") {
        CHECK_THROWS_AS(friedman_nemenyi({{3, 3}, {3, 3}}, 0.05), Error);
    }
    SUBCASE("a strictly dominated column is rejected over ten blocks") {
        std::vector<std::vector<double>> scores;
        for (int block = 0; block < 10; ++block) {
            double base = 10.0 * block;
            scores.push_back({base + 1, base + 2});  // column 0 always wins
        }
        TestResult result = friedman_nemenyi(scores, 0.05);
        CHECK(result.decision == Decision::Reject);
        CHECK(result.pairwise_reject[0][1] == 1);
        CHECK(result.avg_ranks[0] == doctest::Approx(1.0));
        CHECK(result.avg_ranks[1] == doctest::Approx(2.0));
    }
    SUBCASE("critical difference reproduces the embedded table value") {
        std::vector<std::vector<double>> scores;
        for (int block = 0; block < 10; ++block) {
            scores.push_back({1.0 + block, 2.0 + block, 3.0 + block});
        }
        TestResult result = friedman_nemenyi(scores, 0.05);
        CHECK(result.critical_difference ==
              doctest::Approx(2.343 * std::sqrt(3.0 * 4.0 / (6.0 * 10.0))).epsilon(1e-9));
    }
    SUBCASE("embedded q values match the integration oracle to table precision") {
        for (double alpha : {0.05, 0.01, 0.001}) {
            for (std::size_t k = 2; k <= 10; ++k) {
                double q = nemenyi_q(alpha, k);
                double tail = 1.0 - range_cdf(q * std::sqrt(2.0), static_cast<int>(k));
                CHECK_MESSAGE(std::fabs(tail - alpha) < 2e-3 * std::max(1.0, q),
                              "alpha=", alpha, " k=", k, " tail=", tail);
            }
        }
    }
    SUBCASE("unsupported table lookups are errors") {
        CHECK_THROWS_AS(nemenyi_q(0.05, 11), Error);
        CHECK_THROWS_AS(nemenyi_q(0.2, 3), Error);
    }
    SUBCASE("chi-squared survival sanity") {
        CHECK(chi_squared_sf(5.991, 2) == doctest::Approx(0.05).epsilon(1e-3));
        CHECK(chi_squared_sf(0, 3) == doctest::Approx(1.0));
    }
}

TEST_CASE("significance stars") {
    CHECK(significance_stars(0.0001) == "***");
    CHECK(significance_stars(0.005) == "**");
    CHECK(significance_stars(0.03) == "*");
    CHECK(significance_stars(0.2) == "ns");
}

// ---------------------------------------------------------------------------
// Good-Turing

TEST_CASE("good_turing") {
    SUBCASE("three-family example") {
        GoodTuringEstimate est = good_turing({{"A", 3}, {"B", 1}, {"C", 1}});
        CHECK(est.total == 5);
        CHECK(est.freq_of_freq.at(1) == 2);
        CHECK(est.p0 == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(est.expected_novel(10) == doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("no singletons means no novelty") {
        GoodTuringEstimate est = good_turing({{"A", 3}, {"B", 2}});
        CHECK(est.p0 == 0);
        CHECK(est.expected_novel(100) == 0);
    }
    SUBCASE("expected_novel is linear in m") {
        GoodTuringEstimate est = good_turing({{"A", 4}, {"B", 1}, {"C", 2}});
        double unit = est.expected_novel(1);
        CHECK(est.expected_novel(10) == doctest::Approx(10 * unit).epsilon(1e-12));
        CHECK(est.expected_novel(100) == doctest::Approx(100 * unit).epsilon(1e-12));
    }
    SUBCASE("renormalized mass plus p0 is one") {
        GoodTuringEstimate est = good_turing({{"A", 3}, {"B", 1}, {"C", 1}, {"D", 2}});
        double mass = est.p0;
        for (const auto& [r, p] : est.p_star_renorm) {
            mass += static_cast<double>(est.freq_of_freq.at(r)) * p;
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("empty or zero counts are errors") {
        CHECK_THROWS_AS(good_turing({}), Error);
        CHECK_THROWS_AS(good_turing({{"A", 0}}), Error);
    }
}

// ---------------------------------------------------------------------------
// Reasoning tagger

TEST_CASE("tag_reasoning") {
    SUBCASE("attribute-filtering median reasoning tags knn_att median") {
        // The reference reply filters on an amount range and takes a median.
        LlmResponse response = parse_response(kReferenceReply, KpiKind::TotalTime);
        ReasoningTag tag = tag_reasoning(response.reasoning, KpiKind::TotalTime);
        REQUIRE(tag.tagged());
        CHECK(tag.label() == "knn_att median");
    }
    SUBCASE("empty reasoning is untagged") {
        CHECK_FALSE(tag_reasoning("").tagged());
        CHECK(tag_reasoning("").label() == "untagged");
    }
    SUBCASE("activity-count median reasoning tags knn_act median") {
        ReasoningTag tag = tag_reasoning(
            "Comparing the sequence of activities with the training cases, I select the nearest "
            "cases by activity counts. The median of these total times is 42. Median = 42.");
        CHECK(tag.label() == "knn_act median");
    }
    SUBCASE("classification cues") {
        CHECK(tag_reasoning("The target activity already occurred in this case.",
                            KpiKind::ActivityOccurrence)
                  .label() == "positive_evidence");
        CHECK(tag_reasoning("Looking at the last activity, similar states usually lead there.",
                            KpiKind::ActivityOccurrence)
                  .label() == "state_based");
    }
    SUBCASE("label round trip") {
        for (const char* label : {"knn_att median", "path_pred mode", "positive_evidence",
                                  "untagged"}) {
            CHECK(parse_tag(label).label() == label);
        }
    }
}

// ---------------------------------------------------------------------------
// Convergence

TEST_CASE("ks statistic") {
    SUBCASE("point mass versus a three-point distribution") {
        CHECK(ks_statistic({10}, {10, 20, 30}) == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(ks_statistic({20}, {10, 20, 30}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    SUBCASE("identical distributions are at distance zero") {
        CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0);
    }
    SUBCASE("disjoint supports are at distance one") {
        CHECK(ks_statistic({1, 2}, {10, 20}) == doctest::Approx(1.0));
    }
}

TEST_CASE("convergence curve") {
    Rng rng = make_rng(75);
    LogSchema schema = random_log_schema();
    EventLog log = random_log(rng, schema, {.n_traces = 40});

    SUBCASE("full-log sample is at distance zero") {
        auto curve = convergence_curve(log, schema, {40}, 9);
        REQUIRE(curve.size() == 1);
        CHECK(curve[0].second == 0);
    }
    SUBCASE("deterministic under a fixed seed and monotone sampling") {
        auto a = convergence_curve(log, schema, {5, 10, 20, 40}, 9);
        auto b = convergence_curve(log, schema, {5, 10, 20, 40}, 9);
        CHECK(a == b);
    }
    SUBCASE("grid beyond the log size is an error") {
        CHECK_THROWS_AS(convergence_curve(log, schema, {41}, 9), Error);
    }
}

TEST_SUITE_END();
