#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "irtkit/annotations.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"
#include "support.hpp"

using namespace irtkit;

namespace {

// Annotation set with the given per-item category counts; rater k labels
// item i with the category of its k-th vote.
std::vector<Annotation> from_counts(const std::vector<std::vector<int>>& counts,
                                    const std::vector<std::string>& categories) {
    std::vector<Annotation> out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        int rater = 0;
        for (std::size_t c = 0; c < counts[i].size(); ++c) {
            for (int k = 0; k < counts[i][c]; ++k) {
                out.push_back({"r" + std::to_string(rater++), "i" + std::to_string(i), categories[c]});
            }
        }
    }
    return out;
}

// Textbook Fleiss' kappa for equal rater counts.
double textbook_kappa(const std::vector<std::vector<int>>& counts) {
    const double n = std::accumulate(counts[0].begin(), counts[0].end(), 0.0);
    const double items = static_cast<double>(counts.size());
    std::vector<double> pj(counts[0].size(), 0.0);
    double pbar = 0.0;
    for (const auto& row : counts) {
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            s += row[c] * row[c];
            pj[c] += row[c];
        }
        pbar += (s - n) / (n * (n - 1));
    }
    pbar /= items;
    double pe = 0.0;
    for (double v : pj) pe += (v / (items * n)) * (v / (items * n));
    return (pbar - pe) / (1 - pe);
}

}  // namespace

TEST_CASE("binarize_sentiment follows the binning rule") {
    CHECK(binarize_sentiment("very-negative") == "negative");
    CHECK(binarize_sentiment("negative") == "negative");
    CHECK(binarize_sentiment("neutral") == "positive");
    CHECK(binarize_sentiment("positive") == "positive");
    CHECK(binarize_sentiment("very-positive") == "positive");
    for (const auto& l : binary_sentiment_alphabet()) CHECK(binarize_sentiment(binarize_sentiment(l)) == l);
    CHECK_THROWS_AS(binarize_sentiment("entailment"), ValidationError);
}

TEST_CASE("label normalization and aliases") {
    CHECK(normalize_label("  Very Positive ") == "very-positive");
    CHECK(normalize_label("very_negative") == "very-negative");
    const LabelAliases aliases{{"entails", "entailment"}};
    CHECK(normalize_label("Entails", aliases) == "entailment");
    const AnnotationSet set(Task::NLI, {{"w", "i", "ENTAILS"}}, aliases);
    CHECK(set.records()[0].label == "entailment");
    CHECK_THROWS_AS(AnnotationSet(Task::NLI, {{"w", "i", "maybe"}}), ValidationError);
    CHECK_THROWS_AS(AnnotationSet(Task::SA, {{"w", "i", "neutral"}, {"w", "i", "neutral"}}), ValidationError);
    CHECK_THROWS_AS(parse_task("qa"), ValidationError);
}

TEST_CASE("grade: equality with gold and binning before comparison") {
    const AnnotationSet nli(Task::NLI, {{"w1", "i1", "entailment"}});
    GoldLabels gold;
    gold.task = Task::NLI;
    gold.labels = {{"i1", "entailment"}};
    CHECK(grade(nli, gold).at(0, 0) == 1);

    const auto sa_gold = GoldLabels::parse_csv("item_id,gold_label\ns1,negative\n", "g.csv", Task::SA);
    CHECK(sa_gold.binary);
    const AnnotationSet sa(Task::SA, {{"w1", "s1", "neutral"}, {"w2", "s1", "very negative"}});
    const auto m = grade(sa, sa_gold);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(1, 0) == 1);
}

TEST_CASE("grade: 3 workers x 2 items against a hand-graded table") {
    const AnnotationSet set(Task::NLI, {{"a", "p", "entailment"},
                                        {"a", "h", "neutral"},
                                        {"b", "p", "contradiction"},
                                        {"b", "h", "neutral"},
                                        {"c", "h", "entailment"}});
    GoldLabels gold;
    gold.labels = {{"p", "entailment"}, {"h", "neutral"}};
    const auto m = grade(set, gold);
    CHECK(m.respondent_ids() == std::vector<std::string>{"a", "b", "c"});
    CHECK(m.item_ids() == std::vector<std::string>{"p", "h"});
    // a: 1 1   b: 0 1   c: - 0
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(2, 0) == ResponseMatrix::kMissing);
    CHECK(m.at(2, 1) == 0);
}

TEST_CASE("grade: example-item fixtures reproduce the graded tables") {
    for (auto [task, stem] : {std::pair{Task::NLI, "nli"}, {Task::SA, "sa"}}) {
        const auto annotations =
            AnnotationSet::read_csv(support::fixture(std::string(stem) + "_annotations.csv"), task);
        const auto gold = GoldLabels::read_csv(support::fixture(std::string(stem) + "_gold.csv"), task);
        std::ostringstream out;
        grade(annotations, gold).write_long_csv(out);
        CHECK(out.str() == read_text_file(support::fixture(std::string(stem) + "_graded.csv")));
    }
}

TEST_CASE("grade: items without gold are rejected") {
    const AnnotationSet set(Task::NLI, {{"a", "p", "entailment"}, {"a", "q", "neutral"}});
    GoldLabels gold;
    gold.labels = {{"p", "entailment"}};
    CHECK_THROWS_WITH_AS(grade(set, gold), doctest::Contains("q"), ValidationError);
}

TEST_CASE("fleiss_kappa: perfect agreement is 1") {
    const auto cats = label_alphabet(Task::NLI);
    const AnnotationSet set(Task::NLI, from_counts({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}}, cats));
    CHECK(fleiss_kappa(set, cats).kappa == 1.0);
}

TEST_CASE("fleiss_kappa: 3x3 two-category example") {
    const auto set = AnnotationSet::read_csv(support::fixture("fleiss_3x3.csv"), Task::SA);
    const auto r = fleiss_kappa(set, binary_sentiment_alphabet());
    // P-bar = 7/9, P-e = 41/81, kappa = (7/9 - 41/81) / (40/81) = 0.55
    CHECK(r.kappa == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(r.n_items == 3);
    CHECK(r.min_raters == 3);
    CHECK(r.max_raters == 3);
}

TEST_CASE("fleiss_kappa agrees with the textbook formula on random balanced tables") {
    std::mt19937_64 rng(77);
    const auto cats = label_alphabet(Task::SA);
    for (int rep = 0; rep < 100; ++rep) {
        const int items = 2 + static_cast<int>(rng() % 15);
        const int raters = 2 + static_cast<int>(rng() % 8);
        std::vector<std::vector<int>> counts(items, std::vector<int>(cats.size(), 0));
        for (auto& row : counts) {
            for (int k = 0; k < raters; ++k) ++row[rng() % cats.size()];
        }
        const AnnotationSet set(Task::SA, from_counts(counts, cats));
        double expected = 0.0;
        try {
            expected = textbook_kappa(counts);
        } catch (...) {
        }
        if (!std::isfinite(expected)) continue;
        CHECK(fleiss_kappa(set, cats).kappa == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("fleiss_kappa is invariant under relabeling, item order and rater order") {
    std::mt19937_64 rng(5);
    const auto cats = label_alphabet(Task::SA);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Annotation> records;
        for (int i = 0; i < 12; ++i) {
            const int n = 2 + static_cast<int>(rng() % 5);
            for (int k = 0; k < n; ++k) {
                records.push_back({"w" + std::to_string(k), "i" + std::to_string(i), cats[rng() % cats.size()]});
            }
        }
        const double base = fleiss_kappa(AnnotationSet(Task::SA, records), cats).kappa;

        auto perm = cats;
        std::shuffle(perm.begin(), perm.end(), rng);
        auto relabeled = records;
        for (auto& r : relabeled) {
            r.label = perm[std::find(cats.begin(), cats.end(), r.label) - cats.begin()];
        }
        CHECK(fleiss_kappa(AnnotationSet(Task::SA, relabeled), cats).kappa == base);
        // Category order passed to the function is a relabeling too.
        CHECK(fleiss_kappa(AnnotationSet(Task::SA, records), perm).kappa == base);

        auto shuffled = records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(fleiss_kappa(AnnotationSet(Task::SA, shuffled), cats).kappa == base);
    }
}

TEST_CASE("fleiss_kappa: unequal rater counts, exclusions and errors") {
    const auto cats = binary_sentiment_alphabet();
    // Per-item n_i: (2,0) n=2 -> P=1; (1,2) n=3 -> P=1/3; single-rater item excluded.
    const AnnotationSet set(Task::SA, {{"a", "x", "negative"},
                                       {"b", "x", "negative"},
                                       {"a", "y", "negative"},
                                       {"b", "y", "positive"},
                                       {"c", "y", "positive"},
                                       {"a", "z", "positive"}});
    const auto r = fleiss_kappa(set, cats);
    CHECK(r.excluded_items == std::vector<std::string>{"z"});
    CHECK(r.n_items == 2);
    CHECK(r.min_raters == 2);
    CHECK(r.max_raters == 3);
    // pbar = 2/3; marginals 3/5, 2/5 -> pe = 13/25
    CHECK(r.kappa == doctest::Approx((2.0 / 3.0 - 13.0 / 25.0) / (1.0 - 13.0 / 25.0)).epsilon(1e-14));

    const AnnotationSet one_category(Task::SA, {{"a", "x", "negative"}, {"b", "x", "negative"}});
    CHECK_THROWS_AS(fleiss_kappa(one_category, cats), NumericalError);
    const AnnotationSet lonely(Task::SA, {{"a", "x", "negative"}});
    CHECK_THROWS_AS(fleiss_kappa(lonely, cats), ValidationError);
    const AnnotationSet five(Task::SA, {{"a", "x", "very-negative"}, {"b", "x", "negative"}});
    CHECK_THROWS_AS(fleiss_kappa(five, cats), ValidationError);
}

TEST_CASE("sentiment kappa after binarization uses two categories") {
    const auto set = AnnotationSet::read_csv(support::fixture("sa_annotations.csv"), Task::SA);
    const auto five = fleiss_kappa(set, label_alphabet(Task::SA));
    const auto two = fleiss_kappa(set.binarized(), binary_sentiment_alphabet());
    CHECK(five.kappa != two.kappa);
    CHECK(two.kappa <= 1.0);
    CHECK_THROWS_AS(AnnotationSet(Task::NLI, {{"a", "x", "neutral"}}).binarized(), ValidationError);
}

TEST_CASE("per-stratum kappa") {
    const auto cats = binary_sentiment_alphabet();
    const AnnotationSet set(Task::SA, from_counts({{3, 0}, {0, 3}, {2, 1}, {1, 2}}, cats));
    const auto by = fleiss_kappa_by_stratum(set, cats, {{"i0", "easy"}, {"i1", "easy"}, {"i2", "hard"}, {"i3", "hard"}});
    REQUIRE(by.size() == 2);
    CHECK(by.at("easy").kappa == 1.0);
    CHECK(by.at("hard").kappa == doctest::Approx(textbook_kappa({{2, 1}, {1, 2}})).epsilon(1e-12));
}
