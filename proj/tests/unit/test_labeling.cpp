#include "metasum/labeling.hpp"
#include "metasum/error.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace metasum;

TEST(ScoreCandidates, TableOne)
{
    const auto ds = fx::worked_example_dataset();
    const auto a = score_candidates(ds.candidate_sets[0], ds.segments[0].reference_tokens);
    const auto b = score_candidates(ds.candidate_sets[1], ds.segments[1].reference_tokens);
    const std::vector<double> printed_a{1.00, 0.59, 0.54}, printed_b{0.17, 0.00, 0.46};
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(a[i], printed_a[i], 0.005);
        EXPECT_NEAR(b[i], printed_b[i], 0.005);
    }
}

TEST(ScoreCandidates, AllEqualReference)
{
    const Tokens ref{"returns", "the", "name"};
    const CandidateSet set{"x", {{"a", ref}, {"b", ref}, {"c", ref}}};
    EXPECT_EQ(score_candidates(set, ref), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(ScoreDataset, ParallelMatchesSerial)
{
    const auto ds = fx::small_random_dataset(300, 3, 2);
    const auto a = score_dataset(ds);
    const auto b = score_dataset_serial(ds);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].segment_id, b[i].segment_id);
        EXPECT_EQ(a[i].scores, b[i].scores);
    }
}

TEST(DeriveLabels, Examples)
{
    const std::vector<double> t1{1.00, 0.59, 0.54}, tie{0.5, 0.5, 0.2}, zero{0, 0, 0};
    EXPECT_EQ(derive_labels(t1), (std::vector<int>{1, 0, 0}));
    EXPECT_EQ(derive_labels(tie), (std::vector<int>{1, 1, 0}));
    EXPECT_EQ(derive_labels(zero), (std::vector<int>{0, 0, 0}));
    EXPECT_ERROR_KIND(derive_labels(std::span<const double>{}), ErrorKind::precondition);
}

TEST(DeriveLabels, NearTiesAfterRounding)
{
    const std::vector<double> v{0.3, 0.1 + 0.2, 0.29};
    EXPECT_EQ(derive_labels(v), (std::vector<int>{1, 1, 0}));
}

TEST(DeriveLabels, Properties)
{
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t j = 2 + rng.below(4);
        std::vector<double> v(j);
        for (auto& x : v)
            x = rng.coin(0.3) ? 0.0 : std::round(rng.uniform() * 4) / 4;
        const auto labels = derive_labels(v);
        ASSERT_EQ(labels.size(), j);
        const double mx = *std::max_element(v.begin(), v.end());
        const auto pos = std::count(labels.begin(), labels.end(), 1);
        if (mx > 0) {
            EXPECT_GE(pos, 1);
        } else {
            EXPECT_EQ(pos, 0);
        }
        for (std::size_t i = 0; i < j; ++i)
            if (labels[i])
                EXPECT_EQ(v[i], mx);
        if (pos == static_cast<long>(j))
            EXPECT_TRUE(std::all_of(v.begin(), v.end(), [&](double x) { return x == mx && x > 0; }));
        std::vector<double> scaled = v;
        for (auto& x : scaled)
            x *= 0.5;
        EXPECT_EQ(derive_labels(scaled), labels);
        EXPECT_EQ(derive_labels(v), labels);
    }
}

TEST(Dumps, RoundTrip)
{
    const std::vector<ScoredSet> scored{{"a", {0.1234567, 0.0, 1.0}}, {"b", {0.5, 0.5, 0.25}}};
    std::stringstream ss;
    write_score_dump(ss, scored);
    const auto back = read_score_dump(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].segment_id, "a");
    EXPECT_NEAR(back[0].scores[0], 0.123457, 1e-12);

    const auto labeled = label_sets(scored);
    EXPECT_EQ(labeled[1].labels, (std::vector<int>{1, 1, 0}));
    std::stringstream ls;
    write_label_dump(ls, labeled);
    const auto lb = read_label_dump(ls);
    ASSERT_EQ(lb.size(), 2u);
    EXPECT_EQ(lb[0].labels, labeled[0].labels);
    EXPECT_EQ(lb[1].labels, labeled[1].labels);
}

TEST(Dumps, MismatchedLengthsRejected)
{
    std::istringstream in(R"({"id": "a", "scores": [0.1, 0.2], "labels": [1]})"
                          "\n");
    EXPECT_ERROR_KIND(read_label_dump(in), ErrorKind::schema);
}
