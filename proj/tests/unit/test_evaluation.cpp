#include "metasum/evaluation.hpp"
#include "metasum/error.hpp"
#include "metasum/labeling.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace metasum;
using namespace metasum::eval;

namespace {

std::vector<std::string> all_ids(const Dataset& ds)
{
    std::vector<std::string> ids;
    for (const auto& s : ds.segments)
        ids.push_back(s.id);
    return ids;
}

double subset_bleu(const Dataset& ds, const std::set<std::string>& keep, std::size_t k)
{
    bleu::CorpusAccumulator acc;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (keep.count(ds.segments[i].id))
            acc.add(ds.candidate_sets[i].candidates[k].tokens, ds.segments[i].reference_tokens);
    return acc.score();
}

} // namespace

TEST(Select, Examples)
{
    EXPECT_EQ(select(std::vector<double>{0.2, 0.9, 0.1}), 1u);
    EXPECT_EQ(select(std::vector<double>{0.9, 0.9, 0.1}), 0u);
    EXPECT_EQ(select(std::vector<double>{0.3}), 0u);
    EXPECT_ERROR_KIND(select(std::vector<double>{}), ErrorKind::precondition);
    EXPECT_EQ(oracle_select(std::vector<double>{0.17, 0.00, 0.46}), 2u);
    EXPECT_EQ(oracle_select(std::vector<double>{1.00, 0.59, 0.54}), 0u);
    EXPECT_EQ(oracle_select(std::vector<double>{0, 0, 0}), 0u);
    EXPECT_ERROR_KIND(oracle_select(std::vector<double>{}), ErrorKind::precondition);
}

TEST(SelectAll, ArgmaxAndChosenTokens)
{
    const auto ds = fx::small_random_dataset(30, 3, 1);
    const fx::FixedSelector sel(2, TrainingSubset::all);
    const auto ids = all_ids(ds);
    const auto r = select_all(sel, ds, ids);
    ASSERT_EQ(r.size(), 30u);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_EQ(r[i].segment_id, ids[i]);
        EXPECT_EQ(r[i].chosen_index, 2u);
        EXPECT_EQ(r[i].chosen_tokens, ds.candidate_sets[i].candidates[2].tokens);
    }
    const std::vector<std::string> unknown{"nope"};
    EXPECT_ERROR_KIND(select_all(sel, ds, unknown), ErrorKind::alignment);
}

TEST(Scenario, Names)
{
    EXPECT_EQ(parse_scenario("all_filtered"), Scenario::all_filtered);
    EXPECT_STREQ(label(Scenario::filtered_filtered), "Filtered/filtered");
    EXPECT_EQ(training_subset_of(Scenario::all_filtered), TrainingSubset::all);
    EXPECT_EQ(training_subset_of(Scenario::filtered_filtered), TrainingSubset::filtered);
    EXPECT_FALSE(filters_test(Scenario::all_all));
    EXPECT_ERROR_KIND(parse_scenario("bogus"), ErrorKind::config);
}

TEST(Scenario, FixedSelectorReducesToBaseline)
{
    const auto ds = fx::small_random_dataset(120, 3, 2);
    const auto scores = score_dataset(ds);
    const auto ids = all_ids(ds);
    for (auto s : {Scenario::all_all, Scenario::all_filtered, Scenario::filtered_filtered})
        for (std::size_t k = 0; k < 3; ++k) {
            const fx::FixedSelector sel(k, training_subset_of(s));
            const auto r = evaluate_scenario(sel, ds, ids, scores, s);
            EXPECT_EQ(r.meta_bleu, r.baseline_bleu[k]);
            for (double b : r.baseline_bleu)
                EXPECT_GE(r.oracle_bleu, b);
            EXPECT_LE(r.meta_bleu, r.oracle_bleu);
        }
}

TEST(Scenario, MismatchedTrainingSubsetIsConfigError)
{
    const auto ds = fx::small_random_dataset(20, 3, 2);
    const auto scores = score_dataset(ds);
    const auto ids = all_ids(ds);
    const fx::FixedSelector sel(0, TrainingSubset::all);
    EXPECT_ERROR_KIND(evaluate_scenario(sel, ds, ids, scores, Scenario::filtered_filtered), ErrorKind::config);
}

TEST(Scenario, FilteredSubsetConsistency)
{
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const auto ds = fx::small_random_dataset(200, 3, seed);
        const auto scores = score_dataset(ds);
        const auto ids = all_ids(ds);
        const auto filtered = scenario_test_ids(Scenario::all_filtered, ids, scores);
        EXPECT_EQ(scenario_test_ids(Scenario::all_all, ids, scores), ids);
        EXPECT_EQ(filtered, filter_nonzero(scores));
        const std::set<std::string> keep(filtered.begin(), filtered.end());
        const std::set<std::string> all(ids.begin(), ids.end());
        EXPECT_TRUE(std::includes(all.begin(), all.end(), keep.begin(), keep.end()));
        for (const auto& s : scores)
            if (keep.count(s.segment_id))
                EXPECT_GT(*std::max_element(s.scores.begin(), s.scores.end()), 0.0);
        const fx::FixedSelector sel(1, TrainingSubset::all);
        const auto r = evaluate_scenario(sel, ds, ids, scores, Scenario::all_filtered);
        EXPECT_EQ(r.test_ids, filtered);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_DOUBLE_EQ(r.baseline_bleu[k], subset_bleu(ds, keep, k));
            EXPECT_DOUBLE_EQ(r.baseline_bleu[k], position_bleu(ds, filtered, k));
        }
    }
}

TEST(Scenario, BestBaselineAndRandom)
{
    const auto ds = fx::small_random_dataset(150, 3, 6);
    const auto ids = all_ids(ds);
    const double rnd = random_selection_bleu(ds, ids, 20, 1);
    EXPECT_EQ(rnd, random_selection_bleu(ds, ids, 20, 1));
    const double lo = std::min({position_bleu(ds, ids, 0), position_bleu(ds, ids, 1), position_bleu(ds, ids, 2)});
    const double hi = std::max({position_bleu(ds, ids, 0), position_bleu(ds, ids, 1), position_bleu(ds, ids, 2)});
    EXPECT_GT(rnd, lo * 0.9);
    EXPECT_LT(rnd, hi * 1.1);
    ScenarioResult r;
    r.baseline_bleu = {0.2, 0.5, 0.5};
    EXPECT_EQ(r.best_baseline(), 1u);
}

TEST(Complementarity, Examples)
{
    const std::vector<ScoredSet> sets{{"a", {1.00, 0.59, 0.54}}, {"b", {0.5, 0.5, 0.2}}, {"c", {0, 0, 0}},
                                      {"d", {0.1, 0.3, 0.0}}};
    const std::vector<std::string> models{"x", "y", "z"};
    const auto r = complementarity(sets, models);
    EXPECT_EQ(r.win_counts, (std::vector<std::size_t>{1, 1, 0}));
    EXPECT_EQ(r.draw_count, 1u);
    EXPECT_EQ(r.zero_count, 1u);
    EXPECT_EQ(r.total(), sets.size());
    std::ostringstream out;
    write_complementarity_csv(out, r);
    EXPECT_EQ(out.str(), "model,count\nx,1\ny,1\nz,0\ndraw,1\nall_zero,1\n");
}

TEST(Complementarity, PartitionsTheSet)
{
    const auto ds = fx::small_random_dataset(300, 3, 7);
    const auto scores = score_dataset(ds);
    const auto r = complementarity(scores, ds.model_ids);
    EXPECT_EQ(r.total(), 300u);
}

TEST(Significance, IdenticalSystems)
{
    const auto f = fx::extreme_separation_fixture();
    const auto r = approx_randomization_test(f.a, f.a, f.references, 1000, 3);
    EXPECT_EQ(r.observed_delta, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_EQ(approx_randomization_test(f.b, f.a, f.references, 0, 3).p_value, 1.0);
}

TEST(Significance, ExtremeSeparation)
{
    const auto f = fx::extreme_separation_fixture();
    const auto r = approx_randomization_test(f.a, f.b, f.references, 10000, 42);
    EXPECT_GT(r.observed_delta, 0.9);
    EXPECT_LT(r.p_value, 0.05);
    EXPECT_EQ(r.iterations, 10000);
    EXPECT_EQ(r.seed, 42u);
    // p is (count + 1) / (iterations + 1) for an integer count
    const double count = r.p_value * 10001 - 1;
    EXPECT_NEAR(count, std::round(count), 1e-6);
}

TEST(Significance, ReproducibleAndParallelMatchesSerial)
{
    const auto ds = fx::small_random_dataset(80, 3, 8);
    const auto ids = all_ids(ds);
    const std::vector<std::size_t> c0(ids.size(), 0), c2(ids.size(), 2);
    const auto a = outputs_of(ds, ids, c0), b = outputs_of(ds, ids, c2);
    const auto refs = references_of(ds, ids);
    const auto p1 = approx_randomization_test(a, b, refs, 2000, 9);
    const auto p2 = approx_randomization_test(a, b, refs, 2000, 9);
    const auto ps = approx_randomization_test_serial(a, b, refs, 2000, 9);
    EXPECT_EQ(p1.p_value, p2.p_value);
    EXPECT_EQ(p1.p_value, ps.p_value);
    EXPECT_EQ(p1.observed_delta, ps.observed_delta);
    EXPECT_DOUBLE_EQ(p1.observed_delta, position_bleu(ds, ids, 0) - position_bleu(ds, ids, 2));
}

TEST(Significance, Misaligned)
{
    auto f = fx::extreme_separation_fixture();
    auto b = f.b;
    b.pop_back();
    EXPECT_ERROR_KIND(approx_randomization_test(f.a, b, f.references, 10, 1), ErrorKind::alignment);
    std::swap(f.b[0], f.b[1]);
    EXPECT_ERROR_KIND(approx_randomization_test(f.a, f.b, f.references, 10, 1), ErrorKind::alignment);
}

TEST(Report, TextAndCsv)
{
    Report r;
    r.scenarios = {Scenario::all_all, Scenario::all_filtered};
    r.rows.push_back({"model_0", {ReportCell{0.18571, false}, ReportCell{0.3, false}}});
    r.rows.push_back({"meta_lstm", {ReportCell{0.19182, true}, std::nullopt}});
    std::ostringstream csv;
    write_report_csv(csv, r);
    EXPECT_EQ(csv.str(), "model,all_all,all_filtered\nmodel_0,18.57,30.00\nmeta_lstm,19.18*,-\n");
    std::ostringstream txt;
    write_report_text(txt, r);
    EXPECT_NE(txt.str().find("All/all"), std::string::npos);
    EXPECT_NE(txt.str().find("19.18*"), std::string::npos);
}
