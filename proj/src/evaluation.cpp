#include "metasum/evaluation.hpp"

#include "metasum/error.hpp"
#include "metasum/labeling.hpp"
#include "metasum/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace metasum::eval {

std::size_t select(std::span<const double> probabilities)
{
    require(!probabilities.empty(), ErrorKind::precondition, "select: empty probability list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < probabilities.size(); ++i)
        if (probabilities[i] > probabilities[best])
            best = i;
    return best;
}

std::size_t oracle_select(std::span<const double> scores)
{
    require(!scores.empty(), ErrorKind::precondition, "oracle_select: empty score list");
    return select(scores);
}

namespace {

std::vector<std::size_t> positions(const Dataset& ds, std::span<const std::string> ids)
{
    const auto idx = index_by_id(ds);
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = idx.find(id);
        require(it != idx.end(), ErrorKind::alignment, "unknown segment id '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

std::unordered_map<std::string, const ScoredSet*> scores_by_id(std::span<const ScoredSet> scores)
{
    std::unordered_map<std::string, const ScoredSet*> m;
    for (const auto& s : scores)
        m.emplace(s.segment_id, &s);
    return m;
}

} // namespace

std::vector<SelectionResult> select_all(const Selector& selector, const Dataset& ds,
                                        std::span<const std::string> ids)
{
    const auto pos = positions(ds, ids);
    std::vector<SegmentRef> refs;
    refs.reserve(pos.size());
    for (auto p : pos)
        refs.push_back({&ds.segments[p], &ds.candidate_sets[p]});
    auto probs = selector.predict_many(refs);
    require(probs.size() == refs.size(), ErrorKind::contract, "select_all: selector returned wrong count");
    std::vector<SelectionResult> out;
    out.reserve(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto& cands = ds.candidate_sets[pos[i]].candidates;
        require(probs[i].size() == cands.size(), ErrorKind::contract,
                "select_all: probability count differs from candidate count");
        SelectionResult r;
        r.segment_id = ids[i];
        r.chosen_index = select(probs[i]);
        r.chosen_tokens = cands[r.chosen_index].tokens;
        r.probabilities = std::move(probs[i]);
        out.push_back(std::move(r));
    }
    return out;
}

double selection_bleu(const Dataset& ds, std::span<const std::string> ids, std::span<const std::size_t> chosen)
{
    require(ids.size() == chosen.size(), ErrorKind::alignment, "selection_bleu: ids and choices differ in length");
    require(!ids.empty(), ErrorKind::precondition, "selection_bleu: no segments");
    const auto pos = positions(ds, ids);
    std::vector<bleu::Pair> pairs;
    pairs.reserve(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto& cands = ds.candidate_sets[pos[i]].candidates;
        require(chosen[i] < cands.size(), ErrorKind::precondition, "selection_bleu: choice out of range");
        pairs.push_back({cands[chosen[i]].tokens, ds.segments[pos[i]].reference_tokens});
    }
    return bleu::corpus_bleu(pairs);
}

double position_bleu(const Dataset& ds, std::span<const std::string> ids, std::size_t k)
{
    const std::vector<std::size_t> chosen(ids.size(), k);
    return selection_bleu(ds, ids, chosen);
}

const char* to_string(Scenario s)
{
    switch (s) {
    case Scenario::all_all: return "all_all";
    case Scenario::all_filtered: return "all_filtered";
    case Scenario::filtered_filtered: return "filtered_filtered";
    }
    return "?";
}

const char* label(Scenario s)
{
    switch (s) {
    case Scenario::all_all: return "All/all";
    case Scenario::all_filtered: return "All/filtered";
    case Scenario::filtered_filtered: return "Filtered/filtered";
    }
    return "?";
}

Scenario parse_scenario(const std::string& s)
{
    for (auto sc : {Scenario::all_all, Scenario::all_filtered, Scenario::filtered_filtered})
        if (s == to_string(sc) || s == label(sc))
            return sc;
    fail(ErrorKind::config, "unknown scenario '" + s + "' (expected all_all|all_filtered|filtered_filtered)");
}

TrainingSubset training_subset_of(Scenario s)
{
    return s == Scenario::filtered_filtered ? TrainingSubset::filtered : TrainingSubset::all;
}

bool filters_test(Scenario s) { return s != Scenario::all_all; }

std::size_t ScenarioResult::best_baseline() const
{
    require(!baseline_bleu.empty(), ErrorKind::precondition, "best_baseline: no baselines");
    return select(baseline_bleu);
}

std::vector<std::string> scenario_test_ids(Scenario s, std::span<const std::string> test_ids,
                                           std::span<const ScoredSet> scores)
{
    if (!filters_test(s))
        return {test_ids.begin(), test_ids.end()};
    const auto by_id = scores_by_id(scores);
    std::vector<std::string> out;
    for (const auto& id : test_ids) {
        const auto it = by_id.find(id);
        require(it != by_id.end(), ErrorKind::alignment, "no scores for test segment '" + id + "'");
        const auto& sc = it->second->scores;
        if (!sc.empty() && *std::max_element(sc.begin(), sc.end()) > 0.0)
            out.push_back(id);
    }
    return out;
}

ScenarioResult evaluate_scenario(const Selector& selector, const Dataset& ds, std::span<const std::string> test_ids,
                                 std::span<const ScoredSet> scores, Scenario scenario)
{
    if (selector.training_subset() != training_subset_of(scenario))
        fail(ErrorKind::config, std::string("scenario ") + label(scenario) + " needs a meta-model trained on '"
                                    + to_string(training_subset_of(scenario)) + "' but " + selector.name()
                                    + " was trained on '" + to_string(selector.training_subset()) + "'");
    auto ids = scenario_test_ids(scenario, test_ids, scores);
    require(!ids.empty(), ErrorKind::precondition, std::string("scenario ") + label(scenario) + ": empty test subset");
    std::vector<std::size_t> chosen;
    for (const auto& sel : select_all(selector, ds, ids))
        chosen.push_back(sel.chosen_index);
    return evaluate_choices(ds, scenario, std::move(ids), std::move(chosen), scores);
}

ScenarioResult evaluate_choices(const Dataset& ds, Scenario scenario, std::vector<std::string> scenario_ids,
                                std::vector<std::size_t> chosen, std::span<const ScoredSet> scores)
{
    require(scenario_ids.size() == chosen.size(), ErrorKind::alignment,
            "evaluate_choices: ids and choices differ in length");
    require(!scenario_ids.empty(), ErrorKind::precondition,
            std::string("scenario ") + label(scenario) + ": empty test subset");
    ScenarioResult r;
    r.scenario = scenario;
    r.test_ids = std::move(scenario_ids);
    r.chosen = std::move(chosen);
    r.meta_bleu = selection_bleu(ds, r.test_ids, r.chosen);
    for (std::size_t k = 0; k < ds.model_ids.size(); ++k)
        r.baseline_bleu.push_back(position_bleu(ds, r.test_ids, k));

    const auto by_id = scores_by_id(scores);
    std::vector<std::size_t> oracle;
    for (const auto& id : r.test_ids) {
        const auto it = by_id.find(id);
        require(it != by_id.end(), ErrorKind::alignment, "no scores for test segment '" + id + "'");
        oracle.push_back(oracle_select(it->second->scores));
    }
    r.oracle_bleu = selection_bleu(ds, r.test_ids, oracle);
    return r;
}

double random_selection_bleu(const Dataset& ds, std::span<const std::string> ids, int draws, std::uint64_t seed)
{
    require(draws >= 1, ErrorKind::config, "random_selection_bleu: draws must be >= 1");
    const auto pos = positions(ds, ids);
    double total = 0.0;
    for (int d = 0; d < draws; ++d) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
        std::vector<std::size_t> chosen;
        chosen.reserve(pos.size());
        for (auto p : pos)
            chosen.push_back(rng.below(ds.candidate_sets[p].candidates.size()));
        total += selection_bleu(ds, ids, chosen);
    }
    return total / draws;
}

std::size_t ComplementarityReport::total() const
{
    std::size_t t = draw_count + zero_count;
    for (auto w : win_counts)
        t += w;
    return t;
}

ComplementarityReport complementarity(std::span<const ScoredSet> sets, std::span<const std::string> model_ids)
{
    ComplementarityReport r;
    r.model_ids.assign(model_ids.begin(), model_ids.end());
    r.win_counts.assign(model_ids.size(), 0);
    for (const auto& s : sets) {
        require(s.scores.size() == model_ids.size(), ErrorKind::alignment,
                "complementarity: score count differs from model count for " + s.segment_id);
        // the same 9-decimal comparison the labels use
        const auto labels = derive_labels(s.scores);
        const auto winners = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        if (winners == 0)
            ++r.zero_count;
        else if (winners > 1)
            ++r.draw_count;
        else
            ++r.win_counts[static_cast<std::size_t>(std::find(labels.begin(), labels.end(), 1) - labels.begin())];
    }
    return r;
}

void write_complementarity_csv(std::ostream& out, const ComplementarityReport& r)
{
    out << "model,count\n";
    for (std::size_t i = 0; i < r.model_ids.size(); ++i)
        out << r.model_ids[i] << ',' << r.win_counts[i] << '\n';
    out << "draw," << r.draw_count << '\n';
    out << "all_zero," << r.zero_count << '\n';
}

SignificanceResult approx_randomization_stats(std::span<const bleu::Stats> a, std::span<const bleu::Stats> b,
                                              int iterations, std::uint64_t seed, bool parallel)
{
    require(a.size() == b.size(), ErrorKind::alignment, "significance test: systems differ in length");
    require(!a.empty(), ErrorKind::precondition, "significance test: no segments");
    require(iterations >= 0, ErrorKind::config, "significance test: iterations must be >= 0");
    bleu::Stats sum_a, sum_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum_a += a[i];
        sum_b += b[i];
    }
    SignificanceResult r;
    r.iterations = iterations;
    r.seed = seed;
    r.observed_delta = bleu::score(sum_a) - bleu::score(sum_b);
    const double threshold = std::abs(r.observed_delta);
    const std::size_t n = a.size();

    auto one = [&](int it) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(it)));
        bleu::Stats x, y;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.coin(0.5)) {
                x += b[i];
                y += a[i];
            } else {
                x += a[i];
                y += b[i];
            }
        }
        return std::abs(bleu::score(x) - bleu::score(y)) >= threshold ? 1 : 0;
    };

    long long count = 0;
    if (parallel) {
#pragma omp parallel for reduction(+ : count) schedule(static)
        for (int it = 0; it < iterations; ++it)
            count += one(it);
    } else {
        for (int it = 0; it < iterations; ++it)
            count += one(it);
    }
    r.p_value = static_cast<double>(count + 1) / static_cast<double>(iterations + 1);
    return r;
}

namespace {

std::vector<bleu::Stats> aligned_stats(std::span<const SystemOutput> sys, std::span<const SystemOutput> refs)
{
    std::vector<bleu::Pair> pairs;
    pairs.reserve(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i)
        pairs.push_back({sys[i].tokens, refs[i].tokens});
    return bleu::pair_stats_serial(pairs);
}

void check_alignment(std::span<const SystemOutput> a, std::span<const SystemOutput> b,
                     std::span<const SystemOutput> refs)
{
    require(a.size() == b.size() && a.size() == refs.size(), ErrorKind::alignment,
            "significance test: systems and references differ in length");
    for (std::size_t i = 0; i < a.size(); ++i)
        require(a[i].segment_id == refs[i].segment_id && b[i].segment_id == refs[i].segment_id,
                ErrorKind::alignment, "significance test: segment ids misaligned at position " + std::to_string(i));
}

} // namespace

SignificanceResult approx_randomization_test(std::span<const SystemOutput> a, std::span<const SystemOutput> b,
                                             std::span<const SystemOutput> references, int iterations,
                                             std::uint64_t seed)
{
    check_alignment(a, b, references);
    return approx_randomization_stats(aligned_stats(a, references), aligned_stats(b, references), iterations, seed,
                                      true);
}

SignificanceResult approx_randomization_test_serial(std::span<const SystemOutput> a,
                                                    std::span<const SystemOutput> b,
                                                    std::span<const SystemOutput> references, int iterations,
                                                    std::uint64_t seed)
{
    check_alignment(a, b, references);
    return approx_randomization_stats(aligned_stats(a, references), aligned_stats(b, references), iterations, seed,
                                      false);
}

std::vector<SystemOutput> outputs_of(const Dataset& ds, std::span<const std::string> ids,
                                     std::span<const std::size_t> chosen)
{
    require(ids.size() == chosen.size(), ErrorKind::alignment, "outputs_of: ids and choices differ in length");
    const auto pos = positions(ds, ids);
    std::vector<SystemOutput> out;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto& cands = ds.candidate_sets[pos[i]].candidates;
        require(chosen[i] < cands.size(), ErrorKind::precondition, "outputs_of: choice out of range");
        out.push_back({ids[i], cands[chosen[i]].tokens});
    }
    return out;
}

std::vector<SystemOutput> references_of(const Dataset& ds, std::span<const std::string> ids)
{
    const auto pos = positions(ds, ids);
    std::vector<SystemOutput> out;
    for (std::size_t i = 0; i < pos.size(); ++i)
        out.push_back({ids[i], ds.segments[pos[i]].reference_tokens});
    return out;
}

namespace {

std::string format_cell(const ReportRow& row, std::size_t col)
{
    if (col >= row.cells.size() || !row.cells[col])
        return "-";
    const ReportCell* c = &*row.cells[col];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%s", c->bleu * 100.0, c->significant ? "*" : "");
    return buf;
}

} // namespace

void write_report_text(std::ostream& out, const Report& r)
{
    std::size_t name_w = 5;
    for (const auto& row : r.rows)
        name_w = std::max(name_w, row.name.size());
    std::vector<std::size_t> col_w;
    for (auto s : r.scenarios)
        col_w.push_back(std::max<std::size_t>(std::string(label(s)).size(), 7));
    out << std::left << std::setw(static_cast<int>(name_w)) << "Model";
    for (std::size_t c = 0; c < r.scenarios.size(); ++c)
        out << "  " << std::right << std::setw(static_cast<int>(col_w[c])) << label(r.scenarios[c]);
    out << '\n';
    for (const auto& row : r.rows) {
        out << std::left << std::setw(static_cast<int>(name_w)) << row.name;
        for (std::size_t c = 0; c < r.scenarios.size(); ++c) {
            out << "  " << std::right << std::setw(static_cast<int>(col_w[c])) << format_cell(row, c);
        }
        out << '\n';
    }
}

void write_report_csv(std::ostream& out, const Report& r)
{
    out << "model";
    for (auto s : r.scenarios)
        out << ',' << to_string(s);
    out << '\n';
    for (const auto& row : r.rows) {
        out << row.name;
        for (std::size_t c = 0; c < r.scenarios.size(); ++c)
            out << ',' << format_cell(row, c);
        out << '\n';
    }
}

} // namespace metasum::eval
