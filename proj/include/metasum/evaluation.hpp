#pragma once

#include "metasum/bleu.hpp"
#include "metasum/corpus.hpp"
#include "metasum/selector.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace metasum::eval {

/// Argmax, lowest index on ties.
std::size_t select(std::span<const double> probabilities);
std::size_t oracle_select(std::span<const double> scores);

struct SelectionResult {
    std::string segment_id;
    std::size_t chosen_index = 0;
    std::vector<double> probabilities;
    Tokens chosen_tokens;
};

/// Runs the selector over the listed segments (in the given order).
std::vector<SelectionResult> select_all(const Selector& selector, const Dataset& ds,
                                        std::span<const std::string> ids);

/// Corpus BLEU when segment ids[i] is answered by candidate chosen[i].
double selection_bleu(const Dataset& ds, std::span<const std::string> ids, std::span<const std::size_t> chosen);
/// Corpus BLEU of the fixed candidate position `k` on the listed segments.
double position_bleu(const Dataset& ds, std::span<const std::string> ids, std::size_t k);

enum class Scenario { all_all, all_filtered, filtered_filtered };

const char* to_string(Scenario s);
const char* label(Scenario s);  // "All/all" etc.
Scenario parse_scenario(const std::string& s);
TrainingSubset training_subset_of(Scenario s);
bool filters_test(Scenario s);

struct ScenarioResult {
    Scenario scenario = Scenario::all_all;
    std::vector<std::string> test_ids;  // the evaluated subset
    std::vector<std::size_t> chosen;    // aligned with test_ids
    double meta_bleu = 0;
    std::vector<double> baseline_bleu;  // per candidate position
    double oracle_bleu = 0;

    std::size_t best_baseline() const;
};

/// Test subset of a scenario: all test ids, or the ones whose best candidate BLEU > 0.
/// `scores` must cover every test id.
std::vector<std::string> scenario_test_ids(Scenario s, std::span<const std::string> test_ids,
                                           std::span<const ScoredSet> scores);

/// Scores given choices (one per id of `scenario_ids`, already restricted to the scenario's subset).
ScenarioResult evaluate_choices(const Dataset& ds, Scenario scenario, std::vector<std::string> scenario_ids,
                                std::vector<std::size_t> chosen, std::span<const ScoredSet> scores);

ScenarioResult evaluate_scenario(const Selector& selector, const Dataset& ds, std::span<const std::string> test_ids,
                                 std::span<const ScoredSet> scores, Scenario scenario);

/// Mean corpus BLEU over `draws` uniformly random selections.
double random_selection_bleu(const Dataset& ds, std::span<const std::string> ids, int draws, std::uint64_t seed);

struct ComplementarityReport {
    std::vector<std::string> model_ids;
    std::vector<std::size_t> win_counts;  // aligned with model_ids
    std::size_t draw_count = 0;
    std::size_t zero_count = 0;

    std::size_t total() const;
};

ComplementarityReport complementarity(std::span<const ScoredSet> sets, std::span<const std::string> model_ids);
void write_complementarity_csv(std::ostream& out, const ComplementarityReport& r);

struct SystemOutput {
    std::string segment_id;
    Tokens tokens;
};

struct SignificanceResult {
    double observed_delta = 0;  // BLEU(A) - BLEU(B)
    double p_value = 1;
    int iterations = 0;
    std::uint64_t seed = 0;
};

/// Paired approximate randomization on corpus BLEU, two-sided, add-one corrected.
/// Iteration i draws its swaps from derive_seed(seed, i), so the parallel and
/// serial versions agree exactly.
SignificanceResult approx_randomization_test(std::span<const SystemOutput> a, std::span<const SystemOutput> b,
                                             std::span<const SystemOutput> references, int iterations,
                                             std::uint64_t seed);
SignificanceResult approx_randomization_test_serial(std::span<const SystemOutput> a,
                                                    std::span<const SystemOutput> b,
                                                    std::span<const SystemOutput> references, int iterations,
                                                    std::uint64_t seed);

/// Same test on precomputed per-segment statistics.
SignificanceResult approx_randomization_stats(std::span<const bleu::Stats> a, std::span<const bleu::Stats> b,
                                              int iterations, std::uint64_t seed, bool parallel = true);

std::vector<SystemOutput> outputs_of(const Dataset& ds, std::span<const std::string> ids,
                                     std::span<const std::size_t> chosen);
std::vector<SystemOutput> references_of(const Dataset& ds, std::span<const std::string> ids);

// ---- scenario report ------------------------------------------------------------

struct ReportCell {
    double bleu = 0;
    bool significant = false;  // better than the best baseline at the chosen alpha
};

struct ReportRow {
    std::string name;
    std::vector<std::optional<ReportCell>> cells;  // one per scenario column
};

struct Report {
    std::vector<Scenario> scenarios;
    std::vector<ReportRow> rows;
};

/// BLEU x 100 with two decimals; '*' marks significance, '-' a missing cell.
void write_report_text(std::ostream& out, const Report& r);
void write_report_csv(std::ostream& out, const Report& r);

} // namespace metasum::eval
