#pragma once

#include "metasum/corpus.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace metasum {

struct LabeledCandidateSet {
    std::string segment_id;
    std::vector<double> scores;
    std::vector<int> labels;
};

/// Sentence BLEU of every candidate against the reference, in candidate order.
std::vector<double> score_candidates(const CandidateSet& set, const Tokens& reference);

/// Scores every set of the dataset; OpenMP over sets.
std::vector<ScoredSet> score_dataset(const Dataset& ds);
std::vector<ScoredSet> score_dataset_serial(const Dataset& ds);

/// 1 for every candidate attaining the (non-zero) maximum; all 0 when the maximum is 0.
/// Scores are compared after rounding to 9 decimals.
std::vector<int> derive_labels(std::span<const double> scores);

std::vector<LabeledCandidateSet> label_sets(std::span<const ScoredSet> sets);

// JSONL dumps; scores are written with 6 decimals.
void write_score_dump(std::ostream& out, std::span<const ScoredSet> sets);
std::vector<ScoredSet> read_score_dump(std::istream& in);
void write_label_dump(std::ostream& out, std::span<const LabeledCandidateSet> sets);
std::vector<LabeledCandidateSet> read_label_dump(std::istream& in);

} // namespace metasum
