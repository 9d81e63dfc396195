#pragma once

#include "metasum/corpus.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace metasum::bleu {

inline constexpr int max_order = 4;

/// Sufficient statistics for BLEU-4. Merging is plain integer addition, so any
/// reduction order gives the same aggregate.
struct Stats {
    std::array<std::int64_t, max_order> clipped{};
    std::array<std::int64_t, max_order> candidate_totals{};
    std::array<std::int64_t, max_order> reference_totals{};
    std::int64_t candidate_length = 0;
    std::int64_t reference_length = 0;

    Stats& operator+=(const Stats& o);
    friend Stats operator+(Stats a, const Stats& b) { return a += b; }
    friend bool operator==(const Stats&, const Stats&) = default;
};

struct SentenceBleu {
    std::array<std::pair<std::int64_t, std::int64_t>, max_order> precisions{};  // (clipped, total)
    double brevity_penalty = 1.0;
    double score = 0.0;
};

/// (clipped matches, candidate n-gram total) for a single order n in 1..4.
std::pair<std::int64_t, std::int64_t> modified_precision(std::span<const std::string> candidate,
                                                         std::span<const std::string> reference, int n);

Stats sentence_stats(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Unsmoothed BLEU-4 with brevity penalty exp(1 - r/c) when c < r.
double score(const Stats& s);

SentenceBleu sentence_bleu_detail(std::span<const std::string> candidate, std::span<const std::string> reference);
double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference);

/// A (candidate, reference) pair by reference; both spans must outlive the call.
struct Pair {
    std::span<const std::string> candidate;
    std::span<const std::string> reference;
};

class CorpusAccumulator {
public:
    void add(std::span<const std::string> candidate, std::span<const std::string> reference);
    void add(const Stats& s) { stats_ += s; ++pairs_; }
    void merge(const CorpusAccumulator& o) { stats_ += o.stats_; pairs_ += o.pairs_; }

    const Stats& stats() const { return stats_; }
    std::size_t pairs() const { return pairs_; }
    double score() const;

private:
    Stats stats_;
    std::size_t pairs_ = 0;
};

/// Aggregated sentence statistics over all pairs (OpenMP map-reduce).
Stats corpus_stats(std::span<const Pair> pairs);
Stats corpus_stats_serial(std::span<const Pair> pairs);

double corpus_bleu(std::span<const Pair> pairs);

/// Per-pair statistics, index-aligned with the input.
std::vector<Stats> pair_stats(std::span<const Pair> pairs);
std::vector<Stats> pair_stats_serial(std::span<const Pair> pairs);

} // namespace metasum::bleu
