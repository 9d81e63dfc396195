#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace metasum {

using Tokens = std::vector<std::string>;

enum class Side { code, summary };

/// One method: tokenized code plus its human-written reference summary.
struct CodeSegment {
    std::string id;
    Tokens code_tokens;
    Tokens reference_tokens;
};

struct Candidate {
    std::string model_id;
    Tokens tokens;
};

/// Candidate summaries for one segment. Index i refers to the same source model
/// in every set of a dataset.
struct CandidateSet {
    std::string segment_id;
    std::vector<Candidate> candidates;
};

struct Dataset {
    std::vector<CodeSegment> segments;
    std::vector<CandidateSet> candidate_sets;   // aligned with segments
    std::vector<std::string> model_ids;         // the uniform candidate order

    std::size_t size() const { return segments.size(); }
};

/// Per-candidate sentence BLEU for one segment, in candidate order.
struct ScoredSet {
    std::string segment_id;
    std::vector<double> scores;
};

class Vocabulary {
public:
    Vocabulary() = default;

    void add(const std::string& token, std::int64_t n = 1);

    /// 0 for unseen tokens.
    std::int64_t count(const std::string& token) const;
    std::int64_t total() const { return total_; }
    std::size_t size() const { return counts_.size(); }
    const std::unordered_map<std::string, std::int64_t>& counts() const { return counts_; }

private:
    std::unordered_map<std::string, std::int64_t> counts_;
    std::int64_t total_ = 0;
};

struct DatasetPartition {
    std::vector<std::string> meta_train;
    std::vector<std::string> meta_valid;
    std::vector<std::string> test;
};

struct SplitRatios {
    double meta_train = 0.72;
    double meta_valid = 0.11;
    double test = 0.17;
};

Tokens tokenize(std::string_view text, Side side);

/// Splits raw text fields and validates the dataset invariants.
Dataset load_jsonl(const std::filesystem::path& path);
Dataset parse_jsonl(std::istream& in);
/// Writes one record per segment with space-joined tokens; parse_jsonl reads it back unchanged.
void write_jsonl(std::ostream& out, const Dataset& ds);
void save_jsonl(const std::filesystem::path& path, const Dataset& ds);
/// Position of every segment id in ds.segments.
std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& ds);

/// Builds a dataset from already-tokenized records, enforcing the same invariants.
Dataset make_dataset(std::vector<CodeSegment> segments, std::vector<CandidateSet> sets);

Vocabulary build_vocabulary(std::span<const Tokens> token_lists);

DatasetPartition partition(std::span<const std::string> ids, const SplitRatios& ratios,
                           std::uint64_t seed);

/// Ids of sets whose best candidate has BLEU > 0, in input order.
std::vector<std::string> filter_nonzero(std::span<const ScoredSet> sets);

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

} // namespace metasum
