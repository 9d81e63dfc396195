#pragma once

#include "metasum/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace metasum::embeddings {

struct EmbeddingOptions {
    int dim = 100;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    int min_n = 3;
    int max_n = 6;
    std::size_t buckets = std::size_t{1} << 18;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
};

/// Character n-grams (with '<' '>' boundary markers) hashed into a fixed bucket range.
class SubwordHasher {
public:
    SubwordHasher(int min_n, int max_n, std::size_t buckets);

    /// Bucket ids of every n-gram of "<word>" whose length (in UTF-8 characters) is in range.
    std::vector<std::size_t> buckets_of(const std::string& word) const;

    int min_n() const { return min_n_; }
    int max_n() const { return max_n_; }
    std::size_t bucket_count() const { return buckets_; }

private:
    int min_n_;
    int max_n_;
    std::size_t buckets_;
};

/// Lookup-ready vectors: composed vectors for in-vocabulary words, plus the n-gram
/// buckets used for out-of-vocabulary words.
class EmbeddingTable {
public:
    EmbeddingTable(int dim, SubwordHasher hasher, std::vector<std::string> words, std::vector<double> word_vectors,
                   std::vector<float> ngram_vectors);

    int dim() const { return dim_; }
    const SubwordHasher& hasher() const { return hasher_; }
    const std::vector<std::string>& words() const { return words_; }
    std::span<const float> ngram_vectors() const { return ngram_vectors_; }

    bool contains(const std::string& word) const { return index_.count(word) != 0; }
    std::vector<double> embed(const std::string& word) const;

private:
    int dim_;
    SubwordHasher hasher_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> word_vectors_;  // |V| x dim, composed
    std::vector<float> ngram_vectors_;  // buckets x dim
};

struct TrainedEmbeddings {
    EmbeddingTable table;
    std::vector<std::string> words;        // vocabulary, descending count then lexicographic
    std::vector<std::int64_t> counts;
    std::vector<float> word_rows;          // raw per-word input rows, |V| x dim
    std::vector<float> output_rows;        // context vectors, |V| x dim
    std::vector<double> epoch_loss;        // mean negative-sampling loss per epoch
};

/// Skip-gram with negative sampling over subword-enriched input vectors.
TrainedEmbeddings train_embeddings(std::span<const Tokens> corpus, const EmbeddingOptions& opt);

std::vector<std::vector<double>> embed_sequence(std::span<const std::string> tokens, const EmbeddingTable& table);

/// Text vectors at `path` ("count dim" header, then "word v1 .. vd") and the n-gram
/// buckets in the binary sidecar `path` + ".ngrams".
void save_text(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_text(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

} // namespace metasum::embeddings
