#pragma once

#include "metasum/corpus.hpp"
#include "metasum/selector.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace metasum::features {

inline constexpr std::size_t feature_count = 5;

struct FeatureVector {
    double code_freq_hmean = 0;
    double summary_freq_hmean = 0;
    std::int64_t code_length = 0;
    std::int64_t summary_length = 0;
    double distinctiveness = 0;

    std::vector<double> values() const;
};

/// Unigram counts; probabilities are count / total.
class UnigramDistribution {
public:
    void add(const std::string& token, std::int64_t n = 1);

    double prob(const std::string& token) const;
    std::int64_t count(const std::string& token) const;
    std::int64_t total() const { return total_; }
    std::size_t support_size() const { return counts_.size(); }
    /// Support in lexicographic order.
    std::vector<std::string> support() const;

private:
    std::unordered_map<std::string, std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/// |tokens| / sum(1 / freq(t)); tokens unseen in the vocabulary count as frequency 1.
double harmonic_mean_freq(std::span<const std::string> tokens, const Vocabulary& vocab);

UnigramDistribution unigram_distribution(std::span<const Tokens> token_lists);

/// KL(candidate || pooled), natural log. When the candidate uses a word the pooled
/// distribution has never seen, pooled is add-one smoothed over the union vocabulary.
double kl_distinctiveness(const UnigramDistribution& candidate, const UnigramDistribution& pooled);

/// Corpus statistics the features are computed against; built from meta-train only.
struct FeatureContext {
    Vocabulary code_vocab;
    Vocabulary summary_vocab;
    std::vector<UnigramDistribution> pooled;  // per candidate position (= per source model)
};

FeatureContext build_context(const Dataset& ds, std::span<const std::string> train_ids);

FeatureVector extract_features(const CodeSegment& segment, const Candidate& candidate, const Vocabulary& code_vocab,
                               const Vocabulary& summary_vocab, const UnigramDistribution& pooled);

/// Features of every candidate of every referenced segment, flattened in (segment, candidate) order.
std::vector<FeatureVector> extract_all(const FeatureContext& ctx, std::span<const SegmentRef> items);
std::vector<FeatureVector> extract_all_serial(const FeatureContext& ctx, std::span<const SegmentRef> items);

// ---- logistic regression -------------------------------------------------

struct ClassWeights {
    double negative = 1.0;
    double positive = 5.0;
};

struct LogRegOptions {
    ClassWeights class_weights;
    double learning_rate = 0.1;
    int epochs = 500;
    double l2 = 1e-4;
};

struct LogRegModel {
    static constexpr int format_version = 1;

    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    ClassWeights class_weights;
};

struct LogRegFit {
    LogRegModel model;
    std::vector<double> loss_history;  // objective before each epoch, then after the last
};

using Matrix = std::vector<std::vector<double>>;

/// Weighted negative log-likelihood (normalised by total example weight) plus
/// (l2/2)|w|^2 on already-standardised rows. Gradients are written when non-null.
double logreg_objective(std::span<const double> weights, double bias, const Matrix& x, std::span<const int> y,
                        const ClassWeights& cw, double l2, std::vector<double>* grad_w, double* grad_b);

/// Full-batch gradient descent on z-scored features, starting from zero weights.
LogRegFit logreg_train(const Matrix& x, std::span<const int> y, const LogRegOptions& opt);

double logreg_predict(const LogRegModel& model, std::span<const double> x);

nlohmann::json to_json(const LogRegModel& m);
LogRegModel logreg_from_json(const nlohmann::json& j);

// ---- the feature-based selector --------------------------------------------

class FeatureSelector final : public Selector {
public:
    FeatureSelector(FeatureContext ctx, LogRegModel model, TrainingSubset subset)
        : ctx_(std::move(ctx)), model_(std::move(model)), subset_(subset) {}

    std::vector<double> predict(const CodeSegment& segment, const CandidateSet& set) const override;
    TrainingSubset training_subset() const override { return subset_; }
    std::string name() const override { return "meta_feat"; }

    const LogRegModel& model() const { return model_; }
    const FeatureContext& context() const { return ctx_; }

private:
    FeatureContext ctx_;
    LogRegModel model_;
    TrainingSubset subset_;
};

struct FeatureTrainingResult {
    FeatureSelector selector;
    std::vector<double> loss_history;
};

/// Fits meta_feat: context from `context_ids`, classifier on every candidate of `train_items`.
FeatureTrainingResult train_feature_selector(const Dataset& ds, std::span<const std::string> context_ids,
                                             std::span<const SegmentRef> train_items,
                                             std::span<const std::vector<int>> labels, const LogRegOptions& opt,
                                             TrainingSubset subset);

} // namespace metasum::features
