#pragma once

#include "metasum/corpus.hpp"
#include "metasum/diff/graph.hpp"
#include "metasum/diff/optim.hpp"
#include "metasum/embeddings.hpp"
#include "metasum/random.hpp"
#include "metasum/selector.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace metasum::neural {

enum class Variant { lstm, trn };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct MetaModelConfig {
    Variant variant = Variant::lstm;
    int code_input_len = 50;
    int summary_input_len = 20;
    int embedding_dim = 100;
    int hidden_dim = 64;
    int encoder_layers = 2;
    int attention_heads = 2;  // trn only
    int batch_size = 25;
    double learning_rate = 1e-4;
    int epochs = 0;  // 0 selects the variant default (lstm 7, trn 5)
    int patience = 2;
    std::uint64_t seed = 1;
    bool fine_tune_embeddings = false;

    int effective_epochs() const { return epochs > 0 ? epochs : (variant == Variant::lstm ? 7 : 5); }
    void validate() const;
};

nlohmann::json to_json(const MetaModelConfig& c);
MetaModelConfig config_from_json(const nlohmann::json& j);

/// Embedded, padded and masked sequences: inputs [B, T, d], mask [B, T].
struct SequenceBatch {
    diff::Tensor inputs;
    diff::Tensor mask;
    std::vector<std::size_t> token_ids;  // [B * T], only in fine-tune mode
};

class Encoder {
public:
    virtual ~Encoder() = default;
    /// x [B, T, in] with mask [B, T] -> [B, output_dim()].
    virtual diff::Var encode(const diff::Var& x, const diff::Tensor& mask) const = 0;
    virtual std::size_t output_dim() const = 0;
};

/// Stacked bidirectional LSTM, masked mean-pool of the top layer outputs.
class LstmEncoder final : public Encoder {
public:
    LstmEncoder(diff::ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                int layers, Rng& rng);

    diff::Var encode(const diff::Var& x, const diff::Tensor& mask) const override;
    std::size_t output_dim() const override { return 2 * hidden_; }

private:
    struct Direction {
        diff::Var w_x, w_h, b;
    };
    diff::Var run_direction(const Direction& d, const diff::Var& x, const diff::Tensor& mask, bool reverse) const;

    std::size_t hidden_;
    std::vector<std::pair<Direction, Direction>> layers_;
};

/// Post-norm transformer encoder with sinusoidal positions, masked mean-pool.
class TransformerEncoder final : public Encoder {
public:
    TransformerEncoder(diff::ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                       std::size_t model_dim, int layers, int heads, Rng& rng);

    diff::Var encode(const diff::Var& x, const diff::Tensor& mask) const override;
    std::size_t output_dim() const override { return dim_; }

    static diff::Tensor positional_encoding(std::size_t steps, std::size_t dim);

private:
    struct Layer {
        diff::Var w_qkv, b_qkv, w_o, b_o, ln1_g, ln1_b, w_ff1, b_ff1, w_ff2, b_ff2, ln2_g, ln2_b;
    };

    std::size_t dim_;
    std::size_t heads_;
    diff::Var w_in_, b_in_;
    std::vector<Layer> layers_;
};

struct TrainingExample {
    SegmentRef ref;
    std::vector<int> labels;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0;
    double valid_loss = 0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double initial_train_loss = 0;  // before the first update
};

/// Summary selector: v_T from the code encoder, v_S per candidate from the summary
/// encoder, then concat -> linear -> tanh -> linear -> sigmoid.
class NeuralMetaModel final : public Selector {
public:
    NeuralMetaModel(MetaModelConfig config, std::shared_ptr<const embeddings::EmbeddingTable> code_table,
                    std::shared_ptr<const embeddings::EmbeddingTable> summary_table, TrainingSubset subset,
                    std::span<const Tokens> code_vocab_corpus = {}, std::span<const Tokens> summary_vocab_corpus = {});

    const MetaModelConfig& config() const { return config_; }
    diff::ParameterSet& parameters() { return params_; }
    const diff::ParameterSet& parameters() const { return params_; }

    /// Precomputes embeddings of every token seen in `lists` (not thread-safe; call before sharing).
    void warm_cache(std::span<const Tokens> lists, Side side);

    SequenceBatch make_batch(std::span<const Tokens* const> lists, Side side) const;

    /// Encoder output for each list, [B, out].
    diff::Var encode(std::span<const Tokens* const> lists, Side side) const;

    /// Probabilities [N] for all candidates of the referenced segments, flattened.
    diff::Var forward(std::span<const SegmentRef> items) const;

    std::vector<double> score_candidates(const Tokens& code, std::span<const Tokens> candidates) const;

    std::vector<double> predict(const CodeSegment& segment, const CandidateSet& set) const override;
    std::vector<std::vector<double>> predict_many(std::span<const SegmentRef> items) const override;
    TrainingSubset training_subset() const override { return subset_; }
    std::string name() const override;

    const Encoder& code_encoder() const { return *code_encoder_; }
    const Encoder& summary_encoder() const { return *summary_encoder_; }

    /// Zeroes the second head layer, making every probability exactly 0.5.
    void zero_head();

    void save(const std::filesystem::path& stem) const;
    void load(const std::filesystem::path& stem);

private:
    const embeddings::EmbeddingTable& table(Side side) const;

    MetaModelConfig config_;
    std::shared_ptr<const embeddings::EmbeddingTable> code_table_;
    std::shared_ptr<const embeddings::EmbeddingTable> summary_table_;
    TrainingSubset subset_;
    diff::ParameterSet params_;
    std::unique_ptr<Encoder> code_encoder_;
    std::unique_ptr<Encoder> summary_encoder_;
    diff::Var head_w1_, head_b1_, head_w2_, head_b2_;
    // fine-tune mode: trainable per-side token tables, row 0 reserved for unknown tokens
    diff::Var code_tokens_, summary_tokens_;
    std::unordered_map<std::string, std::size_t> code_ids_, summary_ids_;
    std::unordered_map<std::string, std::vector<double>> code_cache_, summary_cache_;
};

using EpochCallback = std::function<void(const EpochRecord&, const NeuralMetaModel&)>;

/// Mini-batch Adam on per-candidate BCE; keeps the parameters of the epoch with
/// the lowest validation loss (training loss when no validation data is given).
TrainingHistory train(NeuralMetaModel& model, std::span<const TrainingExample> train_set,
                      std::span<const TrainingExample> valid_set, const EpochCallback& on_epoch = {});

/// Mean per-candidate BCE over a data set without building gradients.
double evaluate_loss(const NeuralMetaModel& model, std::span<const TrainingExample> data);

} // namespace metasum::neural
