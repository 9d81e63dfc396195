#include "metasum/neural_meta.hpp"

#include "metasum/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace metasum::neural {

using diff::Shape;
using diff::Tensor;
using diff::Var;

const char* to_string(Variant v) { return v == Variant::lstm ? "lstm" : "trn"; }

Variant parse_variant(const std::string& s)
{
    if (s == "lstm")
        return Variant::lstm;
    if (s == "trn")
        return Variant::trn;
    fail(ErrorKind::config, "unknown neural variant '" + s + "' (expected lstm|trn)");
}

void MetaModelConfig::validate() const
{
    require(code_input_len >= 1 && summary_input_len >= 1, ErrorKind::config, "input lengths must be >= 1");
    require(embedding_dim >= 1 && hidden_dim >= 1 && encoder_layers >= 1, ErrorKind::config,
            "dims and layers must be >= 1");
    require(batch_size >= 1, ErrorKind::config, "batch_size must be >= 1");
    require(learning_rate > 0, ErrorKind::config, "learning_rate must be positive");
    require(epochs >= 0 && patience >= 1, ErrorKind::config, "epochs >= 0 and patience >= 1 required");
    if (variant == Variant::trn)
        require(attention_heads >= 1 && hidden_dim % attention_heads == 0, ErrorKind::config,
                "attention_heads must divide hidden_dim");
}

nlohmann::json to_json(const MetaModelConfig& c)
{
    return {{"variant", to_string(c.variant)},
            {"code_input_len", c.code_input_len},
            {"summary_input_len", c.summary_input_len},
            {"embedding_dim", c.embedding_dim},
            {"hidden_dim", c.hidden_dim},
            {"encoder_layers", c.encoder_layers},
            {"attention_heads", c.attention_heads},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"patience", c.patience},
            {"seed", c.seed},
            {"fine_tune_embeddings", c.fine_tune_embeddings}};
}

MetaModelConfig config_from_json(const nlohmann::json& j)
{
    MetaModelConfig c;
    try {
        if (j.contains("variant"))
            c.variant = parse_variant(j.at("variant").get<std::string>());
        c.code_input_len = j.value("code_input_len", c.code_input_len);
        c.summary_input_len = j.value("summary_input_len", c.summary_input_len);
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
        c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
        c.attention_heads = j.value("attention_heads", c.attention_heads);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epochs = j.value("epochs", c.epochs);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
        c.fine_tune_embeddings = j.value("fine_tune_embeddings", c.fine_tune_embeddings);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("meta-model config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng)
{
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values())
        v = rng.uniform(-bound, bound);
    return t;
}

/// Column-broadcast of mask[:, t] to [B, width].
Tensor step_mask(const Tensor& mask, std::size_t t, std::size_t width, bool invert)
{
    const std::size_t batch = mask.dim(0), steps = mask.dim(1);
    Tensor m({batch, width});
    for (std::size_t b = 0; b < batch; ++b) {
        const double v = mask[b * steps + t] != 0.0 ? 1.0 : 0.0;
        std::fill_n(m.data() + b * width, width, invert ? 1.0 - v : v);
    }
    return m;
}

} // namespace

// ---- LSTM ------------------------------------------------------------------

LstmEncoder::LstmEncoder(diff::ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden, int layers, Rng& rng)
    : hidden_(hidden)
{
    std::size_t in = input_dim;
    for (int l = 0; l < layers; ++l) {
        auto make = [&](const char* dir) {
            const std::string p = prefix + ".l" + std::to_string(l) + "." + dir;
            Direction d;
            d.w_x = params.add(p + ".w_x", fan_in_uniform({in, 4 * hidden}, hidden, rng));
            d.w_h = params.add(p + ".w_h", fan_in_uniform({hidden, 4 * hidden}, hidden, rng));
            d.b = params.add(p + ".b", fan_in_uniform({4 * hidden}, hidden, rng));
            return d;
        };
        Direction fw = make("fw");
        Direction bw = make("bw");
        layers_.emplace_back(std::move(fw), std::move(bw));
        in = 2 * hidden;
    }
}

Var LstmEncoder::run_direction(const Direction& d, const Var& x, const Tensor& mask, bool reverse) const
{
    const std::size_t batch = x.shape()[0], steps = x.shape()[1], h = hidden_;
    const Var projected = diff::add(diff::matmul(x, d.w_x), d.b);  // [B, T, 4H]
    Var hs = diff::constant(Tensor({batch, h}));
    Var cs = diff::constant(Tensor({batch, h}));
    std::vector<Var> outputs(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = reverse ? steps - 1 - k : k;
        std::size_t live = 0;
        for (std::size_t b = 0; b < batch; ++b)
            live += mask[b * steps + t] != 0.0;
        if (live == 0) {
            // every row padded here: the state carries over unchanged
            outputs[t] = hs;
            continue;
        }
        const Var gates = diff::add(diff::time_step(projected, t), diff::matmul(hs, d.w_h));
        const Var i = diff::sigmoid(diff::slice_last(gates, 0, h));
        const Var f = diff::sigmoid(diff::slice_last(gates, h, h));
        const Var g = diff::tanh(diff::slice_last(gates, 2 * h, h));
        const Var o = diff::sigmoid(diff::slice_last(gates, 3 * h, h));
        const Var c_new = diff::add(diff::mul(f, cs), diff::mul(i, g));
        const Var h_new = diff::mul(o, diff::tanh(c_new));
        if (live == batch) {
            cs = c_new;
            hs = h_new;
        } else {
            const Var keep = diff::constant(step_mask(mask, t, h, false));
            const Var hold = diff::constant(step_mask(mask, t, h, true));
            cs = diff::add(diff::mul(keep, c_new), diff::mul(hold, cs));
            hs = diff::add(diff::mul(keep, h_new), diff::mul(hold, hs));
        }
        outputs[t] = hs;
    }
    return diff::stack_steps(outputs);
}

Var LstmEncoder::encode(const Var& x, const Tensor& mask) const
{
    Var layer_in = x;
    for (const auto& [fw, bw] : layers_) {
        const std::vector<Var> both{run_direction(fw, layer_in, mask, false), run_direction(bw, layer_in, mask, true)};
        layer_in = diff::concat(both);
    }
    return diff::masked_mean_pool(layer_in, mask);
}

// ---- transformer ---------------------------------------------------------------

TransformerEncoder::TransformerEncoder(diff::ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                                       std::size_t model_dim, int layers, int heads, Rng& rng)
    : dim_(model_dim), heads_(static_cast<std::size_t>(heads))
{
    const std::size_t ff = 2 * model_dim;
    w_in_ = params.add(prefix + ".w_in", fan_in_uniform({input_dim, model_dim}, input_dim, rng));
    b_in_ = params.add(prefix + ".b_in", fan_in_uniform({model_dim}, input_dim, rng));
    for (int l = 0; l < layers; ++l) {
        const std::string p = prefix + ".l" + std::to_string(l);
        Layer L;
        L.w_qkv = params.add(p + ".w_qkv", fan_in_uniform({model_dim, 3 * model_dim}, model_dim, rng));
        L.b_qkv = params.add(p + ".b_qkv", fan_in_uniform({3 * model_dim}, model_dim, rng));
        L.w_o = params.add(p + ".w_o", fan_in_uniform({model_dim, model_dim}, model_dim, rng));
        L.b_o = params.add(p + ".b_o", fan_in_uniform({model_dim}, model_dim, rng));
        L.ln1_g = params.add(p + ".ln1_g", Tensor({model_dim}, 1.0));
        L.ln1_b = params.add(p + ".ln1_b", Tensor({model_dim}, 0.0));
        L.w_ff1 = params.add(p + ".w_ff1", fan_in_uniform({model_dim, ff}, model_dim, rng));
        L.b_ff1 = params.add(p + ".b_ff1", fan_in_uniform({ff}, model_dim, rng));
        L.w_ff2 = params.add(p + ".w_ff2", fan_in_uniform({ff, model_dim}, ff, rng));
        L.b_ff2 = params.add(p + ".b_ff2", fan_in_uniform({model_dim}, ff, rng));
        L.ln2_g = params.add(p + ".ln2_g", Tensor({model_dim}, 1.0));
        L.ln2_b = params.add(p + ".ln2_b", Tensor({model_dim}, 0.0));
        layers_.push_back(std::move(L));
    }
}

Tensor TransformerEncoder::positional_encoding(std::size_t steps, std::size_t dim)
{
    Tensor pe({steps, dim});
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < dim; ++i) {
            const double angle = static_cast<double>(t)
                                 / std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
            pe[t * dim + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

Var TransformerEncoder::encode(const Var& x, const Tensor& mask) const
{
    const std::size_t steps = x.shape()[1];
    const std::size_t head_dim = dim_ / heads_;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Var h = diff::add(diff::add(diff::matmul(x, w_in_), b_in_), diff::constant(positional_encoding(steps, dim_)));
    for (const auto& L : layers_) {
        const Var qkv = diff::add(diff::matmul(h, L.w_qkv), L.b_qkv);
        std::vector<Var> contexts;
        for (std::size_t k = 0; k < heads_; ++k) {
            const Var q = diff::slice_last(qkv, k * head_dim, head_dim);
            const Var kk = diff::slice_last(qkv, dim_ + k * head_dim, head_dim);
            const Var v = diff::slice_last(qkv, 2 * dim_ + k * head_dim, head_dim);
            const Var scores = diff::scale(diff::batched_matmul(q, kk, true), inv_sqrt);
            contexts.push_back(diff::batched_matmul(diff::masked_softmax(scores, mask), v));
        }
        const Var attended = diff::add(diff::matmul(diff::concat(contexts), L.w_o), L.b_o);
        h = diff::layer_norm(diff::add(h, attended), L.ln1_g, L.ln1_b);
        const Var ff = diff::add(diff::matmul(diff::relu(diff::add(diff::matmul(h, L.w_ff1), L.b_ff1)), L.w_ff2),
                                 L.b_ff2);
        h = diff::layer_norm(diff::add(h, ff), L.ln2_g, L.ln2_b);
    }
    return diff::masked_mean_pool(h, mask);
}

// ---- model ---------------------------------------------------------------------

NeuralMetaModel::NeuralMetaModel(MetaModelConfig config, std::shared_ptr<const embeddings::EmbeddingTable> code_table,
                                 std::shared_ptr<const embeddings::EmbeddingTable> summary_table,
                                 TrainingSubset subset, std::span<const Tokens> code_vocab_corpus,
                                 std::span<const Tokens> summary_vocab_corpus)
    : config_(config), code_table_(std::move(code_table)), summary_table_(std::move(summary_table)), subset_(subset)
{
    config_.validate();
    require(code_table_ && summary_table_, ErrorKind::precondition, "NeuralMetaModel: embedding tables required");
    require(code_table_->dim() == config_.embedding_dim && summary_table_->dim() == config_.embedding_dim,
            ErrorKind::config, "NeuralMetaModel: embedding_dim differs from the embedding tables");

    Rng rng(derive_seed(config_.seed, "init"));
    const auto d = static_cast<std::size_t>(config_.embedding_dim);
    const auto hdim = static_cast<std::size_t>(config_.hidden_dim);
    auto make_encoder = [&](const char* prefix) -> std::unique_ptr<Encoder> {
        if (config_.variant == Variant::lstm)
            return std::make_unique<LstmEncoder>(params_, prefix, d, hdim, config_.encoder_layers, rng);
        return std::make_unique<TransformerEncoder>(params_, prefix, d, hdim, config_.encoder_layers,
                                                    config_.attention_heads, rng);
    };
    code_encoder_ = make_encoder("code");
    summary_encoder_ = make_encoder("summary");
    const std::size_t head_in = code_encoder_->output_dim() + summary_encoder_->output_dim();
    head_w1_ = params_.add("head.w1", fan_in_uniform({head_in, hdim}, head_in, rng));
    head_b1_ = params_.add("head.b1", fan_in_uniform({hdim}, head_in, rng));
    head_w2_ = params_.add("head.w2", fan_in_uniform({hdim, 1}, hdim, rng));
    head_b2_ = params_.add("head.b2", fan_in_uniform({1}, hdim, rng));

    if (config_.fine_tune_embeddings) {
        auto build = [&](std::span<const Tokens> corpus, const embeddings::EmbeddingTable& tab,
                         std::unordered_map<std::string, std::size_t>& ids, const char* name) {
            std::vector<std::string> order;
            for (const auto& list : corpus)
                for (const auto& t : list)
                    if (ids.emplace(t, ids.size() + 1).second)
                        order.push_back(t);
            Tensor init({order.size() + 1, d});
            for (std::size_t r = 0; r < order.size(); ++r) {
                const auto v = tab.embed(order[r]);
                std::copy(v.begin(), v.end(), init.data() + (r + 1) * d);
            }
            return params_.add(name, std::move(init));
        };
        code_tokens_ = build(code_vocab_corpus, *code_table_, code_ids_, "embed.code");
        summary_tokens_ = build(summary_vocab_corpus, *summary_table_, summary_ids_, "embed.summary");
    }
}

std::string NeuralMetaModel::name() const { return std::string("meta_") + to_string(config_.variant); }

const embeddings::EmbeddingTable& NeuralMetaModel::table(Side side) const
{
    return side == Side::code ? *code_table_ : *summary_table_;
}

void NeuralMetaModel::warm_cache(std::span<const Tokens> lists, Side side)
{
    auto& cache = side == Side::code ? code_cache_ : summary_cache_;
    const auto& tab = table(side);
    for (const auto& list : lists)
        for (const auto& t : list)
            if (!cache.count(t))
                cache.emplace(t, tab.embed(t));
}

SequenceBatch NeuralMetaModel::make_batch(std::span<const Tokens* const> lists, Side side) const
{
    const std::size_t cap = static_cast<std::size_t>(side == Side::code ? config_.code_input_len
                                                                        : config_.summary_input_len);
    std::size_t steps = 1;
    for (const auto* l : lists)
        steps = std::max(steps, std::min(cap, l->size()));
    const std::size_t batch = lists.size();
    const auto d = static_cast<std::size_t>(config_.embedding_dim);
    SequenceBatch out{Tensor({batch, steps, d}), Tensor({batch, steps}), {}};
    const auto& cache = side == Side::code ? code_cache_ : summary_cache_;
    const auto& ids = side == Side::code ? code_ids_ : summary_ids_;
    if (config_.fine_tune_embeddings)
        out.token_ids.assign(batch * steps, 0);
    for (std::size_t b = 0; b < batch; ++b) {
        const auto& list = *lists[b];
        const std::size_t len = std::min(cap, list.size());  // keeps the head of long sequences
        for (std::size_t t = 0; t < len; ++t) {
            out.mask[b * steps + t] = 1.0;
            if (config_.fine_tune_embeddings) {
                const auto it = ids.find(list[t]);
                out.token_ids[b * steps + t] = it == ids.end() ? 0 : it->second;
                continue;
            }
            double* dst = out.inputs.data() + (b * steps + t) * d;
            if (const auto it = cache.find(list[t]); it != cache.end()) {
                std::copy(it->second.begin(), it->second.end(), dst);
            } else {
                const auto v = table(side).embed(list[t]);
                std::copy(v.begin(), v.end(), dst);
            }
        }
    }
    return out;
}

Var NeuralMetaModel::encode(std::span<const Tokens* const> lists, Side side) const
{
    require(!lists.empty(), ErrorKind::precondition, "encode: no sequences");
    auto batch = make_batch(lists, side);
    Var x;
    if (config_.fine_tune_embeddings) {
        const Shape lead{batch.mask.dim(0), batch.mask.dim(1)};
        x = diff::embedding_lookup(side == Side::code ? code_tokens_ : summary_tokens_, batch.token_ids, lead);
    } else {
        x = diff::constant(std::move(batch.inputs));
    }
    const Encoder& enc = side == Side::code ? *code_encoder_ : *summary_encoder_;
    return enc.encode(x, batch.mask);
}

Var NeuralMetaModel::forward(std::span<const SegmentRef> items) const
{
    require(!items.empty(), ErrorKind::precondition, "forward: no segments");
    std::vector<const Tokens*> code;
    std::vector<const Tokens*> summaries;
    std::vector<std::size_t> owner;
    for (std::size_t s = 0; s < items.size(); ++s) {
        const auto& cands = items[s].candidates->candidates;
        require(!cands.empty(), ErrorKind::precondition, "forward: segment without candidates");
        code.push_back(&items[s].segment->code_tokens);
        for (const auto& c : cands) {
            summaries.push_back(&c.tokens);
            owner.push_back(s);
        }
    }
    const Var v_code = encode(code, Side::code);  // one v_T per segment
    const Var v_summary = encode(summaries, Side::summary);
    const Var v_code_per_candidate = diff::embedding_lookup(v_code, owner, {owner.size()});
    const std::vector<Var> parts{v_code_per_candidate, v_summary};
    const Var hidden = diff::tanh(diff::add(diff::matmul(diff::concat(parts), head_w1_), head_b1_));
    const Var logits = diff::add(diff::matmul(hidden, head_w2_), head_b2_);
    return diff::reshape(diff::sigmoid(logits), {owner.size()});
}

std::vector<double> NeuralMetaModel::score_candidates(const Tokens& code, std::span<const Tokens> candidates) const
{
    require(!candidates.empty(), ErrorKind::precondition, "score_candidates: no candidates");
    CodeSegment seg{"", code, {}};
    CandidateSet set;
    for (const auto& c : candidates)
        set.candidates.push_back({"", c});
    const SegmentRef ref{&seg, &set};
    diff::NoGradGuard guard;
    const Var p = forward(std::span(&ref, 1));
    return {p.value().values().begin(), p.value().values().end()};
}

std::vector<double> NeuralMetaModel::predict(const CodeSegment& segment, const CandidateSet& set) const
{
    require(!set.candidates.empty(), ErrorKind::precondition, "predict: no candidates");
    const SegmentRef ref{&segment, &set};
    diff::NoGradGuard guard;
    const Var p = forward(std::span(&ref, 1));
    return {p.value().values().begin(), p.value().values().end()};
}

std::vector<std::vector<double>> NeuralMetaModel::predict_many(std::span<const SegmentRef> items) const
{
    std::vector<std::vector<double>> out;
    out.reserve(items.size());
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    diff::NoGradGuard guard;
    for (std::size_t start = 0; start < items.size(); start += bs) {
        const auto chunk = items.subspan(start, std::min(bs, items.size() - start));
        const Var p = forward(chunk);
        std::size_t off = 0;
        for (const auto& it : chunk) {
            const std::size_t n = it.candidates->candidates.size();
            out.emplace_back(p.value().data() + off, p.value().data() + off + n);
            off += n;
        }
    }
    return out;
}

void NeuralMetaModel::zero_head()
{
    head_w2_.value().fill(0.0);
    head_b2_.value().fill(0.0);
}

void NeuralMetaModel::save(const std::filesystem::path& stem) const
{
    const auto arrays = diff::named_values(params_);
    diff::save_checkpoint(stem, arrays);
}

void NeuralMetaModel::load(const std::filesystem::path& stem)
{
    const auto arrays = diff::load_checkpoint(stem);
    diff::assign(params_, arrays);
}

// ---- training ------------------------------------------------------------------

namespace {

Tensor targets_of(std::span<const TrainingExample> batch)
{
    std::vector<double> t;
    for (const auto& ex : batch) {
        require(ex.labels.size() == ex.ref.candidates->candidates.size(), ErrorKind::alignment,
                "train: label count differs from candidate count for " + ex.ref.segment->id);
        for (int l : ex.labels)
            t.push_back(l ? 1.0 : 0.0);
    }
    const std::size_t n = t.size();
    return Tensor({n}, std::move(t));
}

std::vector<SegmentRef> refs_of(std::span<const TrainingExample> batch)
{
    std::vector<SegmentRef> refs;
    refs.reserve(batch.size());
    for (const auto& ex : batch)
        refs.push_back(ex.ref);
    return refs;
}

void warm(NeuralMetaModel& model, std::span<const TrainingExample> data)
{
    std::vector<Tokens> code, summaries;
    for (const auto& ex : data) {
        code.push_back(ex.ref.segment->code_tokens);
        for (const auto& c : ex.ref.candidates->candidates)
            summaries.push_back(c.tokens);
    }
    model.warm_cache(code, Side::code);
    model.warm_cache(summaries, Side::summary);
}

} // namespace

double evaluate_loss(const NeuralMetaModel& model, std::span<const TrainingExample> data)
{
    require(!data.empty(), ErrorKind::precondition, "evaluate_loss: empty data");
    diff::NoGradGuard guard;
    const auto bs = static_cast<std::size_t>(model.config().batch_size);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < data.size(); start += bs) {
        const auto chunk = data.subspan(start, std::min(bs, data.size() - start));
        const auto refs = refs_of(chunk);
        const Tensor t = targets_of(chunk);
        const Var loss = diff::bce_loss(model.forward(refs), t);
        total += loss.item() * static_cast<double>(t.size());
        count += t.size();
    }
    return total / static_cast<double>(count);
}

TrainingHistory train(NeuralMetaModel& model, std::span<const TrainingExample> train_set,
                      std::span<const TrainingExample> valid_set, const EpochCallback& on_epoch)
{
    require(!train_set.empty(), ErrorKind::precondition, "train: empty training set");
    const auto& cfg = model.config();
    warm(model, train_set);
    warm(model, valid_set);

    TrainingHistory history;
    history.initial_train_loss = evaluate_loss(model, train_set);
    diff::Adam adam(model.parameters(), cfg.learning_rate);
    Rng rng(derive_seed(cfg.seed, "batches"));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);

    double best = INFINITY;
    std::vector<Tensor> best_params = model.parameters().snapshot();
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.effective_epochs(); ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            std::vector<TrainingExample> batch;
            for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k)
                batch.push_back(train_set[order[k]]);
            const auto refs = refs_of(batch);
            const Tensor t = targets_of(batch);
            model.parameters().zero_grad();
            const Var loss = diff::bce_loss(model.forward(refs), t);
            diff::backward(loss);
            adam.step();
            total += loss.item() * static_cast<double>(t.size());
            count += t.size();
        }
        EpochRecord rec{epoch, total / static_cast<double>(count), 0.0};
        rec.valid_loss = valid_set.empty() ? rec.train_loss : evaluate_loss(model, valid_set);
        history.epochs.push_back(rec);
        if (on_epoch)
            on_epoch(rec, model);
        if (rec.valid_loss < best) {
            best = rec.valid_loss;
            best_params = model.parameters().snapshot();
            history.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    model.parameters().restore(best_params);
    return history;
}

} // namespace metasum::neural
