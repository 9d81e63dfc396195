#include "metasum/features.hpp"

#include "metasum/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace metasum::features {

std::vector<double> FeatureVector::values() const
{
    return {code_freq_hmean, summary_freq_hmean, static_cast<double>(code_length),
            static_cast<double>(summary_length), distinctiveness};
}

void UnigramDistribution::add(const std::string& token, std::int64_t n)
{
    counts_[token] += n;
    total_ += n;
}

std::int64_t UnigramDistribution::count(const std::string& token) const
{
    const auto it = counts_.find(token);
    return it == counts_.end() ? 0 : it->second;
}

double UnigramDistribution::prob(const std::string& token) const
{
    return total_ == 0 ? 0.0 : static_cast<double>(count(token)) / static_cast<double>(total_);
}

std::vector<std::string> UnigramDistribution::support() const
{
    std::vector<std::string> out;
    out.reserve(counts_.size());
    for (const auto& [w, _] : counts_)
        out.push_back(w);
    std::sort(out.begin(), out.end());
    return out;
}

double harmonic_mean_freq(std::span<const std::string> tokens, const Vocabulary& vocab)
{
    require(!tokens.empty(), ErrorKind::precondition, "harmonic_mean_freq: empty token list");
    double inv = 0.0;
    for (const auto& t : tokens) {
        const auto c = vocab.count(t);
        inv += 1.0 / static_cast<double>(c > 0 ? c : 1);
    }
    return static_cast<double>(tokens.size()) / inv;
}

UnigramDistribution unigram_distribution(std::span<const Tokens> token_lists)
{
    UnigramDistribution d;
    for (const auto& list : token_lists)
        for (const auto& t : list)
            d.add(t);
    require(d.total() > 0, ErrorKind::precondition, "unigram_distribution: no tokens");
    return d;
}

double kl_distinctiveness(const UnigramDistribution& candidate, const UnigramDistribution& pooled)
{
    require(candidate.total() > 0 && pooled.total() > 0, ErrorKind::precondition,
            "kl_distinctiveness: empty distribution");
    const auto support = candidate.support();
    std::size_t unseen = 0;
    for (const auto& w : support)
        if (pooled.count(w) == 0)
            ++unseen;

    const double total = static_cast<double>(pooled.total());
    const double union_size = static_cast<double>(pooled.support_size() + unseen);
    double kl = 0.0;
    for (const auto& w : support) {
        const double p = candidate.prob(w);
        const double q = unseen == 0 ? pooled.prob(w)
                                     : (static_cast<double>(pooled.count(w)) + 1.0) / (total + union_size);
        kl += p * std::log(p / q);
    }
    return std::max(0.0, kl);
}

FeatureContext build_context(const Dataset& ds, std::span<const std::string> train_ids)
{
    std::unordered_set<std::string> keep(train_ids.begin(), train_ids.end());
    FeatureContext ctx;
    ctx.pooled.resize(ds.model_ids.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& seg = ds.segments[i];
        if (!keep.count(seg.id))
            continue;
        for (const auto& t : seg.code_tokens)
            ctx.code_vocab.add(t);
        for (const auto& t : seg.reference_tokens)
            ctx.summary_vocab.add(t);
        const auto& set = ds.candidate_sets[i];
        for (std::size_t k = 0; k < set.candidates.size(); ++k)
            for (const auto& t : set.candidates[k].tokens)
                ctx.pooled[k].add(t);
    }
    require(ctx.code_vocab.total() > 0, ErrorKind::empty_input, "build_context: no training segments");
    return ctx;
}

FeatureVector extract_features(const CodeSegment& segment, const Candidate& candidate, const Vocabulary& code_vocab,
                               const Vocabulary& summary_vocab, const UnigramDistribution& pooled)
{
    FeatureVector f;
    f.code_freq_hmean = harmonic_mean_freq(segment.code_tokens, code_vocab);
    f.summary_freq_hmean = harmonic_mean_freq(candidate.tokens, summary_vocab);
    f.code_length = static_cast<std::int64_t>(segment.code_tokens.size());
    f.summary_length = static_cast<std::int64_t>(candidate.tokens.size());
    UnigramDistribution own;
    for (const auto& t : candidate.tokens)
        own.add(t);
    f.distinctiveness = kl_distinctiveness(own, pooled);
    return f;
}

namespace {

std::vector<std::size_t> offsets_of(std::span<const SegmentRef> items)
{
    std::vector<std::size_t> offsets(items.size() + 1, 0);
    for (std::size_t i = 0; i < items.size(); ++i)
        offsets[i + 1] = offsets[i] + items[i].candidates->candidates.size();
    return offsets;
}

void extract_one(const FeatureContext& ctx, const SegmentRef& item, FeatureVector* out)
{
    const auto& cands = item.candidates->candidates;
    require(cands.size() <= ctx.pooled.size(), ErrorKind::schema, "extract_features: more candidates than models");
    for (std::size_t k = 0; k < cands.size(); ++k)
        out[k] = extract_features(*item.segment, cands[k], ctx.code_vocab, ctx.summary_vocab, ctx.pooled[k]);
}

} // namespace

std::vector<FeatureVector> extract_all_serial(const FeatureContext& ctx, std::span<const SegmentRef> items)
{
    const auto offsets = offsets_of(items);
    std::vector<FeatureVector> out(offsets.back());
    for (std::size_t i = 0; i < items.size(); ++i)
        extract_one(ctx, items[i], out.data() + offsets[i]);
    return out;
}

std::vector<FeatureVector> extract_all(const FeatureContext& ctx, std::span<const SegmentRef> items)
{
    const auto offsets = offsets_of(items);
    std::vector<FeatureVector> out(offsets.back());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
    // Exceptions must not escape the parallel region; the first one is rethrown.
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            extract_one(ctx, items[i], out.data() + offsets[i]);
        } catch (...) {
#pragma omp critical(metasum_features_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

// ---- logistic regression -------------------------------------------------

namespace {

double sigmoid(double z)
{
    if (z >= 0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

double logreg_objective(std::span<const double> weights, double bias, const Matrix& x, std::span<const int> y,
                        const ClassWeights& cw, double l2, std::vector<double>* grad_w, double* grad_b)
{
    const std::size_t d = weights.size();
    if (grad_w)
        grad_w->assign(d, 0.0);
    double gb = 0.0;
    double loss = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = bias;
        for (std::size_t k = 0; k < d; ++k)
            z += weights[k] * x[i][k];
        const double w = y[i] ? cw.positive : cw.negative;
        // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
        loss += w * (y[i] ? softplus(-z) : softplus(z));
        weight_sum += w;
        const double r = w * (sigmoid(z) - static_cast<double>(y[i]));
        if (grad_w)
            for (std::size_t k = 0; k < d; ++k)
                (*grad_w)[k] += r * x[i][k];
        gb += r;
    }
    double reg = 0.0;
    for (std::size_t k = 0; k < d; ++k)
        reg += weights[k] * weights[k];
    if (grad_w)
        for (std::size_t k = 0; k < d; ++k)
            (*grad_w)[k] = (*grad_w)[k] / weight_sum + l2 * weights[k];
    if (grad_b)
        *grad_b = gb / weight_sum;
    return loss / weight_sum + 0.5 * l2 * reg;
}

LogRegFit logreg_train(const Matrix& x, std::span<const int> y, const LogRegOptions& opt)
{
    require(!x.empty() && x.size() == y.size(), ErrorKind::precondition, "logreg_train: features and labels differ");
    require(opt.class_weights.negative > 0 && opt.class_weights.positive > 0, ErrorKind::config,
            "logreg_train: class weights must be positive");
    const std::size_t d = x.front().size();
    std::size_t positives = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i].size() == d, ErrorKind::shape, "logreg_train: ragged feature rows");
        positives += y[i] != 0;
    }
    require(positives > 0 && positives < x.size(), ErrorKind::degenerate_data,
            "logreg_train: need examples of both classes");

    LogRegModel m;
    m.class_weights = opt.class_weights;
    m.feature_means.assign(d, 0.0);
    m.feature_stds.assign(d, 0.0);
    const double n = static_cast<double>(x.size());
    for (const auto& row : x)
        for (std::size_t k = 0; k < d; ++k)
            m.feature_means[k] += row[k] / n;
    for (const auto& row : x)
        for (std::size_t k = 0; k < d; ++k)
            m.feature_stds[k] += (row[k] - m.feature_means[k]) * (row[k] - m.feature_means[k]) / n;
    for (auto& s : m.feature_stds) {
        s = std::sqrt(s);
        if (!(s > 1e-12))
            s = 1.0;  // constant feature: standardises to 0
    }

    Matrix z(x.size(), std::vector<double>(d));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t k = 0; k < d; ++k)
            z[i][k] = (x[i][k] - m.feature_means[k]) / m.feature_stds[k];

    m.weights.assign(d, 0.0);
    LogRegFit fit;
    std::vector<double> gw;
    double gb = 0.0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        fit.loss_history.push_back(logreg_objective(m.weights, m.bias, z, y, m.class_weights, opt.l2, &gw, &gb));
        for (std::size_t k = 0; k < d; ++k)
            m.weights[k] -= opt.learning_rate * gw[k];
        m.bias -= opt.learning_rate * gb;
    }
    fit.loss_history.push_back(logreg_objective(m.weights, m.bias, z, y, m.class_weights, opt.l2, nullptr, nullptr));
    fit.model = std::move(m);
    return fit;
}

double logreg_predict(const LogRegModel& model, std::span<const double> x)
{
    require(x.size() == model.weights.size(), ErrorKind::shape, "logreg_predict: feature count mismatch");
    double z = model.bias;
    for (std::size_t k = 0; k < x.size(); ++k)
        z += model.weights[k] * (x[k] - model.feature_means[k]) / model.feature_stds[k];
    return sigmoid(z);
}

nlohmann::json to_json(const LogRegModel& m)
{
    return {{"format_version", LogRegModel::format_version},
            {"weights", m.weights},
            {"bias", m.bias},
            {"feature_means", m.feature_means},
            {"feature_stds", m.feature_stds},
            {"class_weights", {{"negative", m.class_weights.negative}, {"positive", m.class_weights.positive}}}};
}

LogRegModel logreg_from_json(const nlohmann::json& j)
{
    try {
        require(j.at("format_version").get<int>() == LogRegModel::format_version, ErrorKind::schema,
                "logreg model: unsupported format_version");
        LogRegModel m;
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.feature_means = j.at("feature_means").get<std::vector<double>>();
        m.feature_stds = j.at("feature_stds").get<std::vector<double>>();
        m.class_weights.negative = j.at("class_weights").at("negative").get<double>();
        m.class_weights.positive = j.at("class_weights").at("positive").get<double>();
        require(m.weights.size() == m.feature_means.size() && m.weights.size() == m.feature_stds.size(),
                ErrorKind::schema, "logreg model: inconsistent vector lengths");
        for (double s : m.feature_stds)
            require(s > 0, ErrorKind::schema, "logreg model: non-positive feature std");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::schema, std::string("logreg model: ") + e.what());
    }
}

std::vector<double> FeatureSelector::predict(const CodeSegment& segment, const CandidateSet& set) const
{
    require(!set.candidates.empty(), ErrorKind::precondition, "predict: no candidates");
    std::vector<FeatureVector> fv(set.candidates.size());
    extract_one(ctx_, SegmentRef{&segment, &set}, fv.data());
    std::vector<double> out;
    out.reserve(fv.size());
    for (const auto& f : fv)
        out.push_back(logreg_predict(model_, f.values()));
    return out;
}

FeatureTrainingResult train_feature_selector(const Dataset& ds, std::span<const std::string> context_ids,
                                             std::span<const SegmentRef> train_items,
                                             std::span<const std::vector<int>> labels, const LogRegOptions& opt,
                                             TrainingSubset subset)
{
    require(train_items.size() == labels.size(), ErrorKind::alignment, "train_feature_selector: labels misaligned");
    auto ctx = build_context(ds, context_ids);
    const auto fv = extract_all(ctx, train_items);
    Matrix x;
    std::vector<int> y;
    x.reserve(fv.size());
    for (const auto& f : fv)
        x.push_back(f.values());
    for (std::size_t i = 0; i < train_items.size(); ++i) {
        require(labels[i].size() == train_items[i].candidates->candidates.size(), ErrorKind::alignment,
                "train_feature_selector: label count differs from candidate count");
        y.insert(y.end(), labels[i].begin(), labels[i].end());
    }
    auto fit = logreg_train(x, y, opt);
    return {FeatureSelector(std::move(ctx), std::move(fit.model), subset), std::move(fit.loss_history)};
}

} // namespace metasum::features
