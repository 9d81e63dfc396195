#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace metasum::fx {

Dataset worked_example_dataset()
{
    std::istringstream in(
        R"({"id": "m1", "code": "public BigInteger getHelpfulVotes(){ return helpfulVotes; }", "reference": "gets the value of the helpful votes property", "candidates": [{"model": "NeuralCodeSum", "summary": "gets the value of the helpful votes property"}, {"model": "attendgru", "summary": "gets the value of the reason votes property"}, {"model": "ast-attendgru", "summary": "gets the value of the reason type property"}]})"
        "\n"
        R"({"id": "m2", "code": "public void displayLastButton(boolean b) { bottomPane.lastButton.setVisible(b); }", "reference": "determines whether to display the last button in the bottom pane", "candidates": [{"model": "NeuralCodeSum", "summary": "display the last button"}, {"model": "attendgru", "summary": "displays the last button"}, {"model": "ast-attendgru", "summary": "display the last button in the panel"}]})"
        "\n");
    return parse_jsonl(in);
}

std::array<double, 6> worked_example_exact()
{
    // m1: 8-token reference, one substituted word (attendgru) or two adjacent (ast-attendgru).
    const double attendgru = std::pow((7.0 / 8) * (5.0 / 7) * (3.0 / 6) * (2.0 / 5), 0.25);
    const double ast = std::pow((6.0 / 8) * (4.0 / 7) * (3.0 / 6) * (2.0 / 5), 0.25);
    // m2: 11-token reference; short candidates pay exp(1 - 11/c).
    const double short4 = std::exp(1.0 - 11.0 / 4.0);
    const double panel = std::exp(1.0 - 11.0 / 7.0) * std::pow((6.0 / 7) * (5.0 / 6) * (4.0 / 5) * (3.0 / 4), 0.25);
    return {1.0, attendgru, ast, short4, 0.0, panel};
}

diff::Tensor random_tensor(diff::Shape shape, Rng& rng, double lo, double hi)
{
    diff::Tensor t(std::move(shape));
    for (auto& v : t.values())
        v = rng.uniform(lo, hi);
    return t;
}

GradCheck check_gradients(const std::vector<diff::Var>& inputs, const std::function<diff::Var()>& loss, double h,
                          double floor)
{
    for (auto v : inputs)
        v.zero_grad();
    diff::backward(loss());
    std::vector<diff::Tensor> analytic;
    for (const auto& v : inputs)
        analytic.push_back(v.grad());

    GradCheck out;
    diff::NoGradGuard guard;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        diff::Var v = inputs[k];
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v.value()[i];
            v.value()[i] = saved + h;
            const double up = loss().item();
            v.value()[i] = saved - h;
            const double down = loss().item();
            v.value()[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
            out.max_rel_error = std::max(out.max_rel_error, rel);
            ++out.entries;
        }
    }
    return out;
}

diff::Var weighted_sum(const diff::Var& y, std::uint64_t seed)
{
    Rng rng(seed);
    return diff::sum(diff::mul(y, diff::constant(random_tensor(y.shape(), rng, 0.5, 1.5))));
}

std::shared_ptr<const embeddings::EmbeddingTable> tiny_table(int dim, std::vector<std::string> words,
                                                             std::uint64_t seed, std::size_t buckets)
{
    Rng rng(seed);
    std::vector<double> wv(words.size() * static_cast<std::size_t>(dim));
    for (auto& v : wv)
        v = rng.uniform(-1, 1);
    std::vector<float> ng(buckets * static_cast<std::size_t>(dim));
    for (auto& v : ng)
        v = static_cast<float>(rng.uniform(-1, 1));
    return std::make_shared<const embeddings::EmbeddingTable>(dim, embeddings::SubwordHasher(3, 6, buckets),
                                                              std::move(words), std::move(wv), std::move(ng));
}

SeparationFixture extreme_separation_fixture()
{
    SeparationFixture f;
    Rng rng(20);
    const std::vector<std::string> words{"returns", "the", "name", "of", "a", "user", "file", "reads", "list", "value"};
    for (int i = 0; i < 20; ++i) {
        const std::string id = "sep" + std::to_string(i);
        Tokens ref;
        for (std::size_t k = 0, n = 5 + rng.below(4); k < n; ++k)
            ref.push_back(words[rng.below(words.size())]);
        Tokens junk;
        for (std::size_t k = 0; k < ref.size(); ++k)
            junk.push_back("zz" + std::to_string(k));
        f.references.push_back({id, ref});
        f.a.push_back({id, ref});
        f.b.push_back({id, junk});
    }
    return f;
}

pipeline::RunConfig small_run_config(const std::filesystem::path& workdir, std::uint64_t seed)
{
    pipeline::RunConfig c;
    c.workdir = workdir;
    c.seed = seed;
    c.synth.segments = 300;
    c.embedding.dim = 16;
    c.embedding.buckets = 4096;
    c.embedding.epochs = 2;
    c.meta.embedding_dim = 16;
    c.meta.hidden_dim = 16;
    c.meta.epochs = 2;
    c.meta.learning_rate = 1e-3;
    c.logreg.epochs = 100;
    c.sig_iterations = 500;
    c.random_draws = 10;
    return c;
}

Dataset small_random_dataset(std::size_t n, std::size_t models, std::uint64_t seed)
{
    static const std::vector<std::string> words{"get", "set",  "the",   "value", "of",   "a",    "file",
                                                "list", "user", "name",  "read",  "write", "data", "returns"};
    Rng rng(seed);
    auto draw = [&](std::size_t len) {
        Tokens t;
        for (std::size_t i = 0; i < len; ++i)
            t.push_back(words[rng.below(words.size())]);
        return t;
    };
    std::vector<CodeSegment> segs;
    std::vector<CandidateSet> sets;
    for (std::size_t i = 0; i < n; ++i) {
        CodeSegment s{"s" + std::to_string(i), draw(3 + rng.below(6)), draw(4 + rng.below(5))};
        CandidateSet c{s.id, {}};
        for (std::size_t m = 0; m < models; ++m) {
            Tokens cand = s.reference_tokens;
            for (auto& w : cand)
                if (rng.coin(0.2 + 0.2 * static_cast<double>(m)))
                    w = words[rng.below(words.size())];
            c.candidates.push_back({"m" + std::to_string(m), cand});
        }
        segs.push_back(std::move(s));
        sets.push_back(std::move(c));
    }
    return make_dataset(std::move(segs), std::move(sets));
}

} // namespace metasum::fx

namespace metasum::fx {

namespace {

using diff::Shape;
using diff::Tensor;
using diff::Var;

Tensor partial_mask(std::size_t rows, std::size_t cols, Rng& rng)
{
    Tensor m({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t live = 1 + rng.below(cols);
        for (std::size_t c = 0; c < live; ++c)
            m[r * cols + c] = 1.0;
    }
    return m;
}

} // namespace

std::vector<NamedCheck> primitive_gradient_checks(std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<NamedCheck> out;
    auto p = [&](Shape s, double lo = -1.0, double hi = 1.0) { return diff::parameter(random_tensor(std::move(s), rng, lo, hi)); };
    auto run = [&](const std::string& name, const std::vector<Var>& inputs, const std::function<Var()>& f) {
        const std::uint64_t w = rng.next();
        out.push_back({name, check_gradients(inputs, [&] { return weighted_sum(f(), w); })});
    };

    {
        auto a = p({3, 4}), b = p({4, 5});
        run("matmul", {a, b}, [&] { return diff::matmul(a, b); });
        auto x = p({2, 3, 4});
        run("matmul_batched_lhs", {x, b}, [&] { return diff::matmul(x, b); });
    }
    {
        auto a = p({2, 3, 4}), b = p({2, 4, 5}), bt = p({2, 5, 4});
        run("batched_matmul", {a, b}, [&] { return diff::batched_matmul(a, b); });
        run("batched_matmul_transposed", {a, bt}, [&] { return diff::batched_matmul(a, bt, true); });
    }
    {
        auto a = p({2, 3, 4}), b = p({2, 3, 4}), v = p({4});
        run("add", {a, b}, [&] { return diff::add(a, b); });
        run("add_broadcast", {a, v}, [&] { return diff::add(a, v); });
        run("mul", {a, b}, [&] { return diff::mul(a, b); });
        run("scale", {a}, [&] { return diff::scale(a, -1.7); });
    }
    {
        auto a = p({2, 3}), b = p({2, 5});
        run("concat", {a, b}, [&] {
            const Var parts[] = {a, b, a};
            return diff::concat(parts);
        });
        run("slice_last", {b}, [&] { return diff::slice_last(b, 1, 3); });
        auto x = p({2, 4, 3});
        run("time_step", {x}, [&] { return diff::time_step(x, 2); });
        run("stack_steps", {a, b}, [&] {
            const Var steps[] = {a, diff::slice_last(b, 0, 3), a};
            return diff::stack_steps(steps);
        });
        run("reshape", {x}, [&] { return diff::reshape(x, {8, 3}); });
    }
    {
        auto a = p({3, 4}, -3, 3);
        run("sigmoid", {a}, [&] { return diff::sigmoid(a); });
        run("tanh", {a}, [&] { return diff::tanh(a); });
        auto r = p({3, 4});
        for (auto& v : r.value().values())
            v = (v < 0 ? -0.1 : 0.1) + v;
        run("relu", {r}, [&] { return diff::relu(r); });
    }
    {
        auto a = p({3, 5}, -2, 2);
        const Tensor m = partial_mask(3, 5, rng);
        run("masked_softmax", {a}, [&] { return diff::masked_softmax(a, m); });
        auto s = p({2, 3, 4}, -2, 2);
        const Tensor km = partial_mask(2, 4, rng);
        run("masked_softmax_key_mask", {s}, [&] { return diff::masked_softmax(s, km); });
    }
    {
        auto table = p({6, 3});
        const std::vector<std::size_t> idx{0, 4, 4, 2, 5, 0};
        run("embedding_lookup", {table}, [&] { return diff::embedding_lookup(table, idx, {2, 3}); });
        auto x = p({3, 4, 2});
        const Tensor m = partial_mask(3, 4, rng);
        run("masked_mean_pool", {x}, [&] { return diff::masked_mean_pool(x, m); });
    }
    {
        auto x = p({3, 5}, -2, 2), g = p({5}, 0.5, 1.5), b = p({5});
        run("layer_norm", {x, g, b}, [&] { return diff::layer_norm(x, g, b); });
        auto y = p({2, 3});
        run("sum", {y}, [&] { return diff::sum(y); });
        run("mean", {y}, [&] { return diff::mean(y); });
    }
    {
        auto q = p({6}, 0.1, 0.9);
        Tensor t({6});
        for (std::size_t i = 0; i < 6; ++i)
            t[i] = static_cast<double>(i % 2);
        out.push_back({"bce_loss", check_gradients({q}, [&] { return diff::bce_loss(q, t); })});
    }
    {
        // three-layer composition with every kind of node in one graph
        auto x = p({2, 3, 4}), w1 = p({4, 6}), b1 = p({6}), w2 = p({6, 4}), g = p({4}, 0.5, 1.5), bt = p({4});
        const Tensor m = partial_mask(2, 3, rng);
        run("composition", {x, w1, b1, w2, g, bt}, [&] {
            const Var h = diff::tanh(diff::add(diff::matmul(x, w1), b1));
            const Var z = diff::layer_norm(diff::matmul(h, w2), g, bt);
            const Var att = diff::masked_softmax(diff::batched_matmul(z, z, true), m);
            return diff::sigmoid(diff::masked_mean_pool(diff::batched_matmul(att, z), m));
        });
    }
    return out;
}

GradCheck model_gradient_check(neural::Variant variant, bool fine_tune, std::uint64_t seed)
{
    neural::MetaModelConfig cfg;
    cfg.variant = variant;
    cfg.code_input_len = 3;
    cfg.summary_input_len = 3;
    cfg.embedding_dim = 4;
    cfg.hidden_dim = 4;
    cfg.encoder_layers = 2;
    cfg.attention_heads = 2;
    cfg.seed = seed;
    cfg.fine_tune_embeddings = fine_tune;

    std::vector<CodeSegment> segs{{"a", {"get", "name", "x", "y"}, {"gets", "name"}}, {"b", {"set", "unseen"}, {"sets", "it"}}};
    std::vector<CandidateSet> sets{
        {"a", {{"m0", {"gets", "the", "name"}}, {"m1", {"returns"}}, {"m2", {"gets", "a", "b", "c"}}}},
        {"b", {{"m0", {"sets", "it"}}, {"m1", {"novel", "word", "here"}}, {"m2", {"the"}}}}};
    const auto ds = make_dataset(std::move(segs), std::move(sets));
    auto code = tiny_table(4, {"get", "set", "name"}, seed + 1);
    auto summary = tiny_table(4, {"gets", "sets", "the", "name", "it"}, seed + 2);
    std::vector<Tokens> code_corpus, summary_corpus;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        code_corpus.push_back(ds.segments[i].code_tokens);
        for (const auto& c : ds.candidate_sets[i].candidates)
            summary_corpus.push_back(c.tokens);
    }
    neural::NeuralMetaModel model(cfg, code, summary, TrainingSubset::all, code_corpus, summary_corpus);

    const std::vector<SegmentRef> items{{&ds.segments[0], &ds.candidate_sets[0]}, {&ds.segments[1], &ds.candidate_sets[1]}};
    const Tensor targets({6}, std::vector<double>{1, 0, 0, 0, 1, 0});
    std::vector<Var> inputs;
    for (const auto& [name, v] : model.parameters().items())
        inputs.push_back(v);
    return check_gradients(inputs, [&] { return diff::bce_loss(model.forward(items), targets); });
}

} // namespace metasum::fx
