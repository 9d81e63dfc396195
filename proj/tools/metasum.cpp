// Command-line front end: one subcommand per pipeline stage.
#include "metasum/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace metasum;
using metasum::pipeline::MetaVariant;

namespace {

struct Overrides {
    std::string config;
    std::string workdir;
    std::string dataset;
    std::optional<std::uint64_t> seed;
    bool force = false;
    bool quiet = false;
    // synth
    std::optional<std::size_t> segments;
    std::optional<std::size_t> models;
    // meta
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<int> hidden;
    bool fine_tune = false;
    // embeddings
    std::optional<int> dim;
    std::optional<int> window;
    std::optional<int> negatives;
    std::optional<int> emb_epochs;
    // significance
    std::optional<int> iterations;
    std::vector<std::string> variants;
    std::vector<std::string> scenarios;
};

pipeline::RunConfig resolve(const Overrides& o)
{
    pipeline::RunConfig cfg;
    if (!o.config.empty())
        cfg = pipeline::load_config(o.config);
    if (!o.workdir.empty())
        cfg.workdir = o.workdir;
    if (cfg.workdir.empty()) {
        const char* env = std::getenv("METASUM_WORKDIR");
        cfg.workdir = env && *env ? env : "metasum_work";
    }
    if (!o.dataset.empty())
        cfg.dataset = o.dataset;
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.segments)
        cfg.synth.segments = *o.segments;
    if (o.models)
        cfg.synth.models = *o.models;
    if (o.epochs)
        cfg.meta.epochs = *o.epochs;
    if (o.lr)
        cfg.meta.learning_rate = *o.lr;
    if (o.hidden)
        cfg.meta.hidden_dim = *o.hidden;
    if (o.fine_tune)
        cfg.meta.fine_tune_embeddings = true;
    if (o.dim) {
        cfg.embedding.dim = *o.dim;
        cfg.meta.embedding_dim = *o.dim;
    }
    if (o.window)
        cfg.embedding.window = *o.window;
    if (o.negatives)
        cfg.embedding.negatives = *o.negatives;
    if (o.emb_epochs)
        cfg.embedding.epochs = *o.emb_epochs;
    if (o.iterations)
        cfg.sig_iterations = *o.iterations;
    if (!o.variants.empty()) {
        cfg.variants.clear();
        for (const auto& v : o.variants)
            cfg.variants.push_back(pipeline::parse_meta_variant(v));
    }
    if (!o.scenarios.empty()) {
        cfg.scenarios.clear();
        for (const auto& s : o.scenarios)
            cfg.scenarios.push_back(eval::parse_scenario(s));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"metasum: meta-selection of code summaries"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config, "Run configuration (JSON)");
    app.add_option("--workdir", o.workdir, "Work directory (default: $METASUM_WORKDIR or ./metasum_work)");
    app.add_option("--dataset", o.dataset, "Candidate dump in JSONL format (default: synthetic benchmark)");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_flag("--force", o.force, "Skip staleness checks on upstream stages");
    app.add_flag("-q,--quiet", o.quiet, "No progress output");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
    synth->add_option("--segments", o.segments, "Number of code segments");
    synth->add_option("--models", o.models, "Number of synthetic summarizers");
    app.add_subcommand("prepare", "Load, validate and partition the dataset");
    app.add_subcommand("score", "Sentence BLEU of every candidate");
    app.add_subcommand("label", "Suitability labels and filtered subsets");
    auto* emb = app.add_subcommand("train-embeddings", "Subword skip-gram embeddings for both sides");
    emb->add_option("--dim", o.dim, "Vector dimension");
    emb->add_option("--window", o.window, "Context window");
    emb->add_option("--negatives", o.negatives, "Negative samples");
    emb->add_option("--epochs", o.emb_epochs, "Training epochs");

    std::string variant = "lstm", subset = "all", scenario = "all_filtered";
    const std::vector<std::string> variant_names{"feat", "lstm", "trn"};
    const std::vector<std::string> subset_names{"all", "filtered"};
    auto* train = app.add_subcommand("train-meta", "Train a meta-model");
    train->add_option("--variant", variant, "feat|lstm|trn")->check(CLI::IsMember(variant_names));
    train->add_option("--train-subset", subset, "all|filtered")->check(CLI::IsMember(subset_names));
    train->add_option("--epochs", o.epochs, "Epochs (0: variant default)");
    train->add_option("--lr", o.lr, "Learning rate");
    train->add_option("--hidden", o.hidden, "Hidden dimension");
    train->add_flag("--fine-tune", o.fine_tune, "Train the embedding tables too");
    auto* sel = app.add_subcommand("select", "Pick one candidate per test segment");
    sel->add_option("--variant", variant, "feat|lstm|trn")->check(CLI::IsMember(variant_names));
    sel->add_option("--train-subset", subset, "all|filtered")->check(CLI::IsMember(subset_names));
    auto* evaluate = app.add_subcommand("evaluate", "Table of corpus BLEU per scenario");
    evaluate->add_option("--variants", o.variants, "Meta-model variants to report");
    evaluate->add_option("--scenarios", o.scenarios, "Scenarios to report");
    evaluate->add_option("--iterations", o.iterations, "Randomization iterations");
    app.add_subcommand("complementarity", "Per-model win counts on the test set");
    auto* sig = app.add_subcommand("sigtest", "Meta-model vs best baseline, approximate randomization");
    sig->add_option("--variant", variant, "feat|lstm|trn")->check(CLI::IsMember(variant_names));
    sig->add_option("--scenario", scenario, "all_all|all_filtered|filtered_filtered");
    sig->add_option("--iterations", o.iterations, "Randomization iterations");
    auto* all = app.add_subcommand("pipeline", "Every stage in order");
    all->add_option("--segments", o.segments, "Synthetic segments");
    all->add_option("--models", o.models, "Synthetic summarizers");
    all->add_option("--variants", o.variants, "Meta-model variants");
    all->add_option("--scenarios", o.scenarios, "Scenarios");
    all->add_option("--epochs", o.epochs, "Neural epochs (0: variant default)");
    all->add_option("--iterations", o.iterations, "Randomization iterations");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(o);
        pipeline::Session session(cfg, o.quiet ? nullptr : &std::cerr, o.force);
        const std::string cmd = app.get_subcommands().front()->get_name();
        const auto v = pipeline::parse_meta_variant(variant);
        const auto t = parse_training_subset(subset);
        if (cmd == "synth")
            session.synth();
        else if (cmd == "prepare")
            session.prepare();
        else if (cmd == "score")
            session.score();
        else if (cmd == "label")
            session.label();
        else if (cmd == "train-embeddings")
            session.train_embeddings();
        else if (cmd == "train-meta")
            session.train_meta(v, t);
        else if (cmd == "select")
            session.select(v, t);
        else if (cmd == "evaluate")
            session.evaluate();
        else if (cmd == "complementarity")
            session.complementarity();
        else if (cmd == "sigtest") {
            const auto r = session.sigtest(v, eval::parse_scenario(scenario));
            std::cout << "delta " << r.observed_delta << " p " << r.p_value << "\n";
        } else if (cmd == "pipeline")
            session.run_all();
        return 0;
    } catch (const Error& e) {
        std::cerr << "metasum: " << to_string(e.kind()) << " error: " << e.what() << "\n";
        return pipeline::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "metasum: error: " << e.what() << "\n";
        return 1;
    }
}
