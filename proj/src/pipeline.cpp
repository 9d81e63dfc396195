#include "metasum/pipeline.hpp"

#include "metasum/error.hpp"
#include "metasum/labeling.hpp"
#include "metasum/random.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unistd.h>
#include <unordered_map>
#include <unordered_set>

namespace metasum::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(MetaVariant v)
{
    switch (v) {
    case MetaVariant::feat: return "feat";
    case MetaVariant::lstm: return "lstm";
    case MetaVariant::trn: return "trn";
    }
    return "?";
}

MetaVariant parse_meta_variant(const std::string& s)
{
    if (s == "feat")
        return MetaVariant::feat;
    if (s == "lstm")
        return MetaVariant::lstm;
    if (s == "trn")
        return MetaVariant::trn;
    fail(ErrorKind::config, "unknown meta-model variant '" + s + "' (expected feat|lstm|trn)");
}

std::string run_name(MetaVariant v, TrainingSubset subset)
{
    return std::string(to_string(v)) + "_" + metasum::to_string(subset);
}

// ---- configuration ---------------------------------------------------------------

void RunConfig::validate() const
{
    require(!workdir.empty(), ErrorKind::config, "no work directory (use --workdir or METASUM_WORKDIR)");
    const double total = split.meta_train + split.meta_valid + split.test;
    require(split.meta_train > 0 && split.meta_valid >= 0 && split.test > 0 && std::abs(total - 1.0) < 1e-9,
            ErrorKind::config, "split ratios must be positive and sum to 1");
    require(!variants.empty(), ErrorKind::config, "no meta-model variants configured");
    require(!scenarios.empty(), ErrorKind::config, "no scenarios configured");
    require(sig_iterations >= 0, ErrorKind::config, "significance iterations must be >= 0");
    require(alpha > 0 && alpha < 1, ErrorKind::config, "alpha must lie in (0, 1)");
    require(random_draws >= 1, ErrorKind::config, "random_draws must be >= 1");
    require(embedding.dim >= 1 && embedding.window >= 1 && embedding.negatives >= 1 && embedding.epochs >= 1,
            ErrorKind::config, "embedding dim, window, negatives and epochs must be >= 1");
    require(embedding.min_n >= 1 && embedding.max_n >= embedding.min_n && embedding.buckets >= 1, ErrorKind::config,
            "embedding n-gram range or bucket count invalid");
    require(logreg.epochs >= 1 && logreg.learning_rate > 0, ErrorKind::config,
            "logreg epochs and learning rate must be positive");
    meta.validate();
    if (dataset.empty())
        synth::effective_rates(synth);
}

namespace {

json embedding_json(const embeddings::EmbeddingOptions& e)
{
    return {{"dim", e.dim},     {"window", e.window}, {"negatives", e.negatives},
            {"epochs", e.epochs}, {"min_n", e.min_n},   {"max_n", e.max_n},
            {"buckets", e.buckets}, {"learning_rate", e.learning_rate}};
}

json logreg_json(const features::LogRegOptions& o)
{
    return {{"learning_rate", o.learning_rate},
            {"epochs", o.epochs},
            {"l2", o.l2},
            {"class_weights", {o.class_weights.negative, o.class_weights.positive}}};
}

json synth_json(const synth::SyntheticOptions& s)
{
    return {{"segments", s.segments}, {"models", s.models}, {"rates", s.rates},
            {"own_rate", s.own_rate}, {"other_rate", s.other_rate}};
}

json meta_json(const neural::MetaModelConfig& m)
{
    auto j = neural::to_json(m);
    j.erase("variant");
    j.erase("seed");
    return j;
}

} // namespace

json to_json(const RunConfig& c)
{
    json variants = json::array();
    for (auto v : c.variants)
        variants.push_back(to_string(v));
    json scenarios = json::array();
    for (auto s : c.scenarios)
        scenarios.push_back(eval::to_string(s));
    return {{"dataset", c.dataset.string()},
            {"workdir", c.workdir.string()},
            {"seed", c.seed},
            {"split", {{"meta_train", c.split.meta_train}, {"meta_valid", c.split.meta_valid}, {"test", c.split.test}}},
            {"synth", synth_json(c.synth)},
            {"embedding", embedding_json(c.embedding)},
            {"meta", meta_json(c.meta)},
            {"logreg", logreg_json(c.logreg)},
            {"variants", variants},
            {"scenarios", scenarios},
            {"significance", {{"iterations", c.sig_iterations}, {"alpha", c.alpha}}},
            {"random_draws", c.random_draws},
            {"epoch_checkpoints", c.epoch_checkpoints}};
}

RunConfig config_from_json(const json& j)
{
    RunConfig c;
    try {
        require(j.is_object(), ErrorKind::config, "run config must be a JSON object");
        static const std::unordered_set<std::string> known = {
            "dataset", "workdir", "seed",     "split",        "synth",        "embedding",        "meta",
            "logreg",  "variants", "scenarios", "significance", "random_draws", "epoch_checkpoints"};
        for (const auto& [key, _] : j.items())
            require(known.count(key) != 0, ErrorKind::config, "unknown run config field '" + key + "'");
        c.dataset = j.value("dataset", std::string());
        c.workdir = j.value("workdir", std::string());
        c.seed = j.value("seed", c.seed);
        if (j.contains("split")) {
            const auto& s = j.at("split");
            c.split.meta_train = s.value("meta_train", c.split.meta_train);
            c.split.meta_valid = s.value("meta_valid", c.split.meta_valid);
            c.split.test = s.value("test", c.split.test);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            c.synth.segments = s.value("segments", c.synth.segments);
            c.synth.models = s.value("models", c.synth.models);
            c.synth.own_rate = s.value("own_rate", c.synth.own_rate);
            c.synth.other_rate = s.value("other_rate", c.synth.other_rate);
            if (s.contains("rates"))
                c.synth.rates = s.at("rates").get<std::vector<std::vector<double>>>();
        }
        if (j.contains("embedding")) {
            const auto& e = j.at("embedding");
            c.embedding.dim = e.value("dim", c.embedding.dim);
            c.embedding.window = e.value("window", c.embedding.window);
            c.embedding.negatives = e.value("negatives", c.embedding.negatives);
            c.embedding.epochs = e.value("epochs", c.embedding.epochs);
            c.embedding.min_n = e.value("min_n", c.embedding.min_n);
            c.embedding.max_n = e.value("max_n", c.embedding.max_n);
            c.embedding.buckets = e.value("buckets", c.embedding.buckets);
            c.embedding.learning_rate = e.value("learning_rate", c.embedding.learning_rate);
        }
        if (j.contains("meta"))
            c.meta = neural::config_from_json(j.at("meta"));
        if (j.contains("logreg")) {
            const auto& l = j.at("logreg");
            c.logreg.learning_rate = l.value("learning_rate", c.logreg.learning_rate);
            c.logreg.epochs = l.value("epochs", c.logreg.epochs);
            c.logreg.l2 = l.value("l2", c.logreg.l2);
            if (l.contains("class_weights")) {
                const auto w = l.at("class_weights").get<std::vector<double>>();
                require(w.size() == 2, ErrorKind::config, "class_weights must be [negative, positive]");
                c.logreg.class_weights = {w[0], w[1]};
            }
        }
        if (j.contains("variants")) {
            c.variants.clear();
            for (const auto& v : j.at("variants"))
                c.variants.push_back(parse_meta_variant(v.get<std::string>()));
        }
        if (j.contains("scenarios")) {
            c.scenarios.clear();
            for (const auto& s : j.at("scenarios"))
                c.scenarios.push_back(eval::parse_scenario(s.get<std::string>()));
        }
        if (j.contains("significance")) {
            const auto& s = j.at("significance");
            c.sig_iterations = s.value("iterations", c.sig_iterations);
            c.alpha = s.value("alpha", c.alpha);
        }
        c.random_draws = j.value("random_draws", c.random_draws);
        c.epoch_checkpoints = j.value("epoch_checkpoints", c.epoch_checkpoints);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config, "config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

// ---- manifests, hashing, locking -------------------------------------------------

json to_json(const Manifest& m)
{
    return {{"stage", m.stage}, {"config_hash", m.config_hash}, {"inputs", m.inputs}, {"outputs", m.outputs},
            {"seeds", m.seeds}};
}

Manifest manifest_from_json(const json& j)
{
    try {
        Manifest m;
        m.stage = j.at("stage").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("manifest: ") + e.what());
    }
}

namespace {

std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

std::string hash_text(const std::string& text) { return hex64(fnv1a64(text)); }

std::string hash_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
    }
    return hex64(h);
}

WorkdirLock::WorkdirLock(const fs::path& workdir) : path_(workdir / ".lock")
{
    std::error_code ec;
    fs::create_directories(workdir, ec);
    require(!ec, ErrorKind::io, "cannot create work directory " + workdir.string() + ": " + ec.message());
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            fail(ErrorKind::locked, "work directory " + workdir.string() + " is in use by another command (remove "
                                        + path_.string() + " if no command is running)");
        fail(ErrorKind::io, "cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

WorkdirLock::~WorkdirLock()
{
    std::error_code ec;
    fs::remove(path_, ec);
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::parse:
    case ErrorKind::schema: return 3;
    case ErrorKind::dependency: return 4;
    case ErrorKind::staleness: return 5;
    case ErrorKind::locked: return 6;
    case ErrorKind::io: return 7;
    case ErrorKind::alignment: return 8;
    case ErrorKind::empty_input:
    case ErrorKind::precondition:
    case ErrorKind::size:
    case ErrorKind::degenerate_data: return 9;
    case ErrorKind::shape:
    case ErrorKind::contract: return 10;
    }
    return 1;
}

std::string stage_command(const std::string& stage)
{
    if (stage == "synth")
        return "metasum synth";
    if (stage == "data")
        return "metasum prepare";
    if (stage == "scores")
        return "metasum score";
    if (stage == "labels")
        return "metasum label";
    if (stage == "embeddings")
        return "metasum train-embeddings";
    if (stage == "reports")
        return "metasum evaluate";
    if (stage == "analysis")
        return "metasum complementarity";
    const auto slash = stage.find('/');
    if (slash != std::string::npos) {
        const std::string kind = stage.substr(0, slash), run = stage.substr(slash + 1);
        const auto us = run.rfind('_');
        const std::string flags = " --variant " + run.substr(0, us) + " --train-subset " + run.substr(us + 1);
        if (kind == "meta")
            return "metasum train-meta" + flags;
        if (kind == "selections")
            return "metasum select" + flags;
        if (kind == "sigtest")
            return "metasum sigtest";
    }
    return "metasum " + stage;
}

// ---- session -----------------------------------------------------------------------

namespace {

void write_text_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    out << text;
    out.close();
    require(!out.fail(), ErrorKind::io, "write failed: " + path.string());
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const fs::path& path)
{
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
}

std::vector<TrainingSubset> subsets_needed(const std::vector<eval::Scenario>& scenarios)
{
    std::vector<TrainingSubset> out;
    for (auto s : scenarios) {
        const auto t = eval::training_subset_of(s);
        if (std::find(out.begin(), out.end(), t) == out.end())
            out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool has_neural(const std::vector<MetaVariant>& v)
{
    return std::any_of(v.begin(), v.end(), [](MetaVariant x) { return x != MetaVariant::feat; });
}

std::string fmt(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

struct Split {
    std::vector<std::string> train, valid;
};

} // namespace

Session::Session(RunConfig config, std::ostream* log, bool force)
    : cfg_(std::move(config)), log_(log), force_(force), lock_((cfg_.validate(), cfg_.workdir))
{
}

void Session::say(const std::string& msg) const
{
    if (log_)
        *log_ << "[metasum] " << msg << std::endl;
}

fs::path Session::stage_dir(const std::string& stage) const { return cfg_.workdir / stage; }

std::string Session::stage_hash(const std::string& stage) const
{
    json j;
    j["stage"] = stage;
    if (stage == "synth") {
        j["synth"] = synth_json(cfg_.synth);
        j["seed"] = derive_seed(cfg_.seed, "synth");
    } else if (stage == "data") {
        if (cfg_.dataset.empty())
            j["source"] = stage_hash("synth");
        else
            j["source"] = hash_file(cfg_.dataset);
        j["split"] = {cfg_.split.meta_train, cfg_.split.meta_valid, cfg_.split.test};
        j["seed"] = derive_seed(cfg_.seed, "split");
    } else if (stage == "scores") {
        j["data"] = stage_hash("data");
    } else if (stage == "labels") {
        j["scores"] = stage_hash("scores");
    } else if (stage == "embeddings") {
        j["data"] = stage_hash("data");
        j["embedding"] = embedding_json(cfg_.embedding);
        j["seed"] = derive_seed(cfg_.seed, "embeddings");
    } else if (stage.rfind("meta/", 0) == 0) {
        const std::string run = stage.substr(5);
        j["labels"] = stage_hash("labels");
        j["seed"] = derive_seed(cfg_.seed, "meta." + run);
        if (run.rfind("feat_", 0) == 0) {
            j["logreg"] = logreg_json(cfg_.logreg);
        } else {
            j["meta"] = meta_json(cfg_.meta);
            j["embeddings"] = stage_hash("embeddings");
        }
    } else if (stage.rfind("selections/", 0) == 0) {
        j["meta"] = stage_hash("meta/" + stage.substr(11));
    } else if (stage == "reports" || stage.rfind("sigtest/", 0) == 0) {
        j["labels"] = stage_hash("labels");
        json runs = json::object();
        for (auto v : cfg_.variants)
            for (auto t : subsets_needed(cfg_.scenarios))
                runs[run_name(v, t)] = stage_hash("selections/" + run_name(v, t));
        j["runs"] = runs;
        json sc = json::array();
        for (auto s : cfg_.scenarios)
            sc.push_back(eval::to_string(s));
        j["scenarios"] = sc;
        j["significance"] = {cfg_.sig_iterations, cfg_.alpha};
        j["random_draws"] = cfg_.random_draws;
    } else if (stage == "analysis") {
        j["labels"] = stage_hash("labels");
    } else {
        fail(ErrorKind::contract, "unknown stage '" + stage + "'");
    }
    return hash_text(j.dump());
}

void Session::require_stage(const std::string& stage) const
{
    const fs::path mpath = stage_dir(stage) / "manifest.json";
    if (!fs::exists(mpath))
        fail(ErrorKind::dependency, "missing stage '" + stage + "' in " + cfg_.workdir.string() + "; run `"
                                        + stage_command(stage) + "` first");
    if (force_)
        return;
    const Manifest m = manifest_from_json(read_json_file(mpath));
    if (m.config_hash != stage_hash(stage))
        fail(ErrorKind::staleness, "stage '" + stage + "' was built with a different configuration; rerun `"
                                       + stage_command(stage) + "` (or pass --force)");
    for (const auto& [rel, hash] : m.outputs) {
        const fs::path p = stage_dir(stage) / rel;
        if (!fs::exists(p) || hash_file(p) != hash)
            fail(ErrorKind::staleness, "output " + p.string() + " of stage '" + stage
                                           + "' is missing or modified; rerun `" + stage_command(stage) + "`");
    }
}

void Session::write_manifest(const std::string& stage, const std::vector<std::string>& inputs,
                             const std::vector<fs::path>& outputs,
                             const std::map<std::string, std::uint64_t>& seeds) const
{
    Manifest m;
    m.stage = stage;
    m.config_hash = stage_hash(stage);
    m.seeds = seeds;
    for (const auto& up : inputs) {
        const Manifest um = manifest_from_json(read_json_file(stage_dir(up) / "manifest.json"));
        for (const auto& [rel, hash] : um.outputs)
            m.inputs[up + "/" + rel] = hash;
    }
    for (const auto& rel : outputs)
        m.outputs[rel.generic_string()] = hash_file(stage_dir(stage) / rel);
    write_text_file(stage_dir(stage) / "manifest.json", to_json(m).dump(2) + "\n");
}

// ---- loaders ---------------------------------------------------------------------------

Dataset Session::load_dataset() const
{
    require_stage("data");
    return load_jsonl(stage_dir("data") / "dataset.jsonl");
}

DatasetPartition Session::load_partition() const
{
    require_stage("data");
    const json j = read_json_file(stage_dir("data") / "partition.json");
    DatasetPartition p;
    p.meta_train = j.at("meta_train").get<std::vector<std::string>>();
    p.meta_valid = j.at("meta_valid").get<std::vector<std::string>>();
    p.test = j.at("test").get<std::vector<std::string>>();
    return p;
}

std::vector<ScoredSet> Session::load_scores() const
{
    require_stage("scores");
    std::ifstream in(stage_dir("scores") / "scores.jsonl");
    return read_score_dump(in);
}

std::vector<LabeledCandidateSet> Session::load_labels() const
{
    require_stage("labels");
    std::ifstream in(stage_dir("labels") / "labels.jsonl");
    return read_label_dump(in);
}

Selections Session::load_selections(MetaVariant v, TrainingSubset subset) const
{
    const std::string stage = "selections/" + run_name(v, subset);
    require_stage(stage);
    std::ifstream in(stage_dir(stage) / "selections.jsonl");
    Selections s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            const json j = json::parse(line);
            s.ids.push_back(j.at("id").get<std::string>());
            s.chosen.push_back(j.at("chosen").get<std::size_t>());
            s.probabilities.push_back(j.at("probabilities").get<std::vector<double>>());
        } catch (const json::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return s;
}

// ---- stages ------------------------------------------------------------------------------

void Session::synth()
{
    auto opt = cfg_.synth;
    opt.seed = derive_seed(cfg_.seed, "synth");
    say("generating synthetic benchmark: " + std::to_string(opt.segments) + " segments, "
        + std::to_string(opt.models) + " models");
    const Dataset ds = synth::generate_synthetic_benchmark(opt);
    fs::create_directories(stage_dir("synth"));
    save_jsonl(stage_dir("synth") / "dataset.jsonl", ds);
    write_manifest("synth", {}, {"dataset.jsonl"}, {{"synth", opt.seed}});
}

void Session::prepare()
{
    fs::path source = cfg_.dataset;
    std::vector<std::string> inputs;
    if (source.empty()) {
        require_stage("synth");
        source = stage_dir("synth") / "dataset.jsonl";
        inputs.push_back("synth");
    }
    say("loading " + source.string());
    const Dataset ds = load_jsonl(source);
    std::vector<std::string> ids;
    for (const auto& s : ds.segments)
        ids.push_back(s.id);
    const std::uint64_t seed = derive_seed(cfg_.seed, "split");
    const DatasetPartition p = partition(ids, cfg_.split, seed);
    fs::create_directories(stage_dir("data"));
    save_jsonl(stage_dir("data") / "dataset.jsonl", ds);
    write_text_file(stage_dir("data") / "partition.json",
                    json({{"meta_train", p.meta_train}, {"meta_valid", p.meta_valid}, {"test", p.test}}).dump(1)
                        + "\n");
    say("partition: " + std::to_string(p.meta_train.size()) + " meta-train, " + std::to_string(p.meta_valid.size())
        + " meta-valid, " + std::to_string(p.test.size()) + " test");
    write_manifest("data", inputs, {"dataset.jsonl", "partition.json"}, {{"split", seed}});
}

void Session::score()
{
    const Dataset ds = load_dataset();
    say("scoring " + std::to_string(ds.size()) + " candidate sets");
    const auto scores = score_dataset(ds);
    fs::create_directories(stage_dir("scores"));
    {
        std::ofstream out(stage_dir("scores") / "scores.jsonl");
        write_score_dump(out, scores);
    }
    write_manifest("scores", {"data"}, {"scores.jsonl"}, {});
}

void Session::label()
{
    const auto scores = load_scores();
    const auto p = load_partition();
    const auto labeled = label_sets(scores);
    fs::create_directories(stage_dir("labels"));
    {
        std::ofstream out(stage_dir("labels") / "labels.jsonl");
        write_label_dump(out, labeled);
    }
    // filtered membership of every partition, so later stages never recompute it
    std::unordered_map<std::string, const ScoredSet*> by_id;
    for (const auto& s : scores)
        by_id.emplace(s.segment_id, &s);
    auto filtered = [&](const std::vector<std::string>& ids) {
        std::vector<ScoredSet> sub;
        for (const auto& id : ids)
            sub.push_back(*by_id.at(id));
        return filter_nonzero(sub);
    };
    const auto ft = filtered(p.meta_train), fv = filtered(p.meta_valid), fte = filtered(p.test);
    write_text_file(stage_dir("labels") / "filtered.json",
                    json({{"meta_train", ft}, {"meta_valid", fv}, {"test", fte}}).dump(1) + "\n");
    say("filtered subset: " + std::to_string(ft.size()) + " meta-train, " + std::to_string(fv.size())
        + " meta-valid, " + std::to_string(fte.size()) + " test");
    write_manifest("labels", {"scores", "data"}, {"labels.jsonl", "filtered.json"}, {});
}

namespace {

/// Code token lists and summary word lists (references and candidates) of the given segments.
std::pair<std::vector<Tokens>, std::vector<Tokens>> side_corpora(const Dataset& ds,
                                                                 const std::vector<std::string>& ids)
{
    const auto idx = index_by_id(ds);
    std::vector<Tokens> code, summaries;
    for (const auto& id : ids) {
        const std::size_t i = idx.at(id);
        code.push_back(ds.segments[i].code_tokens);
        summaries.push_back(ds.segments[i].reference_tokens);
        for (const auto& c : ds.candidate_sets[i].candidates)
            summaries.push_back(c.tokens);
    }
    return {std::move(code), std::move(summaries)};
}

} // namespace

void Session::train_embeddings()
{
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const auto [code, summaries] = side_corpora(ds, p.meta_train);
    auto opt = cfg_.embedding;
    const std::uint64_t base = derive_seed(cfg_.seed, "embeddings");
    fs::create_directories(stage_dir("embeddings"));
    std::vector<fs::path> outputs;
    std::map<std::string, std::uint64_t> seeds;
    for (const auto& [name, corpus] : {std::pair{"code", &code}, std::pair{"summary", &summaries}}) {
        opt.seed = derive_seed(base, name);
        seeds[name] = opt.seed;
        say(std::string("training ") + name + " embeddings on " + std::to_string(corpus->size()) + " sequences");
        const auto trained = embeddings::train_embeddings(*corpus, opt);
        const fs::path vec = std::string(name) + ".vec";
        embeddings::save_text(stage_dir("embeddings") / vec, trained.table);
        std::string curve = "epoch,loss\n";
        for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e)
            curve += std::to_string(e + 1) + "," + fmt(trained.epoch_loss[e], 9) + "\n";
        const fs::path loss = std::string(name) + "_loss.csv";
        write_text_file(stage_dir("embeddings") / loss, curve);
        outputs.push_back(vec);
        outputs.push_back(embeddings::sidecar_path(vec));
        outputs.push_back(loss);
    }
    write_manifest("embeddings", {"data"}, outputs, seeds);
}

namespace {

struct TrainingData {
    std::vector<std::string> train_ids, valid_ids;
};

TrainingData training_ids(const fs::path& labels_dir, const DatasetPartition& p, TrainingSubset subset)
{
    if (subset == TrainingSubset::all)
        return {p.meta_train, p.meta_valid};
    const json j = read_json_file(labels_dir / "filtered.json");
    return {j.at("meta_train").get<std::vector<std::string>>(), j.at("meta_valid").get<std::vector<std::string>>()};
}

std::string history_csv(const neural::TrainingHistory& h)
{
    std::string s = "epoch,train_loss,valid_loss\n";
    s += "0," + fmt(h.initial_train_loss, 9) + ",\n";
    for (const auto& e : h.epochs)
        s += std::to_string(e.epoch) + "," + fmt(e.train_loss, 9) + "," + fmt(e.valid_loss, 9) + "\n";
    return s;
}

} // namespace

void Session::train_meta(MetaVariant v, TrainingSubset subset)
{
    const std::string run = run_name(v, subset);
    const std::string stage = "meta/" + run;
    const auto labels = load_labels();
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const auto ids = training_ids(stage_dir("labels"), p, subset);
    require(!ids.train_ids.empty(), ErrorKind::precondition, "train-meta: empty training set for " + run);
    const auto idx = index_by_id(ds);
    std::unordered_map<std::string, const LabeledCandidateSet*> label_of;
    for (const auto& l : labels)
        label_of.emplace(l.segment_id, &l);
    const std::uint64_t seed = derive_seed(cfg_.seed, "meta." + run);
    const fs::path dir = stage_dir(stage);
    fs::remove_all(dir);
    fs::create_directories(dir);
    say("training meta_" + std::string(to_string(v)) + " on " + std::to_string(ids.train_ids.size())
        + " segments (" + metasum::to_string(subset) + ")");

    if (v == MetaVariant::feat) {
        std::vector<SegmentRef> items;
        std::vector<std::vector<int>> y;
        for (const auto& id : ids.train_ids) {
            const std::size_t i = idx.at(id);
            items.push_back({&ds.segments[i], &ds.candidate_sets[i]});
            y.push_back(label_of.at(id)->labels);
        }
        const auto fit = features::train_feature_selector(ds, ids.train_ids, items, y, cfg_.logreg, subset);
        write_text_file(dir / "model.json", features::to_json(fit.selector.model()).dump(2) + "\n");
        std::string curve = "epoch,loss\n";
        for (std::size_t e = 0; e < fit.loss_history.size(); ++e)
            curve += std::to_string(e) + "," + fmt(fit.loss_history[e], 9) + "\n";
        write_text_file(dir / "history.csv", curve);
        write_manifest(stage, {"labels", "data"}, {"model.json", "history.csv"}, {{"meta", seed}});
        return;
    }

    require_stage("embeddings");
    auto code_table = std::make_shared<const embeddings::EmbeddingTable>(
        embeddings::load_text(stage_dir("embeddings") / "code.vec"));
    auto summary_table = std::make_shared<const embeddings::EmbeddingTable>(
        embeddings::load_text(stage_dir("embeddings") / "summary.vec"));
    auto mc = cfg_.meta;
    mc.variant = v == MetaVariant::lstm ? neural::Variant::lstm : neural::Variant::trn;
    mc.seed = seed;
    const auto [code_corpus, summary_corpus] = side_corpora(ds, ids.train_ids);
    neural::NeuralMetaModel model(mc, code_table, summary_table, subset, code_corpus, summary_corpus);

    auto examples = [&](const std::vector<std::string>& list) {
        std::vector<neural::TrainingExample> out;
        for (const auto& id : list) {
            const std::size_t i = idx.at(id);
            out.push_back({{&ds.segments[i], &ds.candidate_sets[i]}, label_of.at(id)->labels});
        }
        return out;
    };
    const auto train_set = examples(ids.train_ids);
    const auto valid_set = examples(ids.valid_ids);
    std::vector<fs::path> outputs;
    const auto history = neural::train(
        model, train_set, valid_set, [&](const neural::EpochRecord& r, const neural::NeuralMetaModel& m) {
            say("  epoch " + std::to_string(r.epoch) + ": train " + fmt(r.train_loss, 4) + ", valid "
                + fmt(r.valid_loss, 4));
            if (cfg_.epoch_checkpoints) {
                char name[32];
                std::snprintf(name, sizeof name, "epochs/epoch_%03d", r.epoch);
                fs::create_directories(dir / "epochs");
                m.save(dir / name);
                outputs.push_back(std::string(name) + ".bin");
                outputs.push_back(std::string(name) + ".json");
            }
        });
    model.save(dir / "best");
    write_text_file(dir / "config.json", neural::to_json(mc).dump(2) + "\n");
    write_text_file(dir / "history.csv", history_csv(history));
    write_text_file(dir / "best_epoch.txt", std::to_string(history.best_epoch) + "\n");
    for (const char* f : {"best.bin", "best.json", "config.json", "history.csv", "best_epoch.txt"})
        outputs.emplace_back(f);
    write_manifest(stage, {"labels", "data", "embeddings"}, outputs, {{"meta", seed}});
}

void Session::select(MetaVariant v, TrainingSubset subset)
{
    const std::string run = run_name(v, subset);
    const std::string meta_stage = "meta/" + run;
    require_stage(meta_stage);
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const fs::path mdir = stage_dir(meta_stage);

    std::unique_ptr<Selector> selector;
    if (v == MetaVariant::feat) {
        const auto ids = training_ids(stage_dir("labels"), p, subset);
        selector = std::make_unique<features::FeatureSelector>(
            features::build_context(ds, ids.train_ids), features::logreg_from_json(read_json_file(mdir / "model.json")),
            subset);
    } else {
        require_stage("embeddings");
        const auto mc = neural::config_from_json(read_json_file(mdir / "config.json"));
        auto code_table = std::make_shared<const embeddings::EmbeddingTable>(
            embeddings::load_text(stage_dir("embeddings") / "code.vec"));
        auto summary_table = std::make_shared<const embeddings::EmbeddingTable>(
            embeddings::load_text(stage_dir("embeddings") / "summary.vec"));
        std::vector<Tokens> code_corpus, summary_corpus;
        if (mc.fine_tune_embeddings) {
            const auto ids = training_ids(stage_dir("labels"), p, subset);
            std::tie(code_corpus, summary_corpus) = side_corpora(ds, ids.train_ids);
        }
        auto model = std::make_unique<neural::NeuralMetaModel>(mc, code_table, summary_table, subset, code_corpus,
                                                               summary_corpus);
        model->load(mdir / "best");
        selector = std::move(model);
    }
    say("selecting with meta_" + std::string(to_string(v)) + " (" + metasum::to_string(subset) + ") on "
        + std::to_string(p.test.size()) + " test segments");
    const auto results = eval::select_all(*selector, ds, p.test);
    std::string text;
    for (const auto& r : results)
        text += json({{"id", r.segment_id}, {"chosen", r.chosen_index}, {"probabilities", r.probabilities}}).dump()
                + "\n";
    const std::string stage = "selections/" + run;
    write_text_file(stage_dir(stage) / "selections.jsonl", text);
    write_manifest(stage, {meta_stage}, {"selections.jsonl"}, {});
}

namespace {

std::vector<std::size_t> choices_for(const Selections& s, const std::vector<std::string>& ids)
{
    std::unordered_map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < s.ids.size(); ++i)
        at.emplace(s.ids[i], s.chosen[i]);
    std::vector<std::size_t> out;
    for (const auto& id : ids) {
        const auto it = at.find(id);
        require(it != at.end(), ErrorKind::alignment, "selections lack test segment '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

std::vector<bleu::Stats> per_segment_stats(const Dataset& ds, const std::vector<std::string>& ids,
                                           const std::vector<std::size_t>& chosen)
{
    const auto out = eval::outputs_of(ds, ids, chosen);
    const auto refs = eval::references_of(ds, ids);
    std::vector<bleu::Pair> pairs;
    for (std::size_t i = 0; i < out.size(); ++i)
        pairs.push_back({out[i].tokens, refs[i].tokens});
    return bleu::pair_stats(pairs);
}

} // namespace

void Session::evaluate()
{
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const auto scores = load_scores();
    require_stage("labels");
    const auto subsets = subsets_needed(cfg_.scenarios);
    std::map<std::string, Selections> sel;
    std::vector<std::string> inputs{"data", "scores", "labels"};
    for (auto v : cfg_.variants)
        for (auto t : subsets) {
            sel[run_name(v, t)] = load_selections(v, t);
            inputs.push_back("selections/" + run_name(v, t));
        }

    eval::Report report;
    report.scenarios = cfg_.scenarios;
    const std::size_t j = ds.model_ids.size();
    std::vector<eval::ReportRow> baseline_rows(j), meta_rows(cfg_.variants.size());
    eval::ReportRow random_row{"random", {}}, oracle_row{"oracle", {}};
    for (std::size_t k = 0; k < j; ++k)
        baseline_rows[k].name = ds.model_ids[k];
    for (std::size_t m = 0; m < cfg_.variants.size(); ++m)
        meta_rows[m].name = std::string("meta_") + to_string(cfg_.variants[m]);

    json summary = json::object();
    std::string sig_csv = "scenario,model,baseline,delta,p_value,iterations,seed\n";
    for (auto sc : cfg_.scenarios) {
        const auto ids = eval::scenario_test_ids(sc, p.test, scores);
        require(!ids.empty(), ErrorKind::precondition, std::string("empty test subset for ") + eval::label(sc));
        json col;
        col["test_size"] = ids.size();
        std::optional<eval::ScenarioResult> first;
        for (std::size_t m = 0; m < cfg_.variants.size(); ++m) {
            const auto& s = sel.at(run_name(cfg_.variants[m], eval::training_subset_of(sc)));
            auto r = eval::evaluate_choices(ds, sc, ids, choices_for(s, ids), scores);
            const std::size_t best = r.best_baseline();
            const std::string name = meta_rows[m].name;
            const std::uint64_t seed = derive_seed(cfg_.seed, std::string("sigtest.") + eval::to_string(sc) + "." + name);
            const auto sig = eval::approx_randomization_stats(per_segment_stats(ds, ids, r.chosen),
                                                              per_segment_stats(ds, ids, std::vector(ids.size(), best)),
                                                              cfg_.sig_iterations, seed);
            const bool significant = sig.p_value < cfg_.alpha && sig.observed_delta > 0;
            meta_rows[m].cells.push_back(eval::ReportCell{r.meta_bleu, significant});
            col["meta"][name] = {{"bleu", r.meta_bleu}, {"delta", sig.observed_delta}, {"p_value", sig.p_value}};
            sig_csv += std::string(eval::to_string(sc)) + "," + name + "," + ds.model_ids[best] + ","
                       + fmt(sig.observed_delta, 9) + "," + fmt(sig.p_value, 6) + "," + std::to_string(sig.iterations)
                       + "," + std::to_string(seed) + "\n";
            if (!first)
                first = std::move(r);
        }
        for (std::size_t k = 0; k < j; ++k)
            baseline_rows[k].cells.push_back(eval::ReportCell{first->baseline_bleu[k], false});
        const double rnd = eval::random_selection_bleu(ds, ids, cfg_.random_draws,
                                                       derive_seed(cfg_.seed, std::string("random.") + eval::to_string(sc)));
        random_row.cells.push_back(eval::ReportCell{rnd, false});
        oracle_row.cells.push_back(eval::ReportCell{first->oracle_bleu, false});
        col["baselines"] = first->baseline_bleu;
        col["best_baseline"] = ds.model_ids[first->best_baseline()];
        col["random"] = rnd;
        col["oracle"] = first->oracle_bleu;
        summary[eval::to_string(sc)] = col;
    }
    for (auto& r : baseline_rows)
        report.rows.push_back(std::move(r));
    report.rows.push_back(std::move(random_row));
    for (auto& r : meta_rows)
        report.rows.push_back(std::move(r));
    report.rows.push_back(std::move(oracle_row));

    std::ostringstream text, csv;
    eval::write_report_text(text, report);
    eval::write_report_csv(csv, report);
    const fs::path dir = stage_dir("reports");
    write_text_file(dir / "scenarios.txt", text.str());
    write_text_file(dir / "scenarios.csv", csv.str());
    write_text_file(dir / "significance.csv", sig_csv);
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    if (log_)
        *log_ << text.str();
    write_manifest("reports", inputs, {"scenarios.txt", "scenarios.csv", "significance.csv", "summary.json"},
                   {{"sigtest", derive_seed(cfg_.seed, "sigtest")}});
}

void Session::complementarity()
{
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const auto scores = load_scores();
    require_stage("labels");
    std::unordered_map<std::string, const ScoredSet*> by_id;
    for (const auto& s : scores)
        by_id.emplace(s.segment_id, &s);
    std::vector<ScoredSet> test;
    for (const auto& id : p.test)
        test.push_back(*by_id.at(id));
    const auto report = eval::complementarity(test, ds.model_ids);
    std::ostringstream csv;
    eval::write_complementarity_csv(csv, report);
    write_text_file(stage_dir("analysis") / "complementarity.csv", csv.str());
    if (log_)
        *log_ << csv.str();
    write_manifest("analysis", {"data", "scores", "labels"}, {"complementarity.csv"}, {});
}

eval::SignificanceResult Session::sigtest(MetaVariant v, eval::Scenario scenario)
{
    const Dataset ds = load_dataset();
    const auto p = load_partition();
    const auto scores = load_scores();
    const auto subset = eval::training_subset_of(scenario);
    const auto s = load_selections(v, subset);
    const auto ids = eval::scenario_test_ids(scenario, p.test, scores);
    const auto r = eval::evaluate_choices(ds, scenario, ids, choices_for(s, ids), scores);
    const std::size_t best = r.best_baseline();
    const std::string name = std::string("meta_") + to_string(v);
    const std::uint64_t seed = derive_seed(cfg_.seed, std::string("sigtest.") + eval::to_string(scenario) + "." + name);
    const auto sig = eval::approx_randomization_stats(per_segment_stats(ds, ids, r.chosen),
                                                      per_segment_stats(ds, ids, std::vector(ids.size(), best)),
                                                      cfg_.sig_iterations, seed);
    const std::string stage = "sigtest/" + std::string(to_string(v)) + "_" + eval::to_string(scenario);
    const json out = {{"model", name},
                      {"scenario", eval::to_string(scenario)},
                      {"baseline", ds.model_ids[best]},
                      {"observed_delta", sig.observed_delta},
                      {"p_value", sig.p_value},
                      {"iterations", sig.iterations},
                      {"seed", sig.seed},
                      {"significant", sig.p_value < cfg_.alpha && sig.observed_delta > 0}};
    write_text_file(stage_dir(stage) / "result.json", out.dump(2) + "\n");
    write_manifest(stage, {"data", "scores", "selections/" + run_name(v, subset)}, {"result.json"}, {{"sigtest", seed}});
    say(name + " vs " + ds.model_ids[best] + " on " + eval::label(scenario) + ": delta " + fmt(sig.observed_delta, 6)
        + ", p = " + fmt(sig.p_value, 6));
    return sig;
}

void Session::run_all()
{
    if (cfg_.dataset.empty())
        synth();
    prepare();
    score();
    label();
    if (has_neural(cfg_.variants))
        train_embeddings();
    for (auto v : cfg_.variants)
        for (auto t : subsets_needed(cfg_.scenarios)) {
            train_meta(v, t);
            select(v, t);
        }
    evaluate();
    complementarity();
}

} // namespace metasum::pipeline
