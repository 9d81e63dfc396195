#pragma once

#include "metasum/corpus.hpp"
#include "metasum/embeddings.hpp"
#include "metasum/error.hpp"
#include "metasum/evaluation.hpp"
#include "metasum/features.hpp"
#include "metasum/labeling.hpp"
#include "metasum/neural_meta.hpp"
#include "metasum/synthetic.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metasum::pipeline {

enum class MetaVariant { feat, lstm, trn };

const char* to_string(MetaVariant v);
MetaVariant parse_meta_variant(const std::string& s);

struct RunConfig {
    std::filesystem::path dataset;  // empty: use the synthetic benchmark
    std::filesystem::path workdir;
    std::uint64_t seed = 42;
    SplitRatios split;
    synth::SyntheticOptions synth;  // its seed is derived from `seed`
    embeddings::EmbeddingOptions embedding;
    neural::MetaModelConfig meta;   // variant and seed are set per run
    features::LogRegOptions logreg;
    std::vector<MetaVariant> variants{MetaVariant::feat, MetaVariant::lstm, MetaVariant::trn};
    std::vector<eval::Scenario> scenarios{eval::Scenario::all_all, eval::Scenario::all_filtered,
                                          eval::Scenario::filtered_filtered};
    int sig_iterations = 10000;
    double alpha = 0.05;
    int random_draws = 100;
    bool epoch_checkpoints = true;

    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

struct Manifest {
    std::string stage;
    std::string config_hash;
    std::map<std::string, std::string> inputs;   // relative path -> content hash
    std::map<std::string, std::string> outputs;  // relative path -> content hash
    std::map<std::string, std::uint64_t> seeds;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

std::string hash_file(const std::filesystem::path& path);
std::string hash_text(const std::string& text);

/// Exclusive hold on a work directory through a lock file; released on destruction.
class WorkdirLock {
public:
    explicit WorkdirLock(const std::filesystem::path& workdir);
    ~WorkdirLock();
    WorkdirLock(const WorkdirLock&) = delete;
    WorkdirLock& operator=(const WorkdirLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Exit status for an error category (0 is success).
int exit_code(ErrorKind kind);

struct Selections {
    std::vector<std::string> ids;
    std::vector<std::size_t> chosen;
    std::vector<std::vector<double>> probabilities;
};

/// The commands, all operating on one locked work directory. Every stage writes
/// into its own subdirectory together with a manifest.json.
class Session {
public:
    Session(RunConfig config, std::ostream* log = nullptr, bool force = false);

    const RunConfig& config() const { return cfg_; }
    const std::filesystem::path& workdir() const { return cfg_.workdir; }

    void synth();
    void prepare();
    void score();
    void label();
    void train_embeddings();
    void train_meta(MetaVariant v, TrainingSubset subset);
    void select(MetaVariant v, TrainingSubset subset);
    void evaluate();
    void complementarity();
    eval::SignificanceResult sigtest(MetaVariant v, eval::Scenario scenario);
    /// Every stage in order, for the configured variants and scenarios.
    void run_all();

    /// Expected configuration hash of a stage under the current config.
    std::string stage_hash(const std::string& stage) const;

    // loaders for stage outputs, checked against their manifests
    Dataset load_dataset() const;
    DatasetPartition load_partition() const;
    std::vector<ScoredSet> load_scores() const;
    std::vector<LabeledCandidateSet> load_labels() const;
    Selections load_selections(MetaVariant v, TrainingSubset subset) const;

private:
    std::filesystem::path stage_dir(const std::string& stage) const;
    /// Throws dependency/staleness errors unless the stage is present and current.
    void require_stage(const std::string& stage) const;
    void write_manifest(const std::string& stage, const std::vector<std::string>& inputs,
                        const std::vector<std::filesystem::path>& outputs,
                        const std::map<std::string, std::uint64_t>& seeds) const;
    void say(const std::string& msg) const;

    RunConfig cfg_;
    std::ostream* log_;
    bool force_;
    WorkdirLock lock_;
};

/// Stage key of a meta-model / selection run, e.g. "lstm_all".
std::string run_name(MetaVariant v, TrainingSubset subset);

/// The command a user runs to (re)build a stage.
std::string stage_command(const std::string& stage);

} // namespace metasum::pipeline
