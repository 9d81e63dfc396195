#pragma once

#include "metasum/corpus.hpp"
#include "metasum/diff/graph.hpp"
#include "metasum/embeddings.hpp"
#include "metasum/evaluation.hpp"
#include "metasum/neural_meta.hpp"
#include "metasum/pipeline.hpp"
#include "metasum/random.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace metasum::fx {

/// Two methods with three candidate summaries each, the worked BLEU example.
Dataset worked_example_dataset();

/// Sentence BLEU of the six candidates, rounded to two decimals.
inline constexpr std::array<double, 6> worked_example_rounded{1.00, 0.59, 0.54, 0.17, 0.00, 0.46};
/// Hand-computed values of the same six scores.
std::array<double, 6> worked_example_exact();

diff::Tensor random_tensor(diff::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);

struct GradCheck {
    double max_rel_error = 0;
    std::size_t entries = 0;
};

/// Central differences over every entry of every input against the analytic gradient.
/// Relative error per entry is |a - n| / max(|a| + |n|, floor).
GradCheck check_gradients(const std::vector<diff::Var>& inputs, const std::function<diff::Var()>& loss,
                          double h = 1e-5, double floor = 1e-6);

/// Random weights so that sum(w * y) has a non-trivial gradient for every entry of y.
diff::Var weighted_sum(const diff::Var& y, std::uint64_t seed);

/// A tiny table with a few known words and random n-gram buckets.
std::shared_ptr<const embeddings::EmbeddingTable> tiny_table(int dim, std::vector<std::string> words,
                                                             std::uint64_t seed, std::size_t buckets = 64);

struct NamedCheck {
    std::string name;
    GradCheck result;
};

/// Finite-difference check of every differentiable primitive on random shapes,
/// masked ops with partial masks included.
std::vector<NamedCheck> primitive_gradient_checks(std::uint64_t seed = 1);

/// Full meta-model at a tiny size (d = 4, sequence length 3): BCE loss against every parameter.
GradCheck model_gradient_check(neural::Variant variant, bool fine_tune = false, std::uint64_t seed = 3);

/// 20 segments where system A reproduces the references and system B shares no token with them.
struct SeparationFixture {
    std::vector<eval::SystemOutput> a, b, references;
};
SeparationFixture extreme_separation_fixture();

/// Always answers candidate `k`, as a stand-in meta-model.
class FixedSelector final : public Selector {
public:
    FixedSelector(std::size_t k, TrainingSubset subset) : k_(k), subset_(subset) {}
    std::vector<double> predict(const CodeSegment&, const CandidateSet& set) const override
    {
        std::vector<double> p(set.candidates.size(), 0.0);
        p[k_] = 1.0;
        return p;
    }
    TrainingSubset training_subset() const override { return subset_; }
    std::string name() const override { return "fixed"; }

private:
    std::size_t k_;
    TrainingSubset subset_;
};

/// A pipeline configuration that runs end to end in a few seconds.
pipeline::RunConfig small_run_config(const std::filesystem::path& workdir, std::uint64_t seed = 3);

/// Dataset with `n` segments over a small vocabulary; candidates vary in overlap with the reference.
Dataset small_random_dataset(std::size_t n, std::size_t models, std::uint64_t seed);

} // namespace metasum::fx

#define EXPECT_ERROR_KIND(stmt, expected_kind)                                                            \
    do {                                                                                                  \
        try {                                                                                             \
            stmt;                                                                                         \
            ADD_FAILURE() << "no exception from " #stmt;                                                  \
        } catch (const ::metasum::Error& e_) {                                                            \
            EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                                             \
        }                                                                                                 \
    } while (0)
