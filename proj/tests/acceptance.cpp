// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "metasum/bleu.hpp"
#include "metasum/error.hpp"
#include "metasum/evaluation.hpp"
#include "metasum/labeling.hpp"
#include "metasum/pipeline.hpp"
#include "metasum/random.hpp"

#include "fixtures.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace metasum;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path g_workdir = fs::temp_directory_path() / "metasum_acceptance";

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

fs::path fresh(const std::string& name)
{
    const auto d = g_workdir / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void run_pipeline(const pipeline::RunConfig& cfg)
{
    pipeline::Session s(cfg);
    s.run_all();
}

// ---- 1 ------------------------------------------------------------------------

Outcome worked_example()
{
    const auto ds = fx::worked_example_dataset();
    std::size_t k = 0, ok = 0;
    std::string got;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (const auto& c : ds.candidate_sets[i].candidates) {
            const double b = bleu::sentence_bleu(c.tokens, ds.segments[i].reference_tokens);
            if (std::round(b * 100) == std::round(fx::worked_example_rounded[k] * 100))
                ++ok;
            got += fmt(k ? " %.2f" : "%.2f", b);
            ++k;
        }
    return {ok == 6 && k == 6, std::to_string(ok) + "/6 match [" + got + "]"};
}

// ---- 2 ------------------------------------------------------------------------

Outcome gradients()
{
    double worst = 0;
    std::string worst_name;
    std::size_t checks = 0;
    auto note = [&](const std::string& name, const fx::GradCheck& g) {
        ++checks;
        if (!(g.max_rel_error <= worst)) {
            worst = g.max_rel_error;
            worst_name = name;
        }
    };
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
        for (const auto& c : fx::primitive_gradient_checks(seed))
            note(c.name, c.result);
    for (auto v : {neural::Variant::lstm, neural::Variant::trn})
        for (bool ft : {false, true})
            note(std::string(neural::to_string(v)) + (ft ? "+fine-tune" : ""),
                 fx::model_gradient_check(v, ft));
    return {worst < 1e-4, std::to_string(checks) + " checks, max relative error " + fmt("%.2e", worst) + " (" +
                              worst_name + ")"};
}

// ---- 3 ------------------------------------------------------------------------

Outcome labeling_rule()
{
    Rng rng(10000);
    std::size_t bad = 0, all_zero = 0, tied = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t j = 2 + rng.below(4);
        std::vector<double> v(j);
        const bool quantised = rng.coin(0.5);
        for (auto& x : v)
            x = rng.coin(0.25) ? 0.0 : quantised ? std::round(rng.uniform() * 4) / 4 : rng.uniform();
        if (rng.coin(0.1))
            std::fill(v.begin(), v.end(), 0.0);
        if (rng.coin(0.2))
            v[rng.below(j)] = *std::max_element(v.begin(), v.end());

        const auto labels = derive_labels(v);
        const double mx = *std::max_element(v.begin(), v.end());
        bool ok = labels.size() == j;
        for (std::size_t i = 0; ok && i < j; ++i)
            ok = labels[i] == (mx > 0 && v[i] == mx ? 1 : 0);
        const auto pos = std::count(labels.begin(), labels.end(), 1);
        all_zero += mx == 0;
        tied += pos > 1;

        const double c = rng.uniform(0.1, 10.0);
        std::vector<double> scaled = v;
        for (auto& x : scaled)
            x *= c;
        ok = ok && derive_labels(scaled) == labels;
        bad += !ok;
    }
    return {bad == 0, "10000 vectors, " + std::to_string(bad) + " violations (" + std::to_string(all_zero) +
                          " all-zero, " + std::to_string(tied) + " with ties)"};
}

// ---- 4 and 5 --------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    json summary;
};

std::vector<SeedRun> g_seed_runs;

void default_seed_runs()
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        pipeline::RunConfig cfg;
        cfg.workdir = fresh("benchmark_seed" + std::to_string(seed));
        cfg.seed = seed;
        cfg.scenarios = {eval::Scenario::filtered_filtered};
        cfg.variants = {pipeline::MetaVariant::feat, pipeline::MetaVariant::lstm, pipeline::MetaVariant::trn};
        cfg.sig_iterations = 1000;
        const auto t0 = std::chrono::steady_clock::now();
        run_pipeline(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "  seed " << seed << ": pipeline " << fmt("%.0f", secs) << " s\n";
        g_seed_runs.push_back({seed, read_json(cfg.workdir / "reports/summary.json")["filtered_filtered"]});
    }
}

Outcome oracle_dominance()
{
    if (g_seed_runs.empty())
        default_seed_runs();
    bool oracle_ok = true;
    std::string detail;
    bool pass = true;
    for (const char* name : {"meta_lstm", "meta_trn"}) {
        int wins = 0;
        std::string deltas;
        for (const auto& r : g_seed_runs) {
            const auto& b = r.summary["baselines"];
            const double best = *std::max_element(b.begin(), b.end());
            const double meta = r.summary["meta"][name]["bleu"].get<double>();
            wins += meta - best > 0;
            deltas += fmt(deltas.empty() ? "%+.2f" : " %+.2f", 100 * (meta - best));
        }
        pass = pass && wins >= 4;
        detail += std::string(detail.empty() ? "" : "; ") + name + " beats best baseline in " +
                  std::to_string(wins) + "/5 seeds [" + deltas + "]";
    }
    for (const auto& r : g_seed_runs)
        for (const auto& b : r.summary["baselines"])
            oracle_ok = oracle_ok && r.summary["oracle"].get<double>() >= b.get<double>();
    detail += oracle_ok ? "; oracle >= every baseline" : "; oracle below a baseline";
    return {pass && oracle_ok, detail};
}

Outcome feat_sanity()
{
    if (g_seed_runs.empty())
        default_seed_runs();
    int ok = 0;
    std::string deltas;
    for (const auto& r : g_seed_runs) {
        const double feat = r.summary["meta"]["meta_feat"]["bleu"].get<double>();
        const double rnd = r.summary["random"].get<double>();
        ok += feat >= rnd;
        deltas += fmt(deltas.empty() ? "%+.2f" : " %+.2f", 100 * (feat - rnd));
    }
    return {ok == static_cast<int>(g_seed_runs.size()),
            "meta_feat >= random in " + std::to_string(ok) + "/" + std::to_string(g_seed_runs.size()) +
                " seeds [" + deltas + "]"};
}

// ---- 6 and 8 share the small pipeline runs ----------------------------------------

fs::path g_small_a, g_small_b;

void small_runs()
{
    if (!g_small_a.empty())
        return;
    g_small_a = fresh("small_a");
    g_small_b = fresh("small_b");
    run_pipeline(fx::small_run_config(g_small_a, 11));
    run_pipeline(fx::small_run_config(g_small_b, 11));
}

Outcome scenario_consistency()
{
    small_runs();
    pipeline::Session s(fx::small_run_config(g_small_a, 11));
    const auto ds = s.load_dataset();
    const auto part = s.load_partition();
    const auto scores = s.load_scores();
    const json filtered = read_json(g_small_a / "labels/filtered.json");
    const json summary = read_json(g_small_a / "reports/summary.json");

    std::unordered_map<std::string, double> best;
    for (const auto& set : scores)
        best[set.segment_id] = *std::max_element(set.scores.begin(), set.scores.end());

    std::vector<std::string> problems;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond)
            problems.push_back(what);
    };
    const std::pair<const char*, const std::vector<std::string>*> parts[] = {
        {"meta_train", &part.meta_train}, {"meta_valid", &part.meta_valid}, {"test", &part.test}};
    for (const auto& [key, ids] : parts) {
        const auto sub = filtered[key].get<std::vector<std::string>>();
        const std::set<std::string> whole(ids->begin(), ids->end());
        std::size_t expected = 0;
        for (const auto& id : *ids)
            expected += best.at(id) > 0;
        expect(sub.size() == expected, std::string(key) + " filtered size");
        for (const auto& id : sub) {
            expect(whole.count(id) == 1, std::string(key) + " filtered id outside its partition");
            expect(best.at(id) > 0, std::string(key) + " filtered set with max BLEU 0");
        }
    }

    const auto test_f = filtered["test"].get<std::vector<std::string>>();
    const auto derived = eval::scenario_test_ids(eval::Scenario::all_filtered, part.test, scores);
    expect(derived == test_f, "scenario test ids differ from the labeled filtered test set");

    const auto& col = summary["all_filtered"];
    expect(col["test_size"].get<std::size_t>() == test_f.size(), "reported test size");
    const auto sel = s.load_selections(pipeline::MetaVariant::feat, TrainingSubset::all);
    std::unordered_map<std::string, std::size_t> chosen_of;
    for (std::size_t i = 0; i < sel.ids.size(); ++i)
        chosen_of[sel.ids[i]] = sel.chosen[i];
    std::vector<std::size_t> chosen;
    for (const auto& id : test_f)
        chosen.push_back(chosen_of.at(id));
    const double recomputed = eval::selection_bleu(ds, test_f, chosen);
    const double reported = col["meta"]["meta_feat"]["bleu"].get<double>();
    expect(std::abs(recomputed - reported) <= 1e-12, "meta_feat all/filtered BLEU differs from recomputation");
    for (std::size_t k = 0; k < col["baselines"].size(); ++k)
        expect(std::abs(eval::position_bleu(ds, test_f, k) - col["baselines"][k].get<double>()) <= 1e-12,
               "baseline " + std::to_string(k) + " differs from recomputation");

    std::string detail = std::to_string(test_f.size()) + "/" + std::to_string(part.test.size()) +
                         " test segments filtered, all/filtered meta_feat " + fmt("%.4f", reported) +
                         " vs recomputed " + fmt("%.4f", recomputed);
    for (const auto& p : problems)
        detail += "; " + p;
    return {problems.empty(), detail};
}

Outcome significance()
{
    const auto f = fx::extreme_separation_fixture();
    const auto same = eval::approx_randomization_test(f.a, f.a, f.references, 10000, 42);
    const auto sep = eval::approx_randomization_test(f.a, f.b, f.references, 10000, 42);
    const auto again = eval::approx_randomization_test(f.a, f.b, f.references, 10000, 42);
    const auto serial = eval::approx_randomization_test_serial(f.a, f.b, f.references, 10000, 42);
    const bool repro = again.p_value == sep.p_value && serial.p_value == sep.p_value &&
                       again.observed_delta == sep.observed_delta;
    return {same.p_value == 1.0 && sep.p_value < 0.05 && repro,
            "identical p=" + fmt("%.4f", same.p_value) + ", separated p=" + fmt("%.5f", sep.p_value) +
                (repro ? ", reproducible" : ", NOT reproducible")};
}

Outcome determinism()
{
    small_runs();
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (const char* dir : {"reports", "analysis", "selections", "labels", "scores"})
        for (const auto& e : fs::recursive_directory_iterator(g_small_a / dir)) {
            if (!e.is_regular_file())
                continue;
            const auto rel = fs::relative(e.path(), g_small_a);
            ++files;
            if (!fs::exists(g_small_b / rel) || slurp(e.path()) != slurp(g_small_b / rel))
                differing.push_back(rel.string());
        }
    std::string detail = std::to_string(files) + " files compared, " + std::to_string(differing.size()) + " differ";
    for (const auto& d : differing)
        detail += " " + d;
    return {files > 0 && differing.empty(), detail};
}

} // namespace

int main(int argc, char** argv)
{
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--workdir")
            g_workdir = argv[i + 1];
    fs::create_directories(g_workdir);

    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"BLEU exactness", worked_example},
        {"gradient integrity", gradients},
        {"labeling rule", labeling_rule},
        {"oracle dominance", oracle_dominance},
        {"meta_feat sanity", feat_sanity},
        {"scenario consistency", scenario_consistency},
        {"significance machinery", significance},
        {"determinism audit", determinism},
    };
    int failed = 0, n = 0;
    for (const auto& [name, check] : criteria) {
        ++n;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << n << " " << name << ": " << o.detail << " ("
                  << fmt("%.1f", secs) << " s)" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
