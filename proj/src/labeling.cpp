#include "metasum/labeling.hpp"

#include "metasum/bleu.hpp"
#include "metasum/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace metasum {

std::vector<double> score_candidates(const CandidateSet& set, const Tokens& reference)
{
    std::vector<double> scores;
    scores.reserve(set.candidates.size());
    for (const auto& c : set.candidates)
        scores.push_back(bleu::sentence_bleu(c.tokens, reference));
    return scores;
}

std::vector<ScoredSet> score_dataset_serial(const Dataset& ds)
{
    std::vector<ScoredSet> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        out[i] = {ds.segments[i].id, score_candidates(ds.candidate_sets[i], ds.segments[i].reference_tokens)};
    return out;
}

std::vector<ScoredSet> score_dataset(const Dataset& ds)
{
    std::vector<ScoredSet> out(ds.size());
    const auto n = static_cast<std::ptrdiff_t>(ds.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[i] = {ds.segments[i].id, score_candidates(ds.candidate_sets[i], ds.segments[i].reference_tokens)};
    return out;
}

namespace {
double round9(double x) { return std::round(x * 1e9) / 1e9; }
} // namespace

std::vector<int> derive_labels(std::span<const double> scores)
{
    require(!scores.empty(), ErrorKind::precondition, "derive_labels: no scores");
    std::vector<int> labels(scores.size(), 0);
    const double best = *std::max_element(scores.begin(), scores.end());
    if (!(best > 0.0))
        return labels;
    const double best_r = round9(best);
    for (std::size_t i = 0; i < scores.size(); ++i)
        labels[i] = round9(scores[i]) == best_r ? 1 : 0;
    return labels;
}

std::vector<LabeledCandidateSet> label_sets(std::span<const ScoredSet> sets)
{
    std::vector<LabeledCandidateSet> out;
    out.reserve(sets.size());
    for (const auto& s : sets)
        out.push_back({s.segment_id, s.scores, derive_labels(s.scores)});
    return out;
}

namespace {

std::string score_list(std::span<const double> scores)
{
    std::string s = "[";
    char buf[32];
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.6f", i ? ", " : "", scores[i]);
        s += buf;
    }
    return s + "]";
}

template <typename F>
void for_each_record(std::istream& in, F&& f)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
            f(rec);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
}

} // namespace

void write_score_dump(std::ostream& out, std::span<const ScoredSet> sets)
{
    for (const auto& s : sets)
        out << "{\"id\": " << nlohmann::json(s.segment_id).dump() << ", \"scores\": " << score_list(s.scores) << "}\n";
}

std::vector<ScoredSet> read_score_dump(std::istream& in)
{
    std::vector<ScoredSet> out;
    for_each_record(in, [&](const nlohmann::json& rec) {
        out.push_back({rec.at("id").get<std::string>(), rec.at("scores").get<std::vector<double>>()});
    });
    return out;
}

void write_label_dump(std::ostream& out, std::span<const LabeledCandidateSet> sets)
{
    for (const auto& s : sets) {
        out << "{\"id\": " << nlohmann::json(s.segment_id).dump() << ", \"scores\": " << score_list(s.scores)
            << ", \"labels\": [";
        for (std::size_t i = 0; i < s.labels.size(); ++i)
            out << (i ? ", " : "") << s.labels[i];
        out << "]}\n";
    }
}

std::vector<LabeledCandidateSet> read_label_dump(std::istream& in)
{
    std::vector<LabeledCandidateSet> out;
    for_each_record(in, [&](const nlohmann::json& rec) {
        LabeledCandidateSet s{rec.at("id").get<std::string>(), rec.at("scores").get<std::vector<double>>(),
                              rec.at("labels").get<std::vector<int>>()};
        if (s.scores.size() != s.labels.size())
            throw Error(ErrorKind::schema, "label dump: scores and labels differ in length for " + s.segment_id);
        out.push_back(std::move(s));
    });
    return out;
}

} // namespace metasum
