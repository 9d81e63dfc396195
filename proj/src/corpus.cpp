#include "metasum/corpus.hpp"

#include "metasum/error.hpp"
#include "metasum/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace metasum {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
// Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept inside words.
bool is_word(unsigned char c) { return is_upper(c) || is_lower(c) || is_digit(c) || c >= 0x80; }

char lower(unsigned char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

std::string lowered(std::string_view s)
{
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(), [](unsigned char c) { return lower(c); });
    return out;
}

// "getHTTPResponse2" -> get, http, response2
void split_identifier(std::string_view word, Tokens& out)
{
    std::size_t start = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        const auto prev = static_cast<unsigned char>(word[i - 1]);
        const auto cur = static_cast<unsigned char>(word[i]);
        const bool next_lower = i + 1 < word.size() && is_lower(static_cast<unsigned char>(word[i + 1]));
        const bool boundary = (is_upper(cur) && (is_lower(prev) || is_digit(prev)))
                              || (is_upper(cur) && is_upper(prev) && next_lower);
        if (boundary) {
            out.push_back(lowered(word.substr(start, i - start)));
            start = i;
        }
    }
    out.push_back(lowered(word.substr(start)));
}

} // namespace

Tokens tokenize(std::string_view text, Side side)
{
    Tokens out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '_' && side == Side::code) {
            ++i;
            continue;
        }
        if (is_word(c)) {
            std::size_t j = i;
            while (j < text.size() && is_word(static_cast<unsigned char>(text[j])))
                ++j;
            const auto word = text.substr(i, j - i);
            if (side == Side::code)
                split_identifier(word, out);
            else
                out.push_back(lowered(word));
            i = j;
            continue;
        }
        out.emplace_back(1, static_cast<char>(c));
        ++i;
    }
    require(!out.empty(), ErrorKind::empty_input, "tokenize: text has no tokens");
    return out;
}

std::string join(std::span<const std::string> tokens, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i)
            out += sep;
        out += tokens[i];
    }
    return out;
}

Dataset make_dataset(std::vector<CodeSegment> segments, std::vector<CandidateSet> sets)
{
    require(segments.size() == sets.size(), ErrorKind::schema,
            "dataset: segment and candidate-set counts differ");
    Dataset ds;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        const auto& set = sets[i];
        const std::string where = "record " + std::to_string(i + 1) + " (" + seg.id + ")";
        require(seg.id == set.segment_id, ErrorKind::schema, where + ": candidate set does not match segment");
        require(!seg.code_tokens.empty(), ErrorKind::schema, where + ": empty code");
        require(!seg.reference_tokens.empty(), ErrorKind::schema, where + ": empty reference");
        require(seen.insert(seg.id).second, ErrorKind::schema, where + ": duplicate id");
        require(set.candidates.size() >= 2, ErrorKind::schema, where + ": fewer than 2 candidates");
        std::vector<std::string> order;
        for (const auto& c : set.candidates)
            order.push_back(c.model_id);
        if (i == 0) {
            std::unordered_set<std::string> distinct(order.begin(), order.end());
            require(distinct.size() == order.size(), ErrorKind::schema, where + ": duplicate model id");
            ds.model_ids = order;
        } else {
            require(order == ds.model_ids, ErrorKind::schema,
                    where + ": candidate model order differs from the first record");
        }
    }
    ds.segments = std::move(segments);
    ds.candidate_sets = std::move(sets);
    return ds;
}

Dataset parse_jsonl(std::istream& in)
{
    using nlohmann::json;
    std::vector<CodeSegment> segments;
    std::vector<CandidateSet> sets;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> first_order;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        auto field = [&](const json& obj, const char* name) -> const json& {
            if (!obj.is_object() || !obj.contains(name))
                throw ParseError(lineno, std::string("missing field \"") + name + "\"");
            return obj.at(name);
        };
        auto text = [&](const json& obj, const char* name) -> std::string {
            const auto& v = field(obj, name);
            if (!v.is_string())
                throw ParseError(lineno, std::string("field \"") + name + "\" is not a string");
            return v.get<std::string>();
        };
        auto tok = [&](const std::string& s, Side side, const char* name) {
            try {
                return tokenize(s, side);
            } catch (const Error&) {
                throw ParseError(lineno, std::string("field \"") + name + "\" is empty");
            }
        };

        CodeSegment seg;
        seg.id = text(rec, "id");
        seg.code_tokens = tok(text(rec, "code"), Side::code, "code");
        seg.reference_tokens = tok(text(rec, "reference"), Side::summary, "reference");
        const auto& cands = field(rec, "candidates");
        if (!cands.is_array())
            throw ParseError(lineno, "field \"candidates\" is not an array");
        CandidateSet set;
        set.segment_id = seg.id;
        for (const auto& c : cands)
            set.candidates.push_back({text(c, "model"), tok(text(c, "summary"), Side::summary, "summary")});

        std::vector<std::string> order;
        for (const auto& c : set.candidates)
            order.push_back(c.model_id);
        if (segments.empty())
            first_order = order;
        else if (order != first_order)
            throw Error(ErrorKind::schema, "line " + std::to_string(lineno)
                                               + ": candidate model order differs from line 1");
        segments.push_back(std::move(seg));
        sets.push_back(std::move(set));
    }
    return make_dataset(std::move(segments), std::move(sets));
}

Dataset load_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    return parse_jsonl(in);
}

void write_jsonl(std::ostream& out, const Dataset& ds)
{
    for (std::size_t i = 0; i < ds.size(); ++i) {
        nlohmann::json rec;
        rec["id"] = ds.segments[i].id;
        rec["code"] = join(ds.segments[i].code_tokens);
        rec["reference"] = join(ds.segments[i].reference_tokens);
        auto cands = nlohmann::json::array();
        for (const auto& c : ds.candidate_sets[i].candidates)
            cands.push_back({{"model", c.model_id}, {"summary", join(c.tokens)}});
        rec["candidates"] = std::move(cands);
        out << rec.dump() << '\n';
    }
}

void save_jsonl(const std::filesystem::path& path, const Dataset& ds)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    write_jsonl(out, ds);
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& ds)
{
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        idx.emplace(ds.segments[i].id, i);
    return idx;
}

void Vocabulary::add(const std::string& token, std::int64_t n)
{
    counts_[token] += n;
    total_ += n;
}

std::int64_t Vocabulary::count(const std::string& token) const
{
    const auto it = counts_.find(token);
    return it == counts_.end() ? 0 : it->second;
}

Vocabulary build_vocabulary(std::span<const Tokens> token_lists)
{
    Vocabulary v;
    for (const auto& list : token_lists)
        for (const auto& t : list)
            v.add(t);
    require(v.total() > 0, ErrorKind::empty_input, "build_vocabulary: no tokens");
    return v;
}

DatasetPartition partition(std::span<const std::string> ids, const SplitRatios& ratios, std::uint64_t seed)
{
    const double r[3] = {ratios.meta_train, ratios.meta_valid, ratios.test};
    for (double x : r)
        require(x > 0.0, ErrorKind::config, "partition: ratios must be positive");
    require(std::abs(r[0] + r[1] + r[2] - 1.0) <= 1e-9, ErrorKind::config, "partition: ratios must sum to 1");
    require(ids.size() >= 3, ErrorKind::size, "partition: need at least 3 segments");

    const std::size_t n = ids.size();
    const auto n_train = static_cast<std::size_t>(std::llround(r[0] * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::llround(r[1] * static_cast<double>(n)));
    require(n_train + n_valid <= n, ErrorKind::size, "partition: ratios leave no room for test");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    // 0 = train, 1 = valid, 2 = test; membership from the shuffle, output order from the dataset.
    std::vector<int> split(n, 2);
    for (std::size_t k = 0; k < n_train; ++k)
        split[order[k]] = 0;
    for (std::size_t k = n_train; k < n_train + n_valid; ++k)
        split[order[k]] = 1;

    DatasetPartition p;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = split[i] == 0 ? p.meta_train : split[i] == 1 ? p.meta_valid : p.test;
        dst.push_back(ids[i]);
    }
    return p;
}

std::vector<std::string> filter_nonzero(std::span<const ScoredSet> sets)
{
    std::vector<std::string> out;
    for (const auto& s : sets) {
        require(!s.scores.empty(), ErrorKind::precondition,
                "filter_nonzero: set " + s.segment_id + " carries no scores");
        if (*std::max_element(s.scores.begin(), s.scores.end()) > 0.0)
            out.push_back(s.segment_id);
    }
    return out;
}

} // namespace metasum
