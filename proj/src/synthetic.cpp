#include "metasum/synthetic.hpp"

#include "metasum/error.hpp"
#include "metasum/random.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

namespace metasum::synth {

namespace {

struct Family {
    std::vector<std::string> nouns;
    std::vector<std::string> verbs;
    std::vector<std::string> adjectives;
    std::vector<std::string> types;  // CamelCase API types used in code
};

const std::vector<Family>& builtin_families()
{
    static const std::vector<Family> f = {
        {{"file", "path", "stream", "directory", "buffer", "archive", "line", "header"},
         {"read", "write", "open", "close", "copy", "flush"},
         {"temporary", "binary", "compressed", "hidden"},
         {"FileReader", "InputStream", "PathResolver", "ByteBuffer"}},
        {{"user", "account", "session", "password", "token", "role", "permission", "group"},
         {"create", "delete", "validate", "authenticate", "revoke", "grant"},
         {"active", "expired", "locked", "anonymous"},
         {"UserManager", "SessionStore", "AuthToken", "RoleRegistry"}},
        {{"matrix", "vector", "sum", "angle", "range", "sample", "point", "interval"},
         {"compute", "normalize", "multiply", "scale", "rotate", "estimate"},
         {"average", "maximum", "negative", "sparse"},
         {"MatrixUtils", "VectorMath", "RandomSampler", "PointCloud"}},
        {{"widget", "window", "button", "label", "color", "font", "layout", "panel"},
         {"draw", "render", "resize", "hide", "paint", "select"},
         {"visible", "selected", "transparent", "modal"},
         {"WidgetFactory", "ColorPalette", "LayoutManager", "FontCache"}},
        {{"packet", "socket", "host", "port", "request", "response", "channel", "address"},
         {"send", "receive", "connect", "bind", "forward", "parse"},
         {"remote", "secure", "pending", "blocking"},
         {"SocketChannel", "HttpRequest", "HostResolver", "PacketQueue"}},
        {{"query", "table", "row", "column", "index", "record", "schema", "cursor"},
         {"insert", "update", "fetch", "commit", "drop", "join"},
         {"primary", "unique", "empty", "cached"},
         {"QueryBuilder", "TableSchema", "RowMapper", "IndexCursor"}},
    };
    return f;
}

const std::vector<std::string>& junk_words()
{
    static const std::vector<std::string> j = {"thing", "stuff", "item", "value", "object",
                                               "something", "method", "code", "this", "it"};
    return j;
}

/// Families beyond the built-in ones get made-up but stable words.
Family family(std::size_t f)
{
    const auto& b = builtin_families();
    if (f < b.size())
        return b[f];
    Family g;
    const std::string tag = "f" + std::to_string(f);
    for (int k = 0; k < 8; ++k)
        g.nouns.push_back(tag + "noun" + std::to_string(k));
    for (int k = 0; k < 6; ++k)
        g.verbs.push_back(tag + "verb" + std::to_string(k));
    for (int k = 0; k < 4; ++k)
        g.adjectives.push_back(tag + "adj" + std::to_string(k));
    for (int k = 0; k < 4; ++k)
        g.types.push_back("F" + std::to_string(f) + "Type" + std::to_string(k));
    return g;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) { return v[rng.below(v.size())]; }

std::string capitalized(std::string s)
{
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z')
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

struct Draft {
    Tokens reference;
    std::string code;
};

Draft draft(const Family& fam, Rng& rng)
{
    const std::string verb = pick(fam.verbs, rng);
    const std::string n1 = pick(fam.nouns, rng);
    std::string n2 = pick(fam.nouns, rng);
    if (n2 == n1)
        n2 = fam.nouns[(rng.below(fam.nouns.size() - 1) + 1 + std::find(fam.nouns.begin(), fam.nouns.end(), n1)
                        - fam.nouns.begin())
                       % fam.nouns.size()];
    const std::string adj = pick(fam.adjectives, rng);
    const std::string t1 = pick(fam.types, rng);
    const std::string t2 = pick(fam.types, rng);

    Draft d;
    switch (rng.below(5)) {
    case 0: d.reference = {verb, "the", adj, n1, "of", "the", n2}; break;
    case 1: d.reference = {"returns", "the", n1, "for", "the", "given", n2}; break;
    case 2: d.reference = {verb, "a", "new", n1, "from", "the", "specified", n2}; break;
    case 3: d.reference = {verb, "the", n1, "to", "the", adj, n2, "and", "returns", "it"}; break;
    default: d.reference = {"checks", "whether", "the", n1, "of", "the", n2, "is", adj}; break;
    }

    const std::string name = verb + capitalized(n1);
    char buf[512];
    switch (rng.below(3)) {
    case 0:
        std::snprintf(buf, sizeof buf, "public %s %s(%s %s) { %s %s = %s.get%s(); return %s; }", t1.c_str(),
                      name.c_str(), t2.c_str(), n2.c_str(), t1.c_str(), n1.c_str(), n2.c_str(),
                      capitalized(n1).c_str(), n1.c_str());
        break;
    case 1:
        std::snprintf(buf, sizeof buf, "void %s(%s %s, boolean %s) { if (%s) { this.%s.%s(%s); } }", name.c_str(),
                      t1.c_str(), n2.c_str(), adj.c_str(), adj.c_str(), n1.c_str(), verb.c_str(), n2.c_str());
        break;
    default:
        std::snprintf(buf, sizeof buf,
                      "static %s %s(%s %s) throws Exception { return new %s(%s.%s%s()); }", t2.c_str(),
                      name.c_str(), t1.c_str(), n2.c_str(), t2.c_str(), n2.c_str(), verb.c_str(),
                      capitalized(n1).c_str());
        break;
    }
    d.code = buf;
    return d;
}

Tokens corrupt(const Tokens& reference, double rate, std::size_t own_family, std::size_t families, Rng& rng)
{
    Tokens out;
    for (const auto& tok : reference) {
        if (rng.uniform() >= rate) {
            out.push_back(tok);
            continue;
        }
        const double action = rng.uniform();
        if (action < 0.4) {
            std::size_t other = rng.below(families - 1);
            if (other >= own_family)
                ++other;
            const Family fam = family(other);
            out.push_back(rng.coin(0.5) ? pick(fam.nouns, rng) : pick(fam.verbs, rng));
        } else if (action < 0.8) {
            out.push_back(pick(junk_words(), rng));
        }
        // else: deleted
    }
    if (out.empty())
        out.push_back(pick(junk_words(), rng));
    return out;
}

} // namespace

std::vector<std::vector<double>> effective_rates(const SyntheticOptions& opt)
{
    require(opt.models >= 2, ErrorKind::config, "synthetic benchmark needs at least 2 models");
    require(opt.segments >= 1, ErrorKind::config, "synthetic benchmark needs at least 1 segment");
    auto rates = opt.rates;
    if (rates.empty()) {
        rates.assign(opt.models, std::vector<double>(opt.models, opt.other_rate));
        for (std::size_t m = 0; m < opt.models; ++m)
            rates[m][m] = opt.own_rate;
    }
    require(rates.size() == opt.models, ErrorKind::config, "noise profile: one row per model required");
    for (std::size_t m = 0; m < opt.models; ++m) {
        require(rates[m].size() == opt.models, ErrorKind::config,
                "noise profile: row " + std::to_string(m) + " needs one rate per family");
        for (double r : rates[m])
            require(r >= 0.0 && r <= 1.0, ErrorKind::config, "noise profile: rates must lie in [0, 1]");
        for (std::size_t f = 0; f < opt.models; ++f)
            require(rates[m][m] <= rates[m][f], ErrorKind::config,
                    "noise profile: model " + std::to_string(m) + " must be least corrupted on its own family");
    }
    return rates;
}

Dataset generate_synthetic_benchmark(const SyntheticOptions& opt)
{
    const auto rates = effective_rates(opt);
    std::vector<CodeSegment> segments;
    std::vector<CandidateSet> sets;
    segments.reserve(opt.segments);
    sets.reserve(opt.segments);
    for (std::size_t i = 0; i < opt.segments; ++i) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
        const std::size_t f = family_of(i, opt.models);
        const Draft d = draft(family(f), rng);
        char id[32];
        std::snprintf(id, sizeof id, "syn-%06zu", i);
        CodeSegment seg{id, tokenize(d.code, Side::code), d.reference};
        CandidateSet set{id, {}};
        for (std::size_t m = 0; m < opt.models; ++m)
            set.candidates.push_back(
                {"model_" + std::to_string(m), corrupt(d.reference, rates[m][f], f, opt.models, rng)});
        segments.push_back(std::move(seg));
        sets.push_back(std::move(set));
    }
    return make_dataset(std::move(segments), std::move(sets));
}

} // namespace metasum::synth
