#include "metasum/corpus.hpp"
#include "metasum/error.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace metasum;

namespace {

Tokens toks(std::initializer_list<const char*> xs) { return Tokens(xs.begin(), xs.end()); }

std::string record(const std::string& id, std::vector<std::string> models)
{
    std::string s = R"j({"id": ")j" + id + R"j(", "code": "int f()", "reference": "returns f", "candidates": [)j";
    for (std::size_t i = 0; i < models.size(); ++i)
        s += (i ? ", " : "") + std::string(R"j({"model": ")j") + models[i] + R"j(", "summary": "returns f"})j";
    return s + "]}\n";
}

} // namespace

TEST(Tokenize, CamelCase)
{
    EXPECT_EQ(tokenize("getHelpfulVotes", Side::code), toks({"get", "helpful", "votes"}));
}

TEST(Tokenize, SummaryWhitespace)
{
    EXPECT_EQ(tokenize("gets the value", Side::summary), toks({"gets", "the", "value"}));
}

TEST(Tokenize, CodePunctuation)
{
    EXPECT_EQ(tokenize("bottomPane.lastButton.setVisible(b);", Side::code),
              toks({"bottom", "pane", ".", "last", "button", ".", "set", "visible", "(", "b", ")", ";"}));
}

TEST(Tokenize, SnakeCaseAndAcronyms)
{
    EXPECT_EQ(tokenize("max_row_count", Side::code), toks({"max", "row", "count"}));
    EXPECT_EQ(tokenize("Returns the Value.", Side::summary), toks({"returns", "the", "value", "."}));
}

TEST(Tokenize, EmptyIsError)
{
    EXPECT_ERROR_KIND(tokenize("", Side::code), ErrorKind::empty_input);
    EXPECT_ERROR_KIND(tokenize("   \t", Side::summary), ErrorKind::empty_input);
}

TEST(Tokenize, SummaryIdempotentOnJoinedOutput)
{
    const char* texts[] = {"gets the value of the helpful votes property", "Determines, whether (to) display!",
                           "a.b c;d", "returns  the   NEXT item"};
    for (const char* t : texts) {
        const auto once = tokenize(t, Side::summary);
        EXPECT_EQ(tokenize(join(once), Side::summary), once) << t;
    }
}

TEST(LoadJsonl, TwoLines)
{
    std::istringstream in(record("a", {"x", "y"}) + record("b", {"x", "y"}));
    const auto ds = parse_jsonl(in);
    EXPECT_EQ(ds.segments.size(), 2u);
    EXPECT_EQ(ds.candidate_sets.size(), 2u);
    EXPECT_EQ(ds.model_ids, (std::vector<std::string>{"x", "y"}));
}

TEST(LoadJsonl, MissingReferenceNamesLine)
{
    std::istringstream in(record("a", {"x", "y"}) +
                          R"j({"id": "b", "code": "int g()", "candidates": [{"model": "x", "summary": "s"}, {"model": "y", "summary": "t"}]})j"
                          "\n");
    try {
        parse_jsonl(in);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("reference"), std::string::npos);
    }
}

TEST(LoadJsonl, InconsistentModelOrder)
{
    std::istringstream in(record("a", {"a", "b", "c"}) + record("b", {"b", "a", "c"}));
    EXPECT_ERROR_KIND(parse_jsonl(in), ErrorKind::schema);
}

TEST(LoadJsonl, RoundTrip)
{
    const auto ds = fx::worked_example_dataset();
    std::ostringstream out;
    write_jsonl(out, ds);
    std::istringstream in(out.str());
    const auto back = parse_jsonl(in);
    ASSERT_EQ(back.size(), ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.segments[i].code_tokens, ds.segments[i].code_tokens);
        EXPECT_EQ(back.segments[i].reference_tokens, ds.segments[i].reference_tokens);
        for (std::size_t k = 0; k < 3; ++k)
            EXPECT_EQ(back.candidate_sets[i].candidates[k].tokens, ds.candidate_sets[i].candidates[k].tokens);
    }
}

TEST(LoadJsonl, DuplicateIdAndTooFewCandidates)
{
    std::istringstream dup(record("a", {"x", "y"}) + record("a", {"x", "y"}));
    EXPECT_ERROR_KIND(parse_jsonl(dup), ErrorKind::schema);
    std::istringstream one(record("a", {"x"}));
    EXPECT_ERROR_KIND(parse_jsonl(one), ErrorKind::schema);
}

TEST(Vocabulary, Counts)
{
    const std::vector<Tokens> lists{toks({"a", "b"}), toks({"a"})};
    const auto v = build_vocabulary(lists);
    EXPECT_EQ(v.count("a"), 2);
    EXPECT_EQ(v.count("b"), 1);
    EXPECT_EQ(v.count("zzz"), 0);
    EXPECT_EQ(v.total(), 3);

    const std::vector<Tokens> triple{toks({"a", "a", "a"})};
    const auto w = build_vocabulary(triple);
    EXPECT_EQ(w.size(), 1u);
    EXPECT_EQ(w.count("a"), 3);
    EXPECT_EQ(w.total(), 3);
}

TEST(Vocabulary, IdenticalTokens)
{
    const std::vector<Tokens> lists{Tokens(1000, "t")};
    const auto v = build_vocabulary(lists);
    EXPECT_EQ(v.size(), 1u);
    EXPECT_EQ(v.count("t"), 1000);
}

TEST(Vocabulary, EmptyIsError)
{
    const std::vector<Tokens> lists{Tokens{}, Tokens{}};
    EXPECT_ERROR_KIND(build_vocabulary(lists), ErrorKind::empty_input);
}

TEST(Vocabulary, TotalIsSumOfLengths)
{
    const auto ds = fx::small_random_dataset(50, 3, 5);
    std::vector<Tokens> lists;
    std::int64_t len = 0;
    for (const auto& s : ds.segments) {
        lists.push_back(s.code_tokens);
        len += static_cast<std::int64_t>(s.code_tokens.size());
    }
    const auto v = build_vocabulary(lists);
    EXPECT_EQ(v.total(), len);
    std::int64_t sum = 0;
    for (const auto& [w, c] : v.counts()) {
        EXPECT_GE(c, 1);
        sum += c;
    }
    EXPECT_EQ(sum, v.total());
}

namespace {

std::vector<std::string> ids(std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back("id" + std::to_string(i));
    return out;
}

} // namespace

TEST(Partition, Sizes)
{
    const auto all = ids(100);
    const auto p = partition(all, SplitRatios{}, 7);
    EXPECT_EQ(p.meta_train.size(), 72u);
    EXPECT_EQ(p.meta_valid.size(), 11u);
    EXPECT_EQ(p.test.size(), 17u);
}

TEST(Partition, Deterministic)
{
    const auto all = ids(100);
    const auto a = partition(all, SplitRatios{}, 7);
    const auto b = partition(all, SplitRatios{}, 7);
    EXPECT_EQ(a.meta_train, b.meta_train);
    EXPECT_EQ(a.meta_valid, b.meta_valid);
    EXPECT_EQ(a.test, b.test);
}

TEST(Partition, ThreeIds)
{
    const auto all = ids(3);
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        const auto p = partition(all, SplitRatios{1.0 / 3, 1.0 / 3, 1.0 / 3}, seed);
        EXPECT_EQ(p.meta_train.size(), 1u);
        EXPECT_EQ(p.meta_valid.size(), 1u);
        EXPECT_EQ(p.test.size(), 1u);
    }
}

TEST(Partition, Errors)
{
    const auto two = ids(2);
    EXPECT_ERROR_KIND(partition(two, SplitRatios{}, 1), ErrorKind::size);
    const auto ten = ids(10);
    EXPECT_ERROR_KIND(partition(ten, SplitRatios{0.5, 0.5, 0.5}, 1), ErrorKind::config);
}

TEST(Partition, DisjointExhaustiveSeedChangesMembership)
{
    const auto all = ids(257);
    const auto a = partition(all, SplitRatios{}, 1);
    const auto b = partition(all, SplitRatios{}, 2);
    std::multiset<std::string> seen;
    for (const auto* part : {&a.meta_train, &a.meta_valid, &a.test})
        seen.insert(part->begin(), part->end());
    EXPECT_EQ(seen.size(), all.size());
    EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()), std::set<std::string>(all.begin(), all.end()));
    EXPECT_EQ(a.meta_train.size(), b.meta_train.size());
    EXPECT_EQ(a.test.size(), b.test.size());
    EXPECT_NE(a.test, b.test);
}

TEST(FilterNonzero, Examples)
{
    const std::vector<ScoredSet> sets{{"m2", {0.17, 0.00, 0.46}}, {"z", {0, 0, 0}}};
    EXPECT_EQ(filter_nonzero(sets), (std::vector<std::string>{"m2"}));
    EXPECT_TRUE(filter_nonzero(std::span<const ScoredSet>{}).empty());
    const std::vector<ScoredSet> missing{{"a", {}}};
    EXPECT_ERROR_KIND(filter_nonzero(missing), ErrorKind::precondition);
}

TEST(FilterNonzero, SubsetProperty)
{
    Rng rng(3);
    std::vector<ScoredSet> sets;
    for (int i = 0; i < 500; ++i) {
        ScoredSet s{"s" + std::to_string(i), {}};
        for (int k = 0; k < 3; ++k)
            s.scores.push_back(rng.coin(0.5) ? 0.0 : rng.uniform());
        sets.push_back(s);
    }
    const auto kept = filter_nonzero(sets);
    std::set<std::string> keep(kept.begin(), kept.end());
    for (const auto& s : sets) {
        const bool nz = *std::max_element(s.scores.begin(), s.scores.end()) > 0;
        EXPECT_EQ(keep.count(s.segment_id) == 1, nz);
    }
}
