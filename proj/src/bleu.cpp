#include "metasum/bleu.hpp"

#include "metasum/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metasum::bleu {

namespace {

using Seq = std::span<const std::string>;

bool ngram_less(Seq s, std::size_t a, std::size_t b, int n)
{
    for (int k = 0; k < n; ++k) {
        const int c = s[a + k].compare(s[b + k]);
        if (c != 0)
            return c < 0;
    }
    return false;
}

int ngram_compare(Seq s, std::size_t a, Seq t, std::size_t b, int n)
{
    for (int k = 0; k < n; ++k) {
        const int c = s[a + k].compare(t[b + k]);
        if (c != 0)
            return c;
    }
    return 0;
}

std::vector<std::size_t> sorted_starts(Seq s, int n)
{
    if (s.size() < static_cast<std::size_t>(n))
        return {};
    std::vector<std::size_t> starts(s.size() - n + 1);
    std::iota(starts.begin(), starts.end(), 0);
    std::sort(starts.begin(), starts.end(), [&](std::size_t a, std::size_t b) { return ngram_less(s, a, b, n); });
    return starts;
}

std::int64_t clipped_matches(Seq cand, const std::vector<std::size_t>& cs, Seq ref,
                             const std::vector<std::size_t>& rs, int n)
{
    std::int64_t clipped = 0;
    std::size_t i = 0, j = 0;
    while (i < cs.size() && j < rs.size()) {
        const int c = ngram_compare(cand, cs[i], ref, rs[j], n);
        if (c < 0) {
            ++i;
        } else if (c > 0) {
            ++j;
        } else {
            std::size_t ci = i, rj = j;
            while (ci < cs.size() && ngram_compare(cand, cs[ci], cand, cs[i], n) == 0)
                ++ci;
            while (rj < rs.size() && ngram_compare(ref, rs[rj], ref, rs[j], n) == 0)
                ++rj;
            clipped += static_cast<std::int64_t>(std::min(ci - i, rj - j));
            i = ci;
            j = rj;
        }
    }
    return clipped;
}

std::int64_t ngram_total(Seq s, int n)
{
    return s.size() >= static_cast<std::size_t>(n) ? static_cast<std::int64_t>(s.size() - n + 1) : 0;
}

} // namespace

Stats& Stats::operator+=(const Stats& o)
{
    for (int n = 0; n < max_order; ++n) {
        clipped[n] += o.clipped[n];
        candidate_totals[n] += o.candidate_totals[n];
        reference_totals[n] += o.reference_totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
}

std::pair<std::int64_t, std::int64_t> modified_precision(Seq candidate, Seq reference, int n)
{
    require(n >= 1 && n <= max_order, ErrorKind::precondition, "modified_precision: n must be in 1..4");
    const auto cs = sorted_starts(candidate, n);
    const auto rs = sorted_starts(reference, n);
    return {clipped_matches(candidate, cs, reference, rs, n), ngram_total(candidate, n)};
}

Stats sentence_stats(Seq candidate, Seq reference)
{
    Stats s;
    for (int n = 1; n <= max_order; ++n) {
        const auto [clipped, total] = modified_precision(candidate, reference, n);
        s.clipped[n - 1] = clipped;
        s.candidate_totals[n - 1] = total;
        s.reference_totals[n - 1] = ngram_total(reference, n);
    }
    s.candidate_length = static_cast<std::int64_t>(candidate.size());
    s.reference_length = static_cast<std::int64_t>(reference.size());
    return s;
}

double score(const Stats& s)
{
    double log_sum = 0.0;
    int orders = 0;
    for (int n = 0; n < max_order; ++n) {
        // An order neither side can express (both shorter than n) carries no evidence.
        if (s.candidate_totals[n] == 0 && s.reference_totals[n] == 0)
            continue;
        if (s.clipped[n] == 0)
            return 0.0;
        log_sum += std::log(static_cast<double>(s.clipped[n]) / static_cast<double>(s.candidate_totals[n]));
        ++orders;
    }
    if (orders == 0)
        return 0.0;
    const double c = static_cast<double>(s.candidate_length);
    const double r = static_cast<double>(s.reference_length);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / orders);
}

SentenceBleu sentence_bleu_detail(Seq candidate, Seq reference)
{
    require(!reference.empty(), ErrorKind::precondition, "sentence_bleu: empty reference");
    const Stats s = sentence_stats(candidate, reference);
    SentenceBleu out;
    for (int n = 0; n < max_order; ++n)
        out.precisions[n] = {s.clipped[n], s.candidate_totals[n]};
    const double c = static_cast<double>(s.candidate_length);
    const double r = static_cast<double>(s.reference_length);
    out.brevity_penalty = c == 0 ? 0.0 : (c < r ? std::exp(1.0 - r / c) : 1.0);
    out.score = score(s);
    return out;
}

double sentence_bleu(Seq candidate, Seq reference)
{
    require(!reference.empty(), ErrorKind::precondition, "sentence_bleu: empty reference");
    return score(sentence_stats(candidate, reference));
}

void CorpusAccumulator::add(Seq candidate, Seq reference)
{
    require(!reference.empty(), ErrorKind::precondition, "corpus_bleu: empty reference");
    add(sentence_stats(candidate, reference));
}

double CorpusAccumulator::score() const
{
    require(pairs_ > 0, ErrorKind::precondition, "corpus_bleu: no pairs");
    return bleu::score(stats_);
}

namespace {
void check_pairs(std::span<const Pair> pairs)
{
    for (const auto& p : pairs)
        require(!p.reference.empty(), ErrorKind::precondition, "corpus_bleu: empty reference");
}
} // namespace

Stats corpus_stats_serial(std::span<const Pair> pairs)
{
    check_pairs(pairs);
    Stats total;
    for (const auto& p : pairs)
        total += sentence_stats(p.candidate, p.reference);
    return total;
}

Stats corpus_stats(std::span<const Pair> pairs)
{
    check_pairs(pairs);
    Stats total;
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel
    {
        Stats local;
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i)
            local += sentence_stats(pairs[i].candidate, pairs[i].reference);
#pragma omp critical(metasum_bleu_reduce)
        total += local;
    }
    return total;
}

double corpus_bleu(std::span<const Pair> pairs)
{
    require(!pairs.empty(), ErrorKind::precondition, "corpus_bleu: empty pair list");
    return score(corpus_stats(pairs));
}

std::vector<Stats> pair_stats_serial(std::span<const Pair> pairs)
{
    check_pairs(pairs);
    std::vector<Stats> out(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        out[i] = sentence_stats(pairs[i].candidate, pairs[i].reference);
    return out;
}

std::vector<Stats> pair_stats(std::span<const Pair> pairs)
{
    check_pairs(pairs);
    std::vector<Stats> out(pairs.size());
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[i] = sentence_stats(pairs[i].candidate, pairs[i].reference);
    return out;
}

} // namespace metasum::bleu
