#include "metasum/embeddings.hpp"

#include "metasum/error.hpp"
#include "metasum/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace metasum::embeddings {

namespace {

std::uint32_t fnv1a32(std::string_view s)
{
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

bool utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

} // namespace

SubwordHasher::SubwordHasher(int min_n, int max_n, std::size_t buckets)
    : min_n_(min_n), max_n_(max_n), buckets_(buckets)
{
    require(min_n >= 1 && max_n >= min_n, ErrorKind::config, "subword n-gram range must satisfy 1 <= min <= max");
    require(buckets > 0, ErrorKind::config, "bucket count must be positive");
}

std::vector<std::size_t> SubwordHasher::buckets_of(const std::string& word) const
{
    const std::string s = "<" + word + ">";
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (utf8_continuation(static_cast<unsigned char>(s[i])))
            continue;
        std::size_t j = i;
        for (int n = 1; j < s.size() && n <= max_n_; ++n) {
            ++j;
            while (j < s.size() && utf8_continuation(static_cast<unsigned char>(s[j])))
                ++j;
            if (n >= min_n_)
                out.push_back(fnv1a32(std::string_view(s).substr(i, j - i)) % buckets_);
        }
    }
    return out;
}

EmbeddingTable::EmbeddingTable(int dim, SubwordHasher hasher, std::vector<std::string> words,
                               std::vector<double> word_vectors, std::vector<float> ngram_vectors)
    : dim_(dim), hasher_(std::move(hasher)), words_(std::move(words)), word_vectors_(std::move(word_vectors)),
      ngram_vectors_(std::move(ngram_vectors))
{
    require(dim >= 1, ErrorKind::config, "embedding dim must be >= 1");
    const auto d = static_cast<std::size_t>(dim);
    require(word_vectors_.size() == words_.size() * d, ErrorKind::shape, "EmbeddingTable: word vector size");
    require(ngram_vectors_.size() == hasher_.bucket_count() * d, ErrorKind::shape,
            "EmbeddingTable: n-gram vector size");
    for (std::size_t i = 0; i < words_.size(); ++i)
        require(index_.emplace(words_[i], i).second, ErrorKind::schema, "EmbeddingTable: duplicate word " + words_[i]);
}

std::vector<double> EmbeddingTable::embed(const std::string& word) const
{
    const auto d = static_cast<std::size_t>(dim_);
    std::vector<double> v(d, 0.0);
    if (const auto it = index_.find(word); it != index_.end()) {
        std::copy_n(word_vectors_.data() + it->second * d, d, v.data());
        return v;
    }
    const auto ids = hasher_.buckets_of(word);
    if (ids.empty())
        return v;
    for (auto b : ids)
        for (std::size_t j = 0; j < d; ++j)
            v[j] += ngram_vectors_[b * d + j];
    for (auto& x : v)
        x /= static_cast<double>(ids.size());
    return v;
}

std::vector<std::vector<double>> embed_sequence(std::span<const std::string> tokens, const EmbeddingTable& table)
{
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
        out.push_back(table.embed(t));
    return out;
}

namespace {

float fast_sigmoid(float x)
{
    if (x > 20.f)
        return 1.f;
    if (x < -20.f)
        return 0.f;
    return 1.f / (1.f + std::exp(-x));
}

float log_clamped(float x) { return std::log(std::max(x, 1e-5f)); }

class SkipGramTrainer {
public:
    SkipGramTrainer(std::span<const Tokens> corpus, const EmbeddingOptions& opt)
        : opt_(opt), hasher_(opt.min_n, opt.max_n, opt.buckets), d_(static_cast<std::size_t>(opt.dim)), rng_(opt.seed)
    {
        build_vocab(corpus);
        const std::size_t v = words_.size();
        input_.resize((v + opt.buckets) * d_);
        output_.assign(v * d_, 0.f);
        const float bound = 1.f / static_cast<float>(opt.dim);
        for (auto& x : input_)
            x = static_cast<float>(rng_.uniform(-bound, bound));
        for (std::size_t w = 0; w < v; ++w) {
            std::vector<std::size_t> ids{w};
            for (auto b : hasher_.buckets_of(words_[w]))
                ids.push_back(v + b);
            subwords_.push_back(std::move(ids));
        }
        for (const auto& line : corpus) {
            std::vector<std::size_t> ids;
            for (const auto& t : line)
                ids.push_back(index_.at(t));
            lines_.push_back(std::move(ids));
            total_tokens_ += line.size();
        }
        double z = 0.0;
        for (auto c : counts_) {
            z += std::pow(static_cast<double>(c), 0.75);
            negative_cdf_.push_back(z);
        }
    }

    TrainedEmbeddings run()
    {
        std::vector<double> epoch_loss;
        const double budget = static_cast<double>(total_tokens_) * opt_.epochs;
        std::size_t processed = 0;
        hidden_.resize(d_);
        grad_.resize(d_);
        for (int epoch = 0; epoch < opt_.epochs; ++epoch) {
            double loss = 0.0;
            std::size_t updates = 0;
            for (const auto& line : lines_) {
                for (std::size_t w = 0; w < line.size(); ++w) {
                    const float lr = static_cast<float>(
                        opt_.learning_rate * std::max(0.0, 1.0 - static_cast<double>(processed) / budget));
                    const auto span = static_cast<std::ptrdiff_t>(1 + rng_.below(static_cast<std::uint64_t>(opt_.window)));
                    const auto pos = static_cast<std::ptrdiff_t>(w);
                    for (std::ptrdiff_t c = pos - span; c <= pos + span; ++c) {
                        if (c == pos || c < 0 || c >= static_cast<std::ptrdiff_t>(line.size()))
                            continue;
                        loss += update(subwords_[line[w]], line[static_cast<std::size_t>(c)], lr);
                        ++updates;
                    }
                    ++processed;
                }
            }
            epoch_loss.push_back(updates ? loss / static_cast<double>(updates) : 0.0);
        }
        return finish(std::move(epoch_loss));
    }

private:
    void build_vocab(std::span<const Tokens> corpus)
    {
        std::unordered_map<std::string, std::int64_t> counts;
        for (const auto& line : corpus)
            for (const auto& t : line)
                ++counts[t];
        require(!counts.empty(), ErrorKind::precondition, "train_embeddings: empty corpus");
        std::vector<std::pair<std::string, std::int64_t>> items(counts.begin(), counts.end());
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        for (auto& [w, c] : items) {
            index_.emplace(w, words_.size());
            words_.push_back(w);
            counts_.push_back(c);
        }
    }

    std::size_t sample_negative()
    {
        const double u = rng_.uniform() * negative_cdf_.back();
        const auto it = std::upper_bound(negative_cdf_.begin(), negative_cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - negative_cdf_.begin()), words_.size() - 1);
    }

    float binary_logistic(std::size_t target, bool label, float lr)
    {
        float* out = output_.data() + target * d_;
        float dot = 0.f;
        for (std::size_t j = 0; j < d_; ++j)
            dot += out[j] * hidden_[j];
        const float score = fast_sigmoid(dot);
        const float alpha = lr * ((label ? 1.f : 0.f) - score);
        for (std::size_t j = 0; j < d_; ++j) {
            grad_[j] += alpha * out[j];
            out[j] += alpha * hidden_[j];
        }
        return label ? -log_clamped(score) : -log_clamped(1.f - score);
    }

    double update(const std::vector<std::size_t>& inputs, std::size_t target, float lr)
    {
        std::fill(hidden_.begin(), hidden_.end(), 0.f);
        std::fill(grad_.begin(), grad_.end(), 0.f);
        for (auto row : inputs) {
            const float* in = input_.data() + row * d_;
            for (std::size_t j = 0; j < d_; ++j)
                hidden_[j] += in[j];
        }
        const float inv = 1.f / static_cast<float>(inputs.size());
        for (auto& h : hidden_)
            h *= inv;

        double loss = binary_logistic(target, true, lr);
        if (words_.size() > 1) {
            for (int k = 0; k < opt_.negatives; ++k) {
                std::size_t neg;
                do {
                    neg = sample_negative();
                } while (neg == target);
                loss += binary_logistic(neg, false, lr);
            }
        }
        for (auto row : inputs) {
            float* in = input_.data() + row * d_;
            for (std::size_t j = 0; j < d_; ++j)
                in[j] += grad_[j];
        }
        return loss;
    }

    TrainedEmbeddings finish(std::vector<double> epoch_loss)
    {
        const std::size_t v = words_.size();
        std::vector<double> composed(v * d_, 0.0);
        for (std::size_t w = 0; w < v; ++w) {
            const auto& ids = subwords_[w];
            for (auto row : ids)
                for (std::size_t j = 0; j < d_; ++j)
                    composed[w * d_ + j] += input_[row * d_ + j];
            for (std::size_t j = 0; j < d_; ++j)
                composed[w * d_ + j] /= static_cast<double>(ids.size());
        }
        std::vector<float> word_rows(input_.begin(), input_.begin() + static_cast<std::ptrdiff_t>(v * d_));
        std::vector<float> ngrams(input_.begin() + static_cast<std::ptrdiff_t>(v * d_), input_.end());
        EmbeddingTable table(opt_.dim, hasher_, words_, std::move(composed), std::move(ngrams));
        return {std::move(table), words_, counts_, std::move(word_rows), std::move(output_), std::move(epoch_loss)};
    }

    EmbeddingOptions opt_;
    SubwordHasher hasher_;
    std::size_t d_;
    Rng rng_;
    std::vector<std::string> words_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> subwords_;
    std::vector<std::vector<std::size_t>> lines_;
    std::size_t total_tokens_ = 0;
    std::vector<double> negative_cdf_;
    std::vector<float> input_;   // |V| word rows followed by bucket rows
    std::vector<float> output_;
    std::vector<float> hidden_;
    std::vector<float> grad_;
};

} // namespace

TrainedEmbeddings train_embeddings(std::span<const Tokens> corpus, const EmbeddingOptions& opt)
{
    require(opt.dim >= 1, ErrorKind::config, "train_embeddings: dim must be >= 1");
    require(opt.window >= 1 && opt.negatives >= 0 && opt.epochs >= 1, ErrorKind::config,
            "train_embeddings: window >= 1, negatives >= 0, epochs >= 1");
    std::size_t tokens = 0;
    for (const auto& line : corpus)
        tokens += line.size();
    require(tokens > 0, ErrorKind::precondition, "train_embeddings: empty corpus");
    return SkipGramTrainer(corpus, opt).run();
}

// ---- persistence -------------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& path) { return path.string() + ".ngrams"; }

namespace {

constexpr char sidecar_magic[4] = {'M', 'S', 'N', 'G'};
constexpr std::uint32_t sidecar_version = 1;

void put_u32(std::ostream& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int bytes)
{
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i)
        v = (v << 8) | p[i];
    return v;
}

} // namespace

void save_text(const std::filesystem::path& path, const EmbeddingTable& table)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    const auto d = static_cast<std::size_t>(table.dim());
    out << table.words().size() << " " << d << "\n";
    char buf[40];
    for (const auto& w : table.words()) {
        const auto v = table.embed(w);
        out << w;
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof buf, " %.17g", v[j]);
            out << buf;
        }
        out << "\n";
    }

    std::ofstream bin(sidecar_path(path), std::ios::binary);
    require(static_cast<bool>(bin), ErrorKind::io, "cannot write " + sidecar_path(path).string());
    bin.write(sidecar_magic, 4);
    put_u32(bin, sidecar_version);
    put_u32(bin, static_cast<std::uint32_t>(d));
    put_u32(bin, static_cast<std::uint32_t>(table.hasher().min_n()));
    put_u32(bin, static_cast<std::uint32_t>(table.hasher().max_n()));
    put_u64(bin, table.hasher().bucket_count());
    for (float f : table.ngram_vectors())
        put_u32(bin, std::bit_cast<std::uint32_t>(f));
}

EmbeddingTable load_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::size_t count = 0, dim = 0;
    std::string extra;
    if (!(hs >> count >> dim) || (hs >> extra) || dim == 0)
        throw ParseError(1, "malformed header, expected \"count dim\"");

    std::vector<std::string> words;
    std::vector<double> vectors;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        for (std::size_t j = 0; j < dim; ++j) {
            double x;
            if (!(ls >> x))
                throw ParseError(lineno, "expected " + std::to_string(dim) + " values");
            vectors.push_back(x);
        }
        if (ls >> extra)
            throw ParseError(lineno, "more than " + std::to_string(dim) + " values");
        words.push_back(std::move(word));
    }
    if (words.size() != count)
        throw ParseError(1, "header announces " + std::to_string(count) + " vectors, body has " +
                                std::to_string(words.size()));

    std::ifstream bin(sidecar_path(path), std::ios::binary);
    require(static_cast<bool>(bin), ErrorKind::io, "cannot read " + sidecar_path(path).string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    constexpr std::size_t head = 4 + 4 * 4 + 8;
    require(bytes.size() >= head && std::memcmp(bytes.data(), sidecar_magic, 4) == 0, ErrorKind::parse,
            "n-gram sidecar: bad magic");
    require(get_le(bytes.data() + 4, 4) == sidecar_version, ErrorKind::schema, "n-gram sidecar: unsupported version");
    require(get_le(bytes.data() + 8, 4) == dim, ErrorKind::schema, "n-gram sidecar: dimension differs from text file");
    const auto min_n = static_cast<int>(get_le(bytes.data() + 12, 4));
    const auto max_n = static_cast<int>(get_le(bytes.data() + 16, 4));
    const auto buckets = static_cast<std::size_t>(get_le(bytes.data() + 20, 8));
    require(bytes.size() == head + buckets * dim * 4, ErrorKind::parse, "n-gram sidecar: truncated");
    std::vector<float> ngrams(buckets * dim);
    for (std::size_t i = 0; i < ngrams.size(); ++i)
        ngrams[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes.data() + head + 4 * i, 4)));
    return EmbeddingTable(static_cast<int>(dim), SubwordHasher(min_n, max_n, buckets), std::move(words),
                          std::move(vectors), std::move(ngrams));
}

} // namespace metasum::embeddings
