#include "metasum/diff/optim.hpp"

#include "metasum/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace metasum::diff {

void adam_step(std::span<Tensor* const> parameters, std::span<const Tensor* const> gradients, AdamState& state,
               double lr)
{
    require(parameters.size() == gradients.size(), ErrorKind::shape, "adam_step: parameter/gradient count mismatch");
    if (state.first_moment.empty()) {
        for (const Tensor* p : parameters) {
            state.first_moment.emplace_back(p->shape());
            state.second_moment.emplace_back(p->shape());
        }
    }
    require(state.first_moment.size() == parameters.size(), ErrorKind::shape, "adam_step: state/parameter mismatch");
    ++state.step_count;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t q = 0; q < parameters.size(); ++q) {
        Tensor& p = *parameters[q];
        const Tensor& g = *gradients[q];
        require(g.shape() == p.shape() && state.first_moment[q].shape() == p.shape(), ErrorKind::shape,
                "adam_step: shape mismatch for parameter " + std::to_string(q));
        Tensor& m = state.first_moment[q];
        Tensor& v = state.second_moment[q];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

Var ParameterSet::add(const std::string& name, Tensor value)
{
    for (const auto& [n, _] : items_)
        require(n != name, ErrorKind::contract, "ParameterSet: duplicate name " + name);
    Var v = parameter(std::move(value));
    items_.emplace_back(name, v);
    return v;
}

Var ParameterSet::get(const std::string& name) const
{
    for (const auto& [n, v] : items_)
        if (n == name)
            return v;
    fail(ErrorKind::contract, "ParameterSet: no parameter " + name);
}

std::size_t ParameterSet::count() const
{
    std::size_t n = 0;
    for (const auto& [_, v] : items_)
        n += v.size();
    return n;
}

void ParameterSet::zero_grad()
{
    for (auto& [_, v] : items_)
        v.zero_grad();
}

std::vector<Tensor> ParameterSet::snapshot() const
{
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [_, v] : items_)
        out.push_back(v.value());
    return out;
}

void ParameterSet::restore(const std::vector<Tensor>& values)
{
    require(values.size() == items_.size(), ErrorKind::shape, "ParameterSet::restore: count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        Var v = items_[i].second;
        require(v.shape() == values[i].shape(), ErrorKind::shape, "ParameterSet::restore: shape mismatch");
        v.value() = values[i];
    }
}

void Adam::step()
{
    std::vector<Tensor*> p;
    std::vector<const Tensor*> g;
    for (const auto& [_, v] : params_.items()) {
        Var var = v;
        g.push_back(&v.grad());
        p.push_back(&var.value());
    }
    adam_step(p, g, state_, lr_);
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix)
{
    return std::filesystem::path(stem.string() + suffix);
}

void put_le(std::ostream& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(bits & 0xff);
        bits >>= 8;
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(const unsigned char* b)
{
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i)
        bits = (bits << 8) | b[i];
    return std::bit_cast<double>(bits);
}

} // namespace

void save_checkpoint(const std::filesystem::path& stem, std::span<const NamedTensor> arrays)
{
    nlohmann::json manifest;
    manifest["format_version"] = checkpoint_format_version;
    manifest["dtype"] = "float64-le";
    manifest["arrays"] = nlohmann::json::array();
    std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
    require(static_cast<bool>(bin), ErrorKind::io, "cannot write " + with_suffix(stem, ".bin").string());
    std::size_t offset = 0;
    for (const auto& a : arrays) {
        manifest["arrays"].push_back({{"name", a.name}, {"shape", a.tensor.shape()}, {"offset", offset}});
        for (double v : a.tensor.values())
            put_le(bin, v);
        offset += a.tensor.size();
    }
    manifest["total"] = offset;
    std::ofstream js(with_suffix(stem, ".json"));
    require(static_cast<bool>(js), ErrorKind::io, "cannot write " + with_suffix(stem, ".json").string());
    js << manifest.dump(2) << "\n";
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem)
{
    std::ifstream js(with_suffix(stem, ".json"));
    require(static_cast<bool>(js), ErrorKind::io, "cannot read " + with_suffix(stem, ".json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "checkpoint manifest: " + std::string(e.what()));
    }
    require(manifest.value("format_version", 0) == checkpoint_format_version, ErrorKind::schema,
            "checkpoint: unsupported format_version");

    std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
    require(static_cast<bool>(bin), ErrorKind::io, "cannot read " + with_suffix(stem, ".bin").string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    const std::size_t total = manifest.at("total").get<std::size_t>();
    require(bytes.size() == total * 8, ErrorKind::schema, "checkpoint: binary size does not match manifest");

    std::vector<NamedTensor> out;
    for (const auto& a : manifest.at("arrays")) {
        const auto shape = a.at("shape").get<Shape>();
        const auto offset = a.at("offset").get<std::size_t>();
        const std::size_t n = numel(shape);
        require(offset + n <= total, ErrorKind::schema, "checkpoint: array exceeds binary");
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i)
            values[i] = get_le(bytes.data() + (offset + i) * 8);
        out.push_back({a.at("name").get<std::string>(), Tensor(shape, std::move(values))});
    }
    return out;
}

std::vector<NamedTensor> named_values(const ParameterSet& params)
{
    std::vector<NamedTensor> out;
    for (const auto& [name, v] : params.items())
        out.push_back({name, v.value()});
    return out;
}

void assign(ParameterSet& params, std::span<const NamedTensor> arrays)
{
    for (const auto& [name, v] : params.items()) {
        const NamedTensor* found = nullptr;
        for (const auto& a : arrays)
            if (a.name == name)
                found = &a;
        require(found != nullptr, ErrorKind::schema, "checkpoint: missing parameter " + name);
        require(found->tensor.shape() == v.shape(), ErrorKind::schema,
                "checkpoint: shape mismatch for " + name + ": " + to_string(found->tensor.shape()) + " vs " +
                    to_string(v.shape()));
        Var var = v;
        var.value() = found->tensor;
    }
}

} // namespace metasum::diff
