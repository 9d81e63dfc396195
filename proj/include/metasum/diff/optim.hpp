#pragma once

#include "metasum/diff/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace metasum::diff {

struct AdamState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update in place. Moments are created on the first call.
void adam_step(std::span<Tensor* const> parameters, std::span<const Tensor* const> gradients, AdamState& state,
               double lr);

/// Ordered, named trainable parameters.
class ParameterSet {
public:
    Var add(const std::string& name, Tensor value);

    const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
    Var get(const std::string& name) const;
    std::size_t count() const;  // number of scalars

    void zero_grad();
    /// Copies of the current parameter values, in order.
    std::vector<Tensor> snapshot() const;
    void restore(const std::vector<Tensor>& values);

private:
    std::vector<std::pair<std::string, Var>> items_;
};

class Adam {
public:
    Adam(const ParameterSet& params, double lr) : params_(params), lr_(lr) {}

    void step();
    const AdamState& state() const { return state_; }

private:
    const ParameterSet& params_;
    double lr_;
    AdamState state_;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

inline constexpr int checkpoint_format_version = 1;

/// Writes `<stem>.bin` (little-endian float64, arrays back to back) and
/// `<stem>.json` (format_version, and per array: name, shape, offset in elements).
void save_checkpoint(const std::filesystem::path& stem, std::span<const NamedTensor> arrays);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem);

std::vector<NamedTensor> named_values(const ParameterSet& params);
/// Loads values by name; every parameter must be present with a matching shape.
void assign(ParameterSet& params, std::span<const NamedTensor> arrays);

} // namespace metasum::diff
