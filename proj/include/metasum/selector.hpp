#pragma once

#include "metasum/corpus.hpp"

#include <span>
#include <string>
#include <vector>

namespace metasum {

/// Which slice of the meta-train partition a meta-model was fitted on.
enum class TrainingSubset { all, filtered };

const char* to_string(TrainingSubset s);
TrainingSubset parse_training_subset(const std::string& s);

struct SegmentRef {
    const CodeSegment* segment;
    const CandidateSet* candidates;
};

/// Common interface of the meta-models: one independent suitability probability
/// per candidate, in candidate order.
class Selector {
public:
    virtual ~Selector() = default;

    virtual std::vector<double> predict(const CodeSegment& segment, const CandidateSet& set) const = 0;

    virtual std::vector<std::vector<double>> predict_many(std::span<const SegmentRef> items) const
    {
        std::vector<std::vector<double>> out;
        out.reserve(items.size());
        for (const auto& it : items)
            out.push_back(predict(*it.segment, *it.candidates));
        return out;
    }

    virtual TrainingSubset training_subset() const = 0;
    virtual std::string name() const = 0;
};

} // namespace metasum
