#include "metasum/selector.hpp"

#include "metasum/error.hpp"

namespace metasum {

const char* to_string(TrainingSubset s) { return s == TrainingSubset::all ? "all" : "filtered"; }

TrainingSubset parse_training_subset(const std::string& s)
{
    if (s == "all")
        return TrainingSubset::all;
    if (s == "filtered")
        return TrainingSubset::filtered;
    fail(ErrorKind::config, "unknown training subset '" + s + "' (expected all|filtered)");
}

} // namespace metasum
