#include "metasum/error.hpp"

namespace metasum {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::size: return "size";
    case ErrorKind::shape: return "shape";
    case ErrorKind::contract: return "contract";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate_data: return "degenerate-data";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::staleness: return "staleness";
    case ErrorKind::locked: return "locked";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace metasum
