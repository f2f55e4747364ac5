#include "rainclean/error.hpp"

namespace rainclean {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::SequenceGap: return "sequence_gap";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Decode: return "decode";
    case ErrorKind::Bounds: return "bounds";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Feasibility: return "feasibility";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Size: return "size";
    case ErrorKind::InsufficientFrames: return "insufficient_frames";
    case ErrorKind::State: return "state";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace rainclean
