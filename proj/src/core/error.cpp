#include "rhseg/error.hpp"

namespace rhseg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DeadRegion: return "DeadRegion";
    case ErrorKind::SelfMerge: return "SelfMerge";
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::BandMismatch: return "BandMismatch";
    case ErrorKind::IndivisibleImage: return "IndivisibleImage";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::ShortFile: return "ShortFile";
    case ErrorKind::TooManyLabels: return "TooManyLabels";
    case ErrorKind::InfeasibleLayout: return "InfeasibleLayout";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::BadVersion: return "BadVersion";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::UnknownType: return "UnknownType";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::WorkerUnreachable: return "WorkerUnreachable";
    case ErrorKind::WorkerPanic: return "WorkerPanic";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace rhseg
