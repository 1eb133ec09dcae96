#include "canopyflux/errors.hpp"

namespace canopyflux {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MalformedSeries: return "MalformedSeries";
    case ErrorKind::InvalidReading: return "InvalidReading";
    case ErrorKind::InvalidInventory: return "InvalidInventory";
    case ErrorKind::InventoryMismatch: return "InventoryMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::RowError: return "RowError";
    case ErrorKind::DuplicateRecord: return "DuplicateRecord";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
      return 2;
    case ErrorKind::EmptyInput:
    case ErrorKind::MalformedSeries:
    case ErrorKind::InvalidReading:
    case ErrorKind::InvalidInventory:
    case ErrorKind::InventoryMismatch:
    case ErrorKind::SchemaError:
    case ErrorKind::RowError:
    case ErrorKind::DuplicateRecord:
    case ErrorKind::NoOverlap:
    case ErrorKind::DataError:
    case ErrorKind::IoError:
      return 3;
    case ErrorKind::ShapeError:
    case ErrorKind::EmptyTrainingSet:
      return 4;
  }
  return 4;
}

}  // namespace canopyflux
