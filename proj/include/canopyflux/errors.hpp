#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace canopyflux {

/// Every failure the library reports carries one of these kinds. The CLI maps
/// kinds onto exit codes (see `exit_code_for`).
enum class ErrorKind {
  EmptyInput,
  MalformedSeries,
  InvalidReading,
  InvalidInventory,
  InventoryMismatch,
  SchemaError,
  RowError,
  DuplicateRecord,
  NoOverlap,
  DataError,
  ShapeError,
  ConfigError,
  EmptyTrainingSet,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 2 for configuration problems, 3 for data problems, 4 for anything internal.
int exit_code_for(ErrorKind kind);

}  // namespace canopyflux
