#pragma once

#include <stdexcept>
#include <string>

namespace manipkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or malformed on disk.
struct IoError : Error {
  using Error::Error;
};

/// Two maps (or a map and its declared size) disagree on dimensions.
struct DimensionError : Error {
  using Error::Error;
};

/// Bad numeric input: empty mask where pixels are required, an entirely
/// invalid depth map, an empty aggregation list.
struct DataError : Error {
  using Error::Error;
};

/// No valid contact pixel exists anywhere in the masked normal map.
struct NoProposalError : Error {
  using Error::Error;
};

/// Scene description violates the schema; message names the offending field.
struct SceneError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace manipkit
