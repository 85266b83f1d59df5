#pragma once

#include <stdexcept>
#include <string>

namespace scdr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or axis mismatches; messages name the offending axis.
struct DimensionError : Error { using Error::Error; };
// Non-finite or degenerate values (zero-norm features, bad logits).
struct NumericError : Error { using Error::Error; };
// API misuse: consumed graph, missing gradients.
struct StateError : Error { using Error::Error; };
// Out-of-range labels or element indices.
struct IndexError : Error { using Error::Error; };
// Bad or inconsistent configuration.
struct ConfigError : Error { using Error::Error; };
// Dataset-level problems (missing samples, bad manifests).
struct DataError : Error { using Error::Error; };
// Invalid batch composition for training.
struct BatchError : Error { using Error::Error; };
// Filesystem and serialization failures.
struct IoError : Error { using Error::Error; };

}  // namespace scdr
