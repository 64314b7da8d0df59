#pragma once

#include <stdexcept>
#include <string>

namespace entroherd {

// Three roots, mapped to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericalError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyData : DataError {
  EmptyData() : DataError("empty data: need at least one row") {}
};

struct ZeroVarianceFeature : DataError {
  explicit ZeroVarianceFeature(const std::string& feature)
      : DataError("feature has zero variance over the source: " + feature) {}
};

struct MissingColumn : DataError {
  explicit MissingColumn(const std::string& detail)
      : DataError("missing column: " + detail) {}
};

struct NonNumericCell : DataError {
  explicit NonNumericCell(const std::string& detail)
      : DataError("non-numeric cell: " + detail) {}
};

struct RangeSanityFail : DataError {
  explicit RangeSanityFail(const std::string& detail)
      : DataError("range sanity check failed: " + detail) {}
};

struct UnsupportedPairing : ConfigError {
  explicit UnsupportedPairing(const std::string& detail)
      : ConfigError("unsupported family/feature pairing: " + detail) {}
};

struct UnsupportedForPointMass : ConfigError {
  explicit UnsupportedForPointMass(const std::string& detail)
      : ConfigError("operation undefined for point masses: " + detail) {}
};

struct EmptyDomain : ConfigError {
  EmptyDomain() : ConfigError("empty argmax domain") {}
};

struct ScheduleMismatch : ConfigError {
  explicit ScheduleMismatch(const std::string& detail)
      : ConfigError("schedule mismatch: " + detail) {}
};

struct StateSpaceTooLarge : ConfigError {
  explicit StateSpaceTooLarge(const std::string& detail)
      : ConfigError("state space too large to enumerate: " + detail) {}
};

struct NoConvergence : NumericalError {
  explicit NoConvergence(const std::string& detail)
      : NumericalError("solver did not converge: " + detail) {}
};

struct AllWeightsVanish : NumericalError {
  explicit AllWeightsVanish(const std::string& detail)
      : NumericalError("all conditional weights vanished: " + detail) {}
};

}  // namespace entroherd
