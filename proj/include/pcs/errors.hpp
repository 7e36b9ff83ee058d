#pragma once

#include <stdexcept>
#include <string>

namespace pcs {

// Shared failure taxonomy. Every throwing path in the library raises one of
// these so callers (and the CLI exit-code mapping) can treat data/numeric
// failures uniformly.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define PCS_DEFINE_ERROR(Name)                                       \
  struct Name : Error {                                              \
    explicit Name(const std::string& what) : Error(what) {}          \
  }

PCS_DEFINE_ERROR(MissingCell);
PCS_DEFINE_ERROR(DuplicateCell);
PCS_DEFINE_ERROR(NonFinite);
PCS_DEFINE_ERROR(ZeroVariance);
PCS_DEFINE_ERROR(DimensionMismatch);
PCS_DEFINE_ERROR(DuplicateGroups);
PCS_DEFINE_ERROR(DomainError);
PCS_DEFINE_ERROR(CholeskyFailure);
PCS_DEFINE_ERROR(BracketFailure);
PCS_DEFINE_ERROR(SingularMatrix);
PCS_DEFINE_ERROR(BelowPointMass);
PCS_DEFINE_ERROR(DegenerateMoment);
PCS_DEFINE_ERROR(SingularOmega);
PCS_DEFINE_ERROR(InvalidBeta);
PCS_DEFINE_ERROR(AssignmentViolation);
PCS_DEFINE_ERROR(RankDeficient);
PCS_DEFINE_ERROR(EmptyGroup);
PCS_DEFINE_ERROR(ParseError);

#undef PCS_DEFINE_ERROR

}  // namespace pcs
