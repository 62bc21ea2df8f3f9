#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascade {

enum class ErrorCode {
  CyclicGraph,
  MultipleOrigins,
  MultipleDestinations,
  NonpositiveCapacity,
  DisconnectedIntermediate,
  MalformedLink,
  DuplicateLinkId,
  InfeasibleInitialFlow,
  PolicyConservationViolation,
  CumulativeCapExceeded,
  NonTermination,
  TooManyLinks,
  EmptyFeasibleSet,
  InfeasibleSplit,
  NotATree,
  MissingPolicyEntry,
  SchemaError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CyclicGraph: return "CyclicGraph";
    case ErrorCode::MultipleOrigins: return "MultipleOrigins";
    case ErrorCode::MultipleDestinations: return "MultipleDestinations";
    case ErrorCode::NonpositiveCapacity: return "NonpositiveCapacity";
    case ErrorCode::DisconnectedIntermediate: return "DisconnectedIntermediate";
    case ErrorCode::MalformedLink: return "MalformedLink";
    case ErrorCode::DuplicateLinkId: return "DuplicateLinkId";
    case ErrorCode::InfeasibleInitialFlow: return "InfeasibleInitialFlow";
    case ErrorCode::PolicyConservationViolation: return "PolicyConservationViolation";
    case ErrorCode::CumulativeCapExceeded: return "CumulativeCapExceeded";
    case ErrorCode::NonTermination: return "NonTermination";
    case ErrorCode::TooManyLinks: return "TooManyLinks";
    case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
    case ErrorCode::InfeasibleSplit: return "InfeasibleSplit";
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::MissingPolicyEntry: return "MissingPolicyEntry";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

class CascadeError : public std::runtime_error {
 public:
  CascadeError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cascade
