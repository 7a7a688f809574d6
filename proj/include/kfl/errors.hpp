#pragma once

#include <stdexcept>
#include <string>

namespace kfl {

enum class ErrorCode {
  UnboundedPolytope,
  NotDelzant,
  DegeneratePolytope,
  NonConvexInput,
  GridTooCoarse,
  GridMismatch,
  ParameterOutOfRange,
  DegenerateHessian,
  NotFano,
  EdgeDimensionUnsupported,
  NonConvergence,
  SolverFailure,
  RouteDisagreement,
  InsufficientSpread,
  UnsortedTimestamps,
  MissingCapability,
  PreconditionNotMet,
  IOError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnboundedPolytope: return "UnboundedPolytope";
    case ErrorCode::NotDelzant: return "NotDelzant";
    case ErrorCode::DegeneratePolytope: return "DegeneratePolytope";
    case ErrorCode::NonConvexInput: return "NonConvexInput";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::DegenerateHessian: return "DegenerateHessian";
    case ErrorCode::NotFano: return "NotFano";
    case ErrorCode::EdgeDimensionUnsupported: return "EdgeDimensionUnsupported";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::RouteDisagreement: return "RouteDisagreement";
    case ErrorCode::InsufficientSpread: return "InsufficientSpread";
    case ErrorCode::UnsortedTimestamps: return "UnsortedTimestamps";
    case ErrorCode::MissingCapability: return "MissingCapability";
    case ErrorCode::PreconditionNotMet: return "PreconditionNotMet";
    case ErrorCode::IOError: return "IOError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace kfl
