#pragma once

#include <stdexcept>
#include <string>

namespace dc2ac {

// Root of the library's exception hierarchy. Every failure the library can
// diagnose is thrown as a subclass carrying a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define DC2AC_ERROR(Name)                                            \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

// Case loading / validation.
DC2AC_ERROR(IoFailure);
DC2AC_ERROR(MalformedCase);
DC2AC_ERROR(UnsupportedCost);
DC2AC_ERROR(DanglingReference);
DC2AC_ERROR(NoRefBus);
DC2AC_ERROR(NoGenerators);

// Network topology / matrices.
DC2AC_ERROR(SingularBranch);
DC2AC_ERROR(IslandedNetwork);

// Convex solver.
DC2AC_ERROR(DimensionMismatch);
DC2AC_ERROR(NumericalBreakdown);

// DC dispatch.
DC2AC_ERROR(InfeasibleDispatch);
DC2AC_ERROR(SolverFailure);
DC2AC_ERROR(CutLoopDiverged);
DC2AC_ERROR(ZeroReferenceCost);

// AC power flow.
DC2AC_ERROR(MissingReference);
DC2AC_ERROR(Diverged);
DC2AC_ERROR(SwitchLimit);
DC2AC_ERROR(SingularJacobian);
DC2AC_ERROR(NotConverged);

#undef DC2AC_ERROR

}  // namespace dc2ac
