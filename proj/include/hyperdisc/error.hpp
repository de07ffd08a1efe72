#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperdisc {

/// Malformed arguments: bad dimensions, non-finite values, broken simplices.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Too few periods to form the identification system.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySummary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Testable identifying conditions. Labels follow the numbering used in the
/// identification literature for this model so reports can be cross-read.
enum class Assumption {
  EqualityPairs,     // 4(a): at least J-1 equal-utility pairs
  PairRank,          // 4(b): pair transition-difference matrix full column rank
  PeriodCount,       // 5(a): T >= 3J-1
  SystemRank,        // 5(b): stacked system full row rank
  MacroPeriodCount,  // 8(a): (T-2)M >= 3(J-1)
  MacroSystemRank,   // 8(b): macro stacked system full row rank
};

inline std::string_view label(Assumption a) {
  switch (a) {
    case Assumption::EqualityPairs: return "4(a)";
    case Assumption::PairRank: return "4(b)";
    case Assumption::PeriodCount: return "5(a)";
    case Assumption::SystemRank: return "5(b)";
    case Assumption::MacroPeriodCount: return "8(a)";
    case Assumption::MacroSystemRank: return "8(b)";
  }
  return "?";
}

/// A testable identifying condition failed on the supplied primitives.
class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(Assumption which, const std::string& detail)
      : std::runtime_error("Assumption " + std::string(label(which)) + " violated: " + detail),
        which_(which) {}

  Assumption which() const noexcept { return which_; }

 private:
  Assumption which_;
};

/// Period-count shortfalls are both a data problem and a failed condition;
/// callers can catch either type.
class InsufficientPeriods : public AssumptionViolation {
 public:
  using AssumptionViolation::AssumptionViolation;
};

}  // namespace hyperdisc
