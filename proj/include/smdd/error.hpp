#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smdd {

enum class Errc {
  invalid_argument,
  degenerate_distance,
  ill_conditioned_design,
  invalid_data,
  invalid_state,
  degenerate_output_dimension,
  exhausted_candidates,
  finished,
  protocol_violation,
  corrupt_state,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_distance: return "degenerate_distance";
    case Errc::ill_conditioned_design: return "ill_conditioned_design";
    case Errc::invalid_data: return "invalid_data";
    case Errc::invalid_state: return "invalid_state";
    case Errc::degenerate_output_dimension: return "degenerate_output_dimension";
    case Errc::exhausted_candidates: return "exhausted_candidates";
    case Errc::finished: return "finished";
    case Errc::protocol_violation: return "protocol_violation";
    case Errc::corrupt_state: return "corrupt_state";
  }
  return "unknown";
}

/// Library-wide exception. Every failure the library signals carries one of
/// the Errc categories so callers (the CLI in particular) can map it to an
/// exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by standardize() when an output column has (numerically) zero spread.
class DegenerateOutputDimension : public Error {
 public:
  DegenerateOutputDimension(int column, const std::string& what)
      : Error(Errc::degenerate_output_dimension, what), column_(column) {}
  int column() const noexcept { return column_; }

 private:
  int column_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(Errc::invalid_argument, what);
}

}  // namespace smdd
