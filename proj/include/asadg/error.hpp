#pragma once

#include <stdexcept>
#include <string>

namespace asadg {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  non_finite_result,
  dimension_too_large,
  budget_exceeded,
  degenerate_input,
  index_out_of_range,
  io_failure,
  embedding_collision,
  format_error,
  non_finite_loss,
  empty_test_set,
  membership_violation,
};

const char* to_string(Errc code) noexcept;

/// Library error. Every failure path of the public API throws this type;
/// callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace asadg
