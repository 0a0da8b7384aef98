#include "asadg/error.hpp"

namespace asadg {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_finite_result: return "NonFiniteResult";
    case Errc::dimension_too_large: return "DimensionTooLarge";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::degenerate_input: return "DegenerateInput";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::io_failure: return "IoFailure";
    case Errc::embedding_collision: return "EmbeddingCollision";
    case Errc::format_error: return "FormatError";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::empty_test_set: return "EmptyTestSet";
    case Errc::membership_violation: return "MembershipViolation";
  }
  return "Unknown";
}

}  // namespace asadg
