#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ideotrack {

enum class ErrorKind {
  io,
  schema,
  duplicate_id,
  unparsable_date,
  invalid_config,
  invalid_argument,
  empty_vocabulary,
  dimension_mismatch,
  non_finite_value,
  non_finite_feature,
  single_class,
  degenerate_calibration,
  too_few_samples,
  label_outside_class_list,
  empty_class_row,
  missing_author_type,
  group_too_small,
  negative_time_step,
  singular_innovation,
  unknown_author,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit status for an error surfaced by the command-line tool:
/// 2 for configuration problems, 3 for bad input data, 4 for numerical failures.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace ideotrack
