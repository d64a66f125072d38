#include "ideotrack/error.hpp"

namespace ideotrack {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "IoError";
    case ErrorKind::schema: return "SchemaError";
    case ErrorKind::duplicate_id: return "DuplicateId";
    case ErrorKind::unparsable_date: return "UnparsableDate";
    case ErrorKind::invalid_config: return "InvalidConfig";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::empty_vocabulary: return "EmptyVocabulary";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::non_finite_value: return "NonFiniteValue";
    case ErrorKind::non_finite_feature: return "NonFiniteFeature";
    case ErrorKind::single_class: return "SingleClass";
    case ErrorKind::degenerate_calibration: return "DegenerateCalibration";
    case ErrorKind::too_few_samples: return "TooFewSamples";
    case ErrorKind::label_outside_class_list: return "LabelOutsideClassList";
    case ErrorKind::empty_class_row: return "EmptyClassRow";
    case ErrorKind::missing_author_type: return "MissingAuthorType";
    case ErrorKind::group_too_small: return "GroupTooSmall";
    case ErrorKind::negative_time_step: return "NegativeTimeStep";
    case ErrorKind::singular_innovation: return "SingularInnovation";
    case ErrorKind::unknown_author: return "UnknownAuthor";
  }
  return "Error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_config:
    case ErrorKind::invalid_argument:
      return 2;
    case ErrorKind::degenerate_calibration:
    case ErrorKind::negative_time_step:
    case ErrorKind::singular_innovation:
      return 4;
    default:
      return 3;
  }
}

}  // namespace ideotrack
