#include "curatree/error.hpp"

namespace curatree {

const char* errc_name(errc code) {
  switch (code) {
    case errc::bad_magic: return "BadMagic";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::truncated_file: return "TruncatedFile";
    case errc::corrupt_section: return "CorruptSection";
    case errc::not_found: return "NotFound";
    case errc::io_error: return "IoError";
    case errc::non_finite_value: return "NonFiniteValue";
    case errc::zero_norm_row: return "ZeroNormRow";
    case errc::unsupported_dtype: return "UnsupportedDtype";
    case errc::count_mismatch: return "CountMismatch";
    case errc::malformed_record: return "MalformedRecord";
    case errc::duplicate_row_index: return "DuplicateRowIndex";
    case errc::too_few_rows: return "TooFewRows";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::invalid_config: return "InvalidConfig";
    case errc::invalid_level: return "InvalidLevel";
    case errc::target_exceeds_data: return "TargetExceedsData";
    case errc::invalid_input: return "InvalidInput";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::empty_subset: return "EmptySubset";
    case errc::batch_too_small: return "BatchTooSmall";
    case errc::batch_too_large: return "BatchTooLarge";
    case errc::invalid_proportions: return "InvalidProportions";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::invalid_params: return "InvalidParams";
    case errc::internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace curatree
