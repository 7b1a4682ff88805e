#pragma once

#include <stdexcept>
#include <string>

namespace curatree {

// Every failure the library reports, by kind. The CLI maps these onto its
// exit codes (validation vs I/O), so new codes should be added here rather
// than thrown as bare runtime_errors.
enum class errc {
  // file container problems
  bad_magic,
  version_mismatch,
  truncated_file,
  corrupt_section,
  not_found,  // input path missing or unreadable; a usage problem, not an I/O fault
  io_error,
  // embedding payload problems
  non_finite_value,
  zero_norm_row,
  unsupported_dtype,
  // metadata sidecar problems
  count_mismatch,
  malformed_record,
  duplicate_row_index,
  // clustering
  too_few_rows,
  dimension_mismatch,
  invalid_config,
  // sampling
  invalid_level,
  target_exceeds_data,
  invalid_input,
  index_out_of_range,
  // batching
  empty_subset,
  batch_too_small,
  batch_too_large,
  // diagnostics
  invalid_proportions,
  length_mismatch,
  invalid_params,
  internal,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace curatree
