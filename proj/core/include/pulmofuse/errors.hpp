#pragma once

#include <stdexcept>
#include <string>

namespace pulmofuse {

// Every failure the library reports, one code per condition so callers
// (and tests) can match on the exact cause instead of parsing messages.
enum class Errc {
  // nifti
  bad_magic,
  nifti2_unsupported,
  pair_form_unsupported,
  unsupported_datatype,
  truncated_data,
  gzip_corrupt,
  inconsistent_header,
  // volume / preprocessing
  wrong_element_kind,
  empty_volume,
  degenerate_range,
  all_uninformative,
  spec_out_of_range,
  // patching
  patch_larger_than_volume,
  out_of_bounds,
  missing_patch,
  shape_mismatch,
  // ensemble
  empty_scores,
  non_positive_score,
  count_mismatch,
  non_finite_value,
  // morphology
  empty_mask,
  not_single_component,
  empty_skeleton,
  // metrics
  region_not_partition,
  weight_out_of_range,
  empty_list,
  // synth
  tube_out_of_bounds,
  invalid_spec,
  // generic I/O
  io_failure,
};

const char* errc_name(Errc code);

// Format/IO-class errors map to CLI exit code 2, everything else is a
// validation failure (exit code 1).
bool is_format_error(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pulmofuse
