#include "pulmofuse/errors.hpp"

namespace pulmofuse {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::bad_magic: return "BadMagic";
    case Errc::nifti2_unsupported: return "Nifti2Unsupported";
    case Errc::pair_form_unsupported: return "PairFormUnsupported";
    case Errc::unsupported_datatype: return "UnsupportedDatatype";
    case Errc::truncated_data: return "TruncatedData";
    case Errc::gzip_corrupt: return "GzipCorrupt";
    case Errc::inconsistent_header: return "InconsistentHeader";
    case Errc::wrong_element_kind: return "WrongElementKind";
    case Errc::empty_volume: return "EmptyVolume";
    case Errc::degenerate_range: return "DegenerateRange";
    case Errc::all_uninformative: return "AllUninformative";
    case Errc::spec_out_of_range: return "SpecOutOfRange";
    case Errc::patch_larger_than_volume: return "PatchLargerThanVolume";
    case Errc::out_of_bounds: return "OutOfBounds";
    case Errc::missing_patch: return "MissingPatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::empty_scores: return "EmptyScores";
    case Errc::non_positive_score: return "NonPositiveScore";
    case Errc::count_mismatch: return "CountMismatch";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::not_single_component: return "NotSingleComponent";
    case Errc::empty_skeleton: return "EmptySkeleton";
    case Errc::region_not_partition: return "RegionNotPartition";
    case Errc::weight_out_of_range: return "WeightOutOfRange";
    case Errc::empty_list: return "EmptyList";
    case Errc::tube_out_of_bounds: return "TubeOutOfBounds";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::io_failure: return "IoFailure";
  }
  return "UnknownError";
}

bool is_format_error(Errc code) {
  switch (code) {
    case Errc::bad_magic:
    case Errc::nifti2_unsupported:
    case Errc::pair_form_unsupported:
    case Errc::unsupported_datatype:
    case Errc::truncated_data:
    case Errc::gzip_corrupt:
    case Errc::io_failure:
      return true;
    default:
      return false;
  }
}

}  // namespace pulmofuse
