#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pulmofuse/bytes.hpp"
#include "pulmofuse/volume.hpp"

namespace pulmofuse {

// NIfTI-1 datatype codes this library understands.
inline constexpr std::int16_t kNiftiTypeUint8 = 2;
inline constexpr std::int16_t kNiftiTypeInt16 = 4;
inline constexpr std::int16_t kNiftiTypeInt32 = 8;
inline constexpr std::int16_t kNiftiTypeFloat32 = 16;
inline constexpr std::int16_t kNiftiTypeFloat64 = 64;

// The decoded NIfTI-1 header fields the library interprets. Values are held
// in native byte order regardless of the file's encoding.
struct NiftiHeader {
  std::int32_t sizeof_hdr = 348;
  std::array<std::int16_t, 8> dim{};
  std::int16_t datatype_code = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = 352.0f;
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<float, 4> srow_x{};
  std::array<float, 4> srow_y{};
  std::array<float, 4> srow_z{};
  std::array<char, 4> magic{'n', '+', '1', '\0'};

  bool operator==(const NiftiHeader&) const = default;
};

int nifti_bitpix_for(std::int16_t datatype_code);

struct NiftiReadResult {
  NiftiHeader header;
  Volume volume;
  std::vector<std::string> warnings;
};

// Incremental reader: parses the header up front, then decodes voxels in
// caller-sized chunks so six full-size CT probability maps never have to be
// resident at once.
class NiftiStreamReader {
 public:
  explicit NiftiStreamReader(std::unique_ptr<ByteSource> raw);
  ~NiftiStreamReader();
  NiftiStreamReader(NiftiStreamReader&&) noexcept;
  NiftiStreamReader& operator=(NiftiStreamReader&&) noexcept;

  const NiftiHeader& header() const;
  const std::vector<std::string>& warnings() const;
  Shape3 shape() const;
  Geometry geometry() const;
  // Element kind of the decoded volume (after any slope/intercept rescale
  // or down-conversion).
  ElementKind decoded_kind() const;

  std::size_t elements_total() const;
  std::size_t elements_remaining() const;

  // Decodes the next `count` elements as float-32 (rescale applied).
  void read_f32(float* dst, std::size_t count);

  // Decodes everything that remains into a Volume of decoded_kind().
  Volume read_all();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class NiftiStreamWriter {
 public:
  // Writes the header immediately; voxels follow via the write_* calls.
  NiftiStreamWriter(std::unique_ptr<ByteSink> sink, const NiftiHeader& header);
  ~NiftiStreamWriter();

  void write_u8(const std::uint8_t* src, std::size_t count);
  void write_i16(const std::int16_t* src, std::size_t count);
  void write_f32(const float* src, std::size_t count);

  // Verifies the element count and flushes the sink.
  void finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

NiftiReadResult read_nifti(std::unique_ptr<ByteSource> source);
NiftiReadResult read_nifti(const std::vector<std::uint8_t>& bytes);
NiftiReadResult read_nifti_file(const std::filesystem::path& path);

// Header template matching a volume: dims/pixdim/datatype from the volume,
// srow rows from its affine, identity rescale.
NiftiHeader make_header(const Volume& v);
NiftiHeader make_header(Shape3 shape, const Geometry& geom, ElementKind kind);

void write_nifti(ByteSink& sink, const NiftiHeader& header_template,
                 const Volume& v);
std::vector<std::uint8_t> write_nifti_bytes(const NiftiHeader& header_template,
                                            const Volume& v, bool gzip);
std::vector<std::uint8_t> write_nifti_bytes(const Volume& v, bool gzip);
void write_nifti_file(const std::filesystem::path& path, const Volume& v,
                      bool gzip);
void write_nifti_file(const std::filesystem::path& path,
                      const NiftiHeader& header_template, const Volume& v,
                      bool gzip);

// True when the path spells a gzip-wrapped name (.gz suffix).
bool gzip_path(const std::filesystem::path& path);

}  // namespace pulmofuse
