// NIfTI-1 single-file ("n+1") reader/writer.
//
// The 348-byte header is parsed field-by-field at the offsets fixed by the
// standard (nifti1.h). Byte order is inferred from sizeof_hdr: a native read
// of 348 means the file matches the host, 1543569408 (= bswap32(348)) means
// every multi-byte field including the voxel payload needs swapping.
// Extension blocks between byte 348 and vox_offset are skipped and dropped.

#include "pulmofuse/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::int32_t kSizeofHdrSwapped = 1543569408;  // bswap32(348)
constexpr std::int32_t kNifti2SizeofHdr = 540;

std::uint16_t bswap16(std::uint16_t v) {
  return static_cast<std::uint16_t>((v >> 8) | (v << 8));
}

std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) |
         (v << 24);
}

std::uint64_t bswap64(std::uint64_t v) {
  return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v)))
          << 32) |
         bswap32(static_cast<std::uint32_t>(v >> 32));
}

// Little-endian field access into the raw header block. The host is assumed
// little-endian (checked at compile time below); `swap` handles big-endian
// files.
static_assert(std::endian::native == std::endian::little,
              "reader assumes a little-endian host");

struct HeaderBlock {
  const std::uint8_t* p;
  bool swap;

  std::int16_t i16(std::size_t off) const {
    std::uint16_t v;
    std::memcpy(&v, p + off, 2);
    if (swap) v = bswap16(v);
    return static_cast<std::int16_t>(v);
  }
  std::int32_t i32(std::size_t off) const {
    std::uint32_t v;
    std::memcpy(&v, p + off, 4);
    if (swap) v = bswap32(v);
    return static_cast<std::int32_t>(v);
  }
  float f32(std::size_t off) const {
    std::uint32_t v;
    std::memcpy(&v, p + off, 4);
    if (swap) v = bswap32(v);
    return std::bit_cast<float>(v);
  }
};

struct HeaderWriter {
  std::uint8_t* p;

  void i16(std::size_t off, std::int16_t v) { std::memcpy(p + off, &v, 2); }
  void i32(std::size_t off, std::int32_t v) { std::memcpy(p + off, &v, 4); }
  void f32(std::size_t off, float v) { std::memcpy(p + off, &v, 4); }
};

// Standard nifti_1_header offsets.
enum : std::size_t {
  kOffSizeofHdr = 0,
  kOffDim = 40,
  kOffDatatype = 70,
  kOffBitpix = 72,
  kOffPixdim = 76,
  kOffVoxOffset = 108,
  kOffSclSlope = 112,
  kOffSclInter = 116,
  kOffQformCode = 252,
  kOffSformCode = 254,
  kOffSrowX = 280,
  kOffSrowY = 296,
  kOffSrowZ = 312,
  kOffMagic = 344,
};

bool magic_is(const std::array<char, 4>& m, const char* s) {
  return std::memcmp(m.data(), s, 4) == 0;
}

void validate_dims(const NiftiHeader& h) {
  const int rank = h.dim[0];
  if (rank < 3 || rank > 4)
    raise(Errc::inconsistent_header,
          "dim[0] must be 3 or 4, got " + std::to_string(rank));
  for (int i = 1; i <= rank; ++i)
    if (h.dim[i] < 1)
      raise(Errc::inconsistent_header,
            "dim[" + std::to_string(i) + "] must be >= 1");
  if (rank == 4 && h.dim[4] != 1)
    raise(Errc::inconsistent_header,
          "4D files with dim[4] > 1 are not supported");
  for (int i = 1; i <= 3; ++i)
    if (!(h.pixdim[i] > 0.0f))
      raise(Errc::inconsistent_header,
            "pixdim[" + std::to_string(i) + "] must be positive");
}

}  // namespace

int nifti_bitpix_for(std::int16_t code) {
  switch (code) {
    case kNiftiTypeUint8: return 8;
    case kNiftiTypeInt16: return 16;
    case kNiftiTypeInt32: return 32;
    case kNiftiTypeFloat32: return 32;
    case kNiftiTypeFloat64: return 64;
    default: return 0;
  }
}

struct NiftiStreamReader::Impl {
  std::unique_ptr<ByteSource> src;
  NiftiHeader header;
  std::vector<std::string> warnings;
  bool swap = false;
  bool rescale = false;  // apply scl_slope / scl_inter
  ElementKind decoded = ElementKind::u8;
  std::size_t total = 0;
  std::size_t remaining = 0;
  int file_element_bytes = 0;

  void parse();
  void skip_to_data();
  // Reads `count` raw file elements into buf (byte-swapped to native).
  void read_raw(std::uint8_t* buf, std::size_t count);
  double decode_one(const std::uint8_t* elem) const;
};

void NiftiStreamReader::Impl::parse() {
  std::uint8_t raw[kHeaderSize];
  if (src->read(raw, kHeaderSize) != kHeaderSize)
    raise(Errc::truncated_data, "file shorter than the 348-byte header");

  std::int32_t size_native;
  std::memcpy(&size_native, raw, 4);
  if (size_native == kNifti2SizeofHdr ||
      static_cast<std::int32_t>(bswap32(
          static_cast<std::uint32_t>(size_native))) == kNifti2SizeofHdr)
    raise(Errc::nifti2_unsupported, "NIfTI-2 files are not supported");
  if (size_native == 348) {
    swap = false;
  } else if (size_native == kSizeofHdrSwapped) {
    swap = true;
  } else {
    raise(Errc::bad_magic, "sizeof_hdr is neither 348 nor its byte-swap");
  }

  HeaderBlock b{raw, swap};
  NiftiHeader& h = header;
  h.sizeof_hdr = b.i32(kOffSizeofHdr);
  for (int i = 0; i < 8; ++i) h.dim[i] = b.i16(kOffDim + 2 * i);
  h.datatype_code = b.i16(kOffDatatype);
  h.bitpix = b.i16(kOffBitpix);
  for (int i = 0; i < 8; ++i) h.pixdim[i] = b.f32(kOffPixdim + 4 * i);
  h.vox_offset = b.f32(kOffVoxOffset);
  h.scl_slope = b.f32(kOffSclSlope);
  h.scl_inter = b.f32(kOffSclInter);
  h.qform_code = b.i16(kOffQformCode);
  h.sform_code = b.i16(kOffSformCode);
  for (int i = 0; i < 4; ++i) {
    h.srow_x[i] = b.f32(kOffSrowX + 4 * i);
    h.srow_y[i] = b.f32(kOffSrowY + 4 * i);
    h.srow_z[i] = b.f32(kOffSrowZ + 4 * i);
  }
  std::memcpy(h.magic.data(), raw + kOffMagic, 4);

  if (magic_is(h.magic, "ni1\0"))
    raise(Errc::pair_form_unsupported,
          "header+data pair files (.hdr/.img) are not supported");
  if (!magic_is(h.magic, "n+1\0"))
    raise(Errc::bad_magic, "magic is not \"n+1\"");

  const int want_bitpix = nifti_bitpix_for(h.datatype_code);
  if (want_bitpix == 0)
    raise(Errc::unsupported_datatype,
          "datatype code " + std::to_string(h.datatype_code) +
              " not in {2, 4, 8, 16, 64}");
  if (h.bitpix != want_bitpix)
    raise(Errc::inconsistent_header,
          "bitpix " + std::to_string(h.bitpix) + " does not match datatype " +
              std::to_string(h.datatype_code));
  validate_dims(h);
  if (h.vox_offset < static_cast<float>(kHeaderSize))
    raise(Errc::inconsistent_header, "vox_offset before end of header");

  file_element_bytes = want_bitpix / 8;
  total = static_cast<std::size_t>(h.dim[1]) * h.dim[2] * h.dim[3];
  remaining = total;

  // slope 0 means "no rescale" per the standard; the identity pair (1, 0)
  // must not force a float conversion or round-trips would change kind.
  rescale = h.scl_slope != 0.0f &&
            !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);

  if (h.datatype_code == kNiftiTypeFloat64)
    warnings.push_back("float64 voxels down-converted to float32");
  if (h.datatype_code == kNiftiTypeInt32)
    warnings.push_back("int32 voxels converted to float32");

  if (rescale || h.datatype_code == kNiftiTypeFloat32 ||
      h.datatype_code == kNiftiTypeFloat64 ||
      h.datatype_code == kNiftiTypeInt32) {
    decoded = ElementKind::f32;
  } else if (h.datatype_code == kNiftiTypeInt16) {
    decoded = ElementKind::i16;
  } else {
    decoded = ElementKind::u8;
  }

  skip_to_data();
}

void NiftiStreamReader::Impl::skip_to_data() {
  auto skip = static_cast<std::size_t>(header.vox_offset) - kHeaderSize;
  std::uint8_t buf[4096];
  while (skip > 0) {
    const std::size_t chunk = skip < sizeof buf ? skip : sizeof buf;
    if (src->read(buf, chunk) != chunk)
      raise(Errc::truncated_data, "file ends inside the extension area");
    skip -= chunk;
  }
}

void NiftiStreamReader::Impl::read_raw(std::uint8_t* buf, std::size_t count) {
  if (count > remaining)
    raise(Errc::truncated_data, "read past the end of the voxel data");
  const std::size_t bytes = count * file_element_bytes;
  if (src->read(buf, bytes) != bytes)
    raise(Errc::truncated_data,
          "voxel data shorter than dim[1..3] x bitpix implies");
  remaining -= count;
  if (remaining == 0) {
    // Drain to end-of-stream so a gzip wrapper reaches and checks its CRC
    // trailer; silent mid-stream corruption surfaces here.
    std::uint8_t tail[4096];
    while (src->read(tail, sizeof tail) == sizeof tail) {
    }
  }
  if (!swap || file_element_bytes == 1) return;
  if (file_element_bytes == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buf + 2 * i, 2);
      v = bswap16(v);
      std::memcpy(buf + 2 * i, &v, 2);
    }
  } else if (file_element_bytes == 4) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v;
      std::memcpy(&v, buf + 4 * i, 4);
      v = bswap32(v);
      std::memcpy(buf + 4 * i, &v, 4);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t v;
      std::memcpy(&v, buf + 8 * i, 8);
      v = bswap64(v);
      std::memcpy(buf + 8 * i, &v, 8);
    }
  }
}

double NiftiStreamReader::Impl::decode_one(const std::uint8_t* elem) const {
  double v = 0.0;
  switch (header.datatype_code) {
    case kNiftiTypeUint8:
      v = *elem;
      break;
    case kNiftiTypeInt16: {
      std::int16_t x;
      std::memcpy(&x, elem, 2);
      v = x;
      break;
    }
    case kNiftiTypeInt32: {
      std::int32_t x;
      std::memcpy(&x, elem, 4);
      v = x;
      break;
    }
    case kNiftiTypeFloat32: {
      float x;
      std::memcpy(&x, elem, 4);
      v = x;
      break;
    }
    case kNiftiTypeFloat64: {
      double x;
      std::memcpy(&x, elem, 8);
      v = x;
      break;
    }
  }
  if (rescale)
    v = static_cast<double>(header.scl_slope) * v +
        static_cast<double>(header.scl_inter);
  return v;
}

NiftiStreamReader::NiftiStreamReader(std::unique_ptr<ByteSource> raw)
    : impl_(std::make_unique<Impl>()) {
  impl_->src = auto_decompress(std::move(raw));
  impl_->parse();
}

NiftiStreamReader::~NiftiStreamReader() = default;
NiftiStreamReader::NiftiStreamReader(NiftiStreamReader&&) noexcept = default;
NiftiStreamReader& NiftiStreamReader::operator=(NiftiStreamReader&&) noexcept =
    default;

const NiftiHeader& NiftiStreamReader::header() const { return impl_->header; }
const std::vector<std::string>& NiftiStreamReader::warnings() const {
  return impl_->warnings;
}

Shape3 NiftiStreamReader::shape() const {
  const auto& d = impl_->header.dim;
  return Shape3{d[1], d[2], d[3]};
}

Geometry NiftiStreamReader::geometry() const {
  const NiftiHeader& h = impl_->header;
  Geometry g;
  g.spacing = Spacing3{h.pixdim[1], h.pixdim[2], h.pixdim[3]};
  if (h.sform_code > 0) {
    g.affine = identity_affine();
    for (int c = 0; c < 4; ++c) {
      g.affine[0 * 4 + c] = h.srow_x[c];
      g.affine[1 * 4 + c] = h.srow_y[c];
      g.affine[2 * 4 + c] = h.srow_z[c];
    }
  } else {
    g.affine = spacing_affine(g.spacing);
  }
  return g;
}

ElementKind NiftiStreamReader::decoded_kind() const { return impl_->decoded; }
std::size_t NiftiStreamReader::elements_total() const { return impl_->total; }
std::size_t NiftiStreamReader::elements_remaining() const {
  return impl_->remaining;
}

void NiftiStreamReader::read_f32(float* dst, std::size_t count) {
  constexpr std::size_t kChunk = 1 << 14;
  std::vector<std::uint8_t> buf(kChunk * impl_->file_element_bytes);
  std::size_t done = 0;
  while (done < count) {
    const std::size_t n = std::min(kChunk, count - done);
    impl_->read_raw(buf.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      dst[done + i] = static_cast<float>(
          impl_->decode_one(buf.data() + i * impl_->file_element_bytes));
    done += n;
  }
}

Volume NiftiStreamReader::read_all() {
  const Shape3 shp = shape();
  const Geometry geom = geometry();
  const std::size_t n = impl_->remaining;
  switch (impl_->decoded) {
    case ElementKind::u8: {
      Grid3<std::uint8_t> g(shp);
      impl_->read_raw(g.data(), n);
      return Volume(std::move(g), geom);
    }
    case ElementKind::i16: {
      Grid3<std::int16_t> g(shp);
      impl_->read_raw(reinterpret_cast<std::uint8_t*>(g.data()), n);
      return Volume(std::move(g), geom);
    }
    case ElementKind::f32: {
      FloatGrid g(shp);
      read_f32(g.data(), n);
      return Volume(std::move(g), geom);
    }
  }
  raise(Errc::unsupported_datatype, "unreachable");
}

NiftiReadResult read_nifti(std::unique_ptr<ByteSource> source) {
  NiftiStreamReader reader(std::move(source));
  NiftiReadResult out;
  out.volume = reader.read_all();
  out.header = reader.header();
  out.warnings = reader.warnings();
  return out;
}

NiftiReadResult read_nifti(const std::vector<std::uint8_t>& bytes) {
  return read_nifti(std::make_unique<MemorySource>(bytes));
}

NiftiReadResult read_nifti_file(const std::filesystem::path& path) {
  return read_nifti(std::make_unique<FileSource>(path));
}

namespace {

std::int16_t datatype_for(ElementKind kind) {
  switch (kind) {
    case ElementKind::u8: return kNiftiTypeUint8;
    case ElementKind::i16: return kNiftiTypeInt16;
    case ElementKind::f32: return kNiftiTypeFloat32;
  }
  return 0;
}

void check_template(const NiftiHeader& h, const Volume& v) {
  const Shape3& s = v.shape();
  if (h.dim[0] < 3 || h.dim[0] > 4 || h.dim[1] != s.nx || h.dim[2] != s.ny ||
      h.dim[3] != s.nz || (h.dim[0] == 4 && h.dim[4] != 1))
    raise(Errc::inconsistent_header, "header dims do not match volume shape");
  if (h.datatype_code != datatype_for(v.kind()))
    raise(Errc::inconsistent_header,
          "header datatype does not match volume element kind");
  if (h.bitpix != bits_per_element(v.kind()))
    raise(Errc::inconsistent_header, "header bitpix mismatch");
  const Spacing3& sp = v.spacing();
  if (h.pixdim[1] != static_cast<float>(sp.sx) ||
      h.pixdim[2] != static_cast<float>(sp.sy) ||
      h.pixdim[3] != static_cast<float>(sp.sz))
    raise(Errc::inconsistent_header, "header pixdim does not match spacing");
  for (int i = 1; i <= 3; ++i)
    if (!(h.pixdim[i] > 0.0f))
      raise(Errc::inconsistent_header, "pixdim must be positive");
}

}  // namespace

NiftiHeader make_header(Shape3 s, const Geometry& geom, ElementKind kind) {
  NiftiHeader h;
  h.dim = {3, static_cast<std::int16_t>(s.nx), static_cast<std::int16_t>(s.ny),
           static_cast<std::int16_t>(s.nz), 1, 1, 1, 1};
  h.datatype_code = datatype_for(kind);
  h.bitpix = static_cast<std::int16_t>(bits_per_element(kind));
  h.pixdim = {1.0f, static_cast<float>(geom.spacing.sx),
              static_cast<float>(geom.spacing.sy),
              static_cast<float>(geom.spacing.sz), 0, 0, 0, 0};
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.sform_code = 1;
  const Affine44& a = geom.affine;
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(a[0 * 4 + c]);
    h.srow_y[c] = static_cast<float>(a[1 * 4 + c]);
    h.srow_z[c] = static_cast<float>(a[2 * 4 + c]);
  }
  return h;
}

NiftiHeader make_header(const Volume& v) {
  return make_header(v.shape(), v.geometry(), v.kind());
}

struct NiftiStreamWriter::Impl {
  std::unique_ptr<ByteSink> sink;
  NiftiHeader header;
  std::size_t expected = 0;
  std::size_t written = 0;
  bool finished = false;

  void check(std::int16_t datatype, std::size_t count) {
    if (header.datatype_code != datatype)
      raise(Errc::inconsistent_header,
            "element type does not match the header datatype");
    if (written + count > expected)
      raise(Errc::inconsistent_header, "more voxels than the header declares");
    written += count;
  }
};

NiftiStreamWriter::NiftiStreamWriter(std::unique_ptr<ByteSink> sink,
                                     const NiftiHeader& header)
    : impl_(std::make_unique<Impl>()) {
  if (nifti_bitpix_for(header.datatype_code) != header.bitpix ||
      (header.datatype_code != kNiftiTypeUint8 &&
       header.datatype_code != kNiftiTypeInt16 &&
       header.datatype_code != kNiftiTypeFloat32))
    raise(Errc::inconsistent_header, "writable datatypes are u8/i16/f32");
  impl_->sink = std::move(sink);
  impl_->header = header;
  // The writer never bakes a rescale into the file.
  impl_->header.scl_slope = 1.0f;
  impl_->header.scl_inter = 0.0f;
  impl_->header.sizeof_hdr = 348;
  impl_->header.vox_offset = 352.0f;
  impl_->header.magic = {'n', '+', '1', '\0'};
  validate_dims(impl_->header);
  impl_->expected = static_cast<std::size_t>(impl_->header.dim[1]) *
                    impl_->header.dim[2] * impl_->header.dim[3];

  std::uint8_t raw[kHeaderSize + 4] = {};  // header + empty extender flag
  HeaderWriter w{raw};
  const NiftiHeader& h = impl_->header;
  w.i32(kOffSizeofHdr, h.sizeof_hdr);
  for (int i = 0; i < 8; ++i) w.i16(kOffDim + 2 * i, h.dim[i]);
  w.i16(kOffDatatype, h.datatype_code);
  w.i16(kOffBitpix, h.bitpix);
  for (int i = 0; i < 8; ++i) w.f32(kOffPixdim + 4 * i, h.pixdim[i]);
  w.f32(kOffVoxOffset, h.vox_offset);
  w.f32(kOffSclSlope, h.scl_slope);
  w.f32(kOffSclInter, h.scl_inter);
  w.i16(kOffQformCode, h.qform_code);
  w.i16(kOffSformCode, h.sform_code);
  for (int i = 0; i < 4; ++i) {
    w.f32(kOffSrowX + 4 * i, h.srow_x[i]);
    w.f32(kOffSrowY + 4 * i, h.srow_y[i]);
    w.f32(kOffSrowZ + 4 * i, h.srow_z[i]);
  }
  std::memcpy(raw + kOffMagic, h.magic.data(), 4);
  impl_->sink->write(raw, sizeof raw);
}

NiftiStreamWriter::~NiftiStreamWriter() = default;

void NiftiStreamWriter::write_u8(const std::uint8_t* src, std::size_t count) {
  impl_->check(kNiftiTypeUint8, count);
  impl_->sink->write(src, count);
}

void NiftiStreamWriter::write_i16(const std::int16_t* src, std::size_t count) {
  impl_->check(kNiftiTypeInt16, count);
  impl_->sink->write(src, count * 2);
}

void NiftiStreamWriter::write_f32(const float* src, std::size_t count) {
  impl_->check(kNiftiTypeFloat32, count);
  impl_->sink->write(src, count * 4);
}

void NiftiStreamWriter::finish() {
  if (impl_->finished) return;
  if (impl_->written != impl_->expected)
    raise(Errc::inconsistent_header,
          "wrote " + std::to_string(impl_->written) + " voxels, header needs " +
              std::to_string(impl_->expected));
  impl_->sink->finish();
  impl_->finished = true;
}

namespace {

class SinkRef : public ByteSink {
 public:
  explicit SinkRef(ByteSink& inner) : inner_(inner) {}
  void write(const void* src, std::size_t n) override { inner_.write(src, n); }
  void finish() override {}

 private:
  ByteSink& inner_;
};

void write_volume_payload(NiftiStreamWriter& w, const Volume& v) {
  switch (v.kind()) {
    case ElementKind::u8:
      w.write_u8(v.u8().data(), v.voxel_count());
      break;
    case ElementKind::i16:
      w.write_i16(v.i16().data(), v.voxel_count());
      break;
    case ElementKind::f32:
      w.write_f32(v.f32().data(), v.voxel_count());
      break;
  }
  w.finish();
}

}  // namespace

void write_nifti(ByteSink& sink, const NiftiHeader& header_template,
                 const Volume& v) {
  check_template(header_template, v);
  NiftiStreamWriter w(std::make_unique<SinkRef>(sink), header_template);
  write_volume_payload(w, v);
}

std::vector<std::uint8_t> write_nifti_bytes(const NiftiHeader& header_template,
                                            const Volume& v, bool gzip) {
  MemorySink mem;
  if (gzip) {
    GzipSink gz(std::make_unique<SinkRef>(mem));
    write_nifti(gz, header_template, v);
    gz.finish();
  } else {
    write_nifti(mem, header_template, v);
  }
  return mem.take();
}

std::vector<std::uint8_t> write_nifti_bytes(const Volume& v, bool gzip) {
  return write_nifti_bytes(make_header(v), v, gzip);
}

void write_nifti_file(const std::filesystem::path& path,
                      const NiftiHeader& header_template, const Volume& v,
                      bool gzip) {
  check_template(header_template, v);
  auto file = std::make_unique<AtomicFileSink>(path);
  if (gzip) {
    auto gz = std::make_unique<GzipSink>(std::move(file));
    NiftiStreamWriter w(std::move(gz), header_template);
    write_volume_payload(w, v);
  } else {
    NiftiStreamWriter w(std::move(file), header_template);
    write_volume_payload(w, v);
  }
}

void write_nifti_file(const std::filesystem::path& path, const Volume& v,
                      bool gzip) {
  write_nifti_file(path, make_header(v), v, gzip);
}

bool gzip_path(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

}  // namespace pulmofuse
