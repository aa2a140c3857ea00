#include "pulmofuse/bytes.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <random>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

void ByteSource::read_exact(void* dst, std::size_t n) {
  if (read(dst, n) != n)
    raise(Errc::truncated_data, "stream ended before expected byte count");
}

std::vector<std::uint8_t> ByteSource::read_all() {
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const std::size_t got = read(buf, sizeof buf);
    out.insert(out.end(), buf, buf + got);
    if (got < sizeof buf) break;
  }
  return out;
}

std::size_t MemorySource::read(void* dst, std::size_t n) {
  const std::size_t have = bytes_.size() - pos_;
  const std::size_t take = n < have ? n : have;
  std::memcpy(dst, bytes_.data() + pos_, take);
  pos_ += take;
  return take;
}

void MemorySink::write(const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  bytes_.insert(bytes_.end(), p, p + n);
}

struct FileSource::Impl {
  std::FILE* fp = nullptr;
};

FileSource::FileSource(const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
  impl_->fp = std::fopen(path.string().c_str(), "rb");
  if (!impl_->fp)
    raise(Errc::io_failure, "cannot open for reading: " + path.string());
}

FileSource::~FileSource() {
  if (impl_->fp) std::fclose(impl_->fp);
}

std::size_t FileSource::read(void* dst, std::size_t n) {
  const std::size_t got = std::fread(dst, 1, n, impl_->fp);
  if (got < n && std::ferror(impl_->fp))
    raise(Errc::io_failure, "read error");
  return got;
}

struct AtomicFileSink::Impl {
  std::filesystem::path target;
  std::filesystem::path tmp;
  std::FILE* fp = nullptr;
  bool committed = false;
};

AtomicFileSink::AtomicFileSink(const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
  impl_->target = path;
  std::random_device rd;
  impl_->tmp = path;
  impl_->tmp += ".tmp" + std::to_string(rd() % 1000000);
  impl_->fp = std::fopen(impl_->tmp.string().c_str(), "wb");
  if (!impl_->fp)
    raise(Errc::io_failure, "cannot open for writing: " + impl_->tmp.string());
}

AtomicFileSink::~AtomicFileSink() {
  if (impl_->fp) std::fclose(impl_->fp);
  if (!impl_->committed) {
    std::error_code ec;
    std::filesystem::remove(impl_->tmp, ec);
  }
}

void AtomicFileSink::write(const void* src, std::size_t n) {
  if (std::fwrite(src, 1, n, impl_->fp) != n)
    raise(Errc::io_failure, "write error: " + impl_->tmp.string());
}

void AtomicFileSink::finish() {
  if (impl_->committed) return;
  if (std::fclose(impl_->fp) != 0) {
    impl_->fp = nullptr;
    raise(Errc::io_failure, "close error: " + impl_->tmp.string());
  }
  impl_->fp = nullptr;
  std::error_code ec;
  std::filesystem::rename(impl_->tmp, impl_->target, ec);
  if (ec)
    raise(Errc::io_failure,
          "rename failed: " + impl_->tmp.string() + " -> " +
              impl_->target.string());
  impl_->committed = true;
}

namespace {
constexpr std::size_t kZBuf = 1 << 16;
}

struct GzipSource::Impl {
  std::unique_ptr<ByteSource> inner;
  z_stream zs{};
  std::uint8_t in[kZBuf];
  bool eof = false;        // inner stream exhausted
  bool stream_end = false; // gzip trailer seen
};

GzipSource::GzipSource(std::unique_ptr<ByteSource> inner)
    : impl_(std::make_unique<Impl>()) {
  impl_->inner = std::move(inner);
  // 15 + 16: zlib's flag for an RFC-1952 (gzip) wrapper.
  if (inflateInit2(&impl_->zs, 15 + 16) != Z_OK)
    raise(Errc::gzip_corrupt, "inflateInit failed");
}

GzipSource::~GzipSource() { inflateEnd(&impl_->zs); }

std::size_t GzipSource::read(void* dst, std::size_t n) {
  z_stream& zs = impl_->zs;
  zs.next_out = static_cast<Bytef*>(dst);
  zs.avail_out = static_cast<uInt>(n);
  while (zs.avail_out > 0 && !impl_->stream_end) {
    if (zs.avail_in == 0 && !impl_->eof) {
      const std::size_t got = impl_->inner->read(impl_->in, kZBuf);
      impl_->eof = got < kZBuf;
      zs.next_in = impl_->in;
      zs.avail_in = static_cast<uInt>(got);
    }
    if (zs.avail_in == 0 && impl_->eof) {
      raise(Errc::gzip_corrupt, "gzip stream truncated");
    }
    const int rc = inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) {
      impl_->stream_end = true;
    } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
      raise(Errc::gzip_corrupt,
            std::string("gzip decode error: ") + (zs.msg ? zs.msg : "inflate"));
    }
  }
  return n - zs.avail_out;
}

struct GzipSink::Impl {
  std::unique_ptr<ByteSink> inner;
  z_stream zs{};
  std::uint8_t out[kZBuf];
  bool finished = false;
};

GzipSink::GzipSink(std::unique_ptr<ByteSink> inner, int level)
    : impl_(std::make_unique<Impl>()) {
  impl_->inner = std::move(inner);
  if (level < 0) level = Z_DEFAULT_COMPRESSION;
  // Default gzip header carries mtime 0, so output bytes depend only on the
  // input bytes (required for reproducible pipelines).
  if (deflateInit2(&impl_->zs, level, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    raise(Errc::io_failure, "deflateInit failed");
}

GzipSink::~GzipSink() { deflateEnd(&impl_->zs); }

void GzipSink::write(const void* src, std::size_t n) {
  z_stream& zs = impl_->zs;
  zs.next_in = static_cast<Bytef*>(const_cast<void*>(src));
  zs.avail_in = static_cast<uInt>(n);
  while (zs.avail_in > 0) {
    zs.next_out = impl_->out;
    zs.avail_out = kZBuf;
    if (deflate(&zs, Z_NO_FLUSH) == Z_STREAM_ERROR)
      raise(Errc::io_failure, "deflate error");
    impl_->inner->write(impl_->out, kZBuf - zs.avail_out);
  }
}

void GzipSink::finish() {
  if (impl_->finished) return;
  z_stream& zs = impl_->zs;
  zs.next_in = nullptr;
  zs.avail_in = 0;
  for (;;) {
    zs.next_out = impl_->out;
    zs.avail_out = kZBuf;
    const int rc = deflate(&zs, Z_FINISH);
    impl_->inner->write(impl_->out, kZBuf - zs.avail_out);
    if (rc == Z_STREAM_END) break;
    if (rc != Z_OK)
      raise(Errc::io_failure, "deflate finish error");
  }
  impl_->inner->finish();
  impl_->finished = true;
}

bool looks_gzip(const std::uint8_t* bytes, std::size_t n) {
  return n >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

namespace {

// Replays a consumed prefix before falling through to the inner stream.
class PrefixedSource : public ByteSource {
 public:
  PrefixedSource(std::vector<std::uint8_t> prefix,
                 std::unique_ptr<ByteSource> inner)
      : prefix_(std::move(prefix)), inner_(std::move(inner)) {}

  std::size_t read(void* dst, std::size_t n) override {
    std::size_t done = 0;
    if (pos_ < prefix_.size()) {
      const std::size_t take = std::min(n, prefix_.size() - pos_);
      std::memcpy(dst, prefix_.data() + pos_, take);
      pos_ += take;
      done = take;
    }
    if (done < n)
      done += inner_->read(static_cast<std::uint8_t*>(dst) + done, n - done);
    return done;
  }

 private:
  std::vector<std::uint8_t> prefix_;
  std::size_t pos_ = 0;
  std::unique_ptr<ByteSource> inner_;
};

}  // namespace

std::unique_ptr<ByteSource> auto_decompress(std::unique_ptr<ByteSource> inner) {
  std::vector<std::uint8_t> head(2);
  const std::size_t got = inner->read(head.data(), 2);
  head.resize(got);
  const bool gz = looks_gzip(head.data(), head.size());
  auto replay = std::make_unique<PrefixedSource>(std::move(head), std::move(inner));
  if (gz) return std::make_unique<GzipSource>(std::move(replay));
  return replay;
}

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path) {
  return auto_decompress(std::make_unique<FileSource>(path));
}

}  // namespace pulmofuse
