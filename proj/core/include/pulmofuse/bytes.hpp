#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace pulmofuse {

// Incremental pull source. read() returns the number of bytes produced;
// anything short of `n` means end of stream.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t read(void* dst, std::size_t n) = 0;

  // Raises Errc::truncated_data when fewer than n bytes remain.
  void read_exact(void* dst, std::size_t n);
  std::vector<std::uint8_t> read_all();
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(const void* src, std::size_t n) = 0;
  // Flushes buffered/compressed state. Must be called before the sink is
  // destroyed if the output is to be complete.
  virtual void finish() {}
};

class MemorySource : public ByteSource {
 public:
  explicit MemorySource(std::vector<std::uint8_t> bytes)
      : bytes_(std::move(bytes)) {}
  std::size_t read(void* dst, std::size_t n) override;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class MemorySink : public ByteSink {
 public:
  void write(const void* src, std::size_t n) override;
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class FileSource : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  ~FileSource() override;
  std::size_t read(void* dst, std::size_t n) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Writes through a temporary file in the destination directory; the target
// path only appears once finish() has run (rename is atomic on POSIX).
class AtomicFileSink : public ByteSink {
 public:
  explicit AtomicFileSink(const std::filesystem::path& path);
  ~AtomicFileSink() override;
  void write(const void* src, std::size_t n) override;
  void finish() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// RFC-1952 framed decompression over any inner source.
class GzipSource : public ByteSource {
 public:
  explicit GzipSource(std::unique_ptr<ByteSource> inner);
  ~GzipSource() override;
  std::size_t read(void* dst, std::size_t n) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class GzipSink : public ByteSink {
 public:
  explicit GzipSink(std::unique_ptr<ByteSink> inner, int level = -1);
  ~GzipSink() override;
  void write(const void* src, std::size_t n) override;
  void finish() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool looks_gzip(const std::uint8_t* bytes, std::size_t n);

// Peeks the first two bytes and wraps the stream in a GzipSource when the
// RFC-1952 magic 0x1F 0x8B is present.
std::unique_ptr<ByteSource> auto_decompress(std::unique_ptr<ByteSource> inner);

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path);

}  // namespace pulmofuse
