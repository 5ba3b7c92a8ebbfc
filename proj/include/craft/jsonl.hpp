#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace craft {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

enum class Compression { auto_detect, none, gzip, zstd };

Compression compression_from_name(std::string_view name);
std::string compression_name(Compression c);

// Extension-based detection: .zst/.zstd, .gz; anything else is plain.
Compression detect_compression(std::string_view path);

// Pull-based byte stream; read() returns 0 at end of stream and throws
// IoError on failure.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual size_t read(char* buf, size_t n) = 0;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(const char* buf, size_t n) = 0;
  // Flushes and finalizes the stream. Must be called before destruction
  // for the output to be complete; destructors finish quietly.
  virtual void finish() = 0;
};

std::unique_ptr<ByteSource> open_byte_source(const std::string& path,
                                             Compression compression = Compression::auto_detect);
std::unique_ptr<ByteSink> open_byte_sink(const std::string& path,
                                         Compression compression = Compression::auto_detect);

// Buffered line splitter over a ByteSource. Lines are terminated by '\n'
// (a trailing '\r' is kept: corpus lines are JSON, which never ends in a
// bare CR). The final unterminated line, if any, is returned as well.
class LineReader {
 public:
  explicit LineReader(std::unique_ptr<ByteSource> src, size_t buf_size = 1 << 16);

  bool next(std::string& line);
  uint64_t lines_read() const { return lines_read_; }
  uint64_t bytes_read() const { return bytes_read_; }

 private:
  std::unique_ptr<ByteSource> src_;
  std::string buf_;
  size_t pos_ = 0;
  size_t fill_ = 0;
  bool eof_ = false;
  uint64_t lines_read_ = 0;
  uint64_t bytes_read_ = 0;
};

// One JSON object per line, '\n' terminated. Serialization is key-sorted
// (nlohmann objects are ordered maps), so identical record sequences give
// byte-identical files.
class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, Compression compression = Compression::auto_detect);
  ~JsonlWriter();

  void write(const json& record);
  void write_raw(std::string_view line);  // caller guarantees single-line content
  void close();                           // finalize; safe to call twice
  uint64_t count() const { return count_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unique_ptr<ByteSink> sink_;
  uint64_t count_ = 0;
  bool closed_ = false;
};

// Convenience for small files.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace craft
