#include "craft/jsonl.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "zstd_min.hpp"

namespace craft {

namespace fs = std::filesystem;

Compression compression_from_name(std::string_view name) {
  if (name == "auto") return Compression::auto_detect;
  if (name == "none") return Compression::none;
  if (name == "gzip" || name == "gz") return Compression::gzip;
  if (name == "zstd" || name == "zst") return Compression::zstd;
  throw IoError("unknown compression: " + std::string(name));
}

std::string compression_name(Compression c) {
  switch (c) {
    case Compression::auto_detect: return "auto";
    case Compression::none: return "none";
    case Compression::gzip: return "gzip";
    case Compression::zstd: return "zstd";
  }
  return "none";
}

Compression detect_compression(std::string_view path) {
  auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.substr(path.size() - suf.size()) == suf;
  };
  if (ends_with(".zst") || ends_with(".zstd")) return Compression::zstd;
  if (ends_with(".gz")) return Compression::gzip;
  return Compression::none;
}

namespace {

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  }
  ~FileSource() override {
    if (f_) std::fclose(f_);
  }
  size_t read(char* buf, size_t n) override {
    const size_t got = std::fread(buf, 1, n, f_);
    if (got < n && std::ferror(f_)) throw IoError("read error on " + path_);
    return got;
  }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

class GzipSource final : public ByteSource {
 public:
  GzipSource(std::unique_ptr<ByteSource> inner, std::string path)
      : inner_(std::move(inner)), path_(std::move(path)), in_buf_(1 << 16) {
    std::memset(&strm_, 0, sizeof(strm_));
    // 15 + 32: accept gzip or zlib wrappers.
    if (inflateInit2(&strm_, 15 + 32) != Z_OK) throw IoError("inflateInit failed for " + path_);
    ok_ = true;
  }
  ~GzipSource() override {
    if (ok_) inflateEnd(&strm_);
  }
  size_t read(char* buf, size_t n) override {
    if (done_) return 0;
    strm_.next_out = reinterpret_cast<Bytef*>(buf);
    strm_.avail_out = static_cast<uInt>(n);
    while (strm_.avail_out > 0) {
      if (strm_.avail_in == 0 && !input_eof_) {
        const size_t got = inner_->read(in_buf_.data(), in_buf_.size());
        if (got == 0) input_eof_ = true;
        strm_.next_in = reinterpret_cast<Bytef*>(in_buf_.data());
        strm_.avail_in = static_cast<uInt>(got);
      }
      if (strm_.avail_in == 0 && input_eof_) {
        if (!member_done_) throw IoError("truncated gzip stream: " + path_);
        done_ = true;
        break;
      }
      const int rc = inflate(&strm_, Z_NO_FLUSH);
      if (rc == Z_STREAM_END) {
        // Concatenated gzip members are valid; restart for the next one.
        member_done_ = true;
        if (inflateReset2(&strm_, 15 + 32) != Z_OK)
          throw IoError("inflateReset failed for " + path_);
        continue;
      }
      if (rc != Z_OK && rc != Z_BUF_ERROR)
        throw IoError("gzip decode error in " + path_ + ": " +
                      (strm_.msg ? strm_.msg : std::to_string(rc)));
      if (strm_.avail_out > 0 && strm_.avail_in > 0 && rc == Z_BUF_ERROR)
        throw IoError("gzip decode stalled in " + path_);
      member_done_ = false;
    }
    return n - strm_.avail_out;
  }

 private:
  std::unique_ptr<ByteSource> inner_;
  std::string path_;
  std::vector<char> in_buf_;
  z_stream strm_;
  bool ok_ = false;
  bool input_eof_ = false;
  bool done_ = false;
  bool member_done_ = true;  // true between members; empty input reads as empty
};

class ZstdSource final : public ByteSource {
 public:
  ZstdSource(std::unique_ptr<ByteSource> inner, std::string path)
      : inner_(std::move(inner)), path_(std::move(path)), in_buf_(ZSTD_DStreamInSize()) {
    dctx_ = ZSTD_createDCtx();
    if (!dctx_) throw IoError("ZSTD_createDCtx failed");
    in_ = {in_buf_.data(), 0, 0};
  }
  ~ZstdSource() override {
    if (dctx_) ZSTD_freeDCtx(dctx_);
  }
  size_t read(char* buf, size_t n) override {
    ZSTD_outBuffer out{buf, n, 0};
    while (out.pos < out.size) {
      if (in_.pos == in_.size) {
        const size_t got = inner_->read(in_buf_.data(), in_buf_.size());
        if (got == 0) {
          if (!frame_done_) throw IoError("truncated zstd stream: " + path_);
          break;
        }
        in_ = {in_buf_.data(), got, 0};
      }
      const size_t rc = ZSTD_decompressStream(dctx_, &out, &in_);
      if (ZSTD_isError(rc))
        throw IoError("zstd decode error in " + path_ + ": " + ZSTD_getErrorName(rc));
      frame_done_ = (rc == 0);
    }
    return out.pos;
  }

 private:
  std::unique_ptr<ByteSource> inner_;
  std::string path_;
  std::vector<char> in_buf_;
  ZSTD_inBuffer in_{};
  ZSTD_DCtx* dctx_ = nullptr;
  bool frame_done_ = true;
};

class FileSink final : public ByteSink {
 public:
  explicit FileSink(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw IoError("cannot create " + path + ": " + std::strerror(errno));
  }
  ~FileSink() override {
    if (f_) std::fclose(f_);
  }
  void write(const char* buf, size_t n) override {
    if (std::fwrite(buf, 1, n, f_) != n)
      throw IoError("write failed on " + path_ + " (partial file left in place)");
  }
  void finish() override {
    if (!f_) return;
    if (std::fclose(f_) != 0) {
      f_ = nullptr;
      throw IoError("close failed on " + path_ + " (partial file left in place)");
    }
    f_ = nullptr;
  }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

class ZstdSink final : public ByteSink {
 public:
  ZstdSink(std::unique_ptr<ByteSink> inner, std::string path, int level = 3)
      : inner_(std::move(inner)), path_(std::move(path)), out_buf_(ZSTD_CStreamOutSize()) {
    cctx_ = ZSTD_createCCtx();
    if (!cctx_) throw IoError("ZSTD_createCCtx failed");
    ZSTD_CCtx_setParameter(cctx_, ZSTD_c_compressionLevel, level);
  }
  ~ZstdSink() override {
    if (cctx_) ZSTD_freeCCtx(cctx_);
  }
  void write(const char* buf, size_t n) override { pump(buf, n, ZSTD_e_continue); }
  void finish() override {
    if (finished_) return;
    pump(nullptr, 0, ZSTD_e_end);
    inner_->finish();
    finished_ = true;
  }

 private:
  void pump(const char* buf, size_t n, ZSTD_EndDirective mode) {
    ZSTD_inBuffer in{buf, n, 0};
    while (true) {
      ZSTD_outBuffer out{out_buf_.data(), out_buf_.size(), 0};
      const size_t remaining = ZSTD_compressStream2(cctx_, &out, &in, mode);
      if (ZSTD_isError(remaining))
        throw IoError("zstd encode error for " + path_ + ": " + ZSTD_getErrorName(remaining));
      if (out.pos > 0) inner_->write(out_buf_.data(), out.pos);
      const bool flushed = (mode == ZSTD_e_end) ? (remaining == 0) : (in.pos == in.size);
      if (flushed) break;
    }
  }

  std::unique_ptr<ByteSink> inner_;
  std::string path_;
  std::vector<char> out_buf_;
  ZSTD_CCtx* cctx_ = nullptr;
  bool finished_ = false;
};

class GzipSink final : public ByteSink {
 public:
  GzipSink(const std::string& path, int level = 6) : path_(path) {
    gz_ = gzopen(path.c_str(), ("wb" + std::to_string(level)).c_str());
    if (!gz_) throw IoError("cannot create " + path);
  }
  ~GzipSink() override {
    if (gz_) gzclose(gz_);
  }
  void write(const char* buf, size_t n) override {
    while (n > 0) {
      const unsigned batch = static_cast<unsigned>(std::min<size_t>(n, 1u << 30));
      if (gzwrite(gz_, buf, batch) <= 0)
        throw IoError("gzip write failed on " + path_ + " (partial file left in place)");
      buf += batch;
      n -= batch;
    }
  }
  void finish() override {
    if (!gz_) return;
    const int rc = gzclose(gz_);
    gz_ = nullptr;
    if (rc != Z_OK) throw IoError("gzip close failed on " + path_);
  }

 private:
  std::string path_;
  gzFile gz_ = nullptr;
};

Compression resolve(const std::string& path, Compression c) {
  return c == Compression::auto_detect ? detect_compression(path) : c;
}

}  // namespace

std::unique_ptr<ByteSource> open_byte_source(const std::string& path, Compression compression) {
  auto file = std::make_unique<FileSource>(path);
  switch (resolve(path, compression)) {
    case Compression::gzip:
      return std::make_unique<GzipSource>(std::move(file), path);
    case Compression::zstd:
      return std::make_unique<ZstdSource>(std::move(file), path);
    default:
      return file;
  }
}

std::unique_ptr<ByteSink> open_byte_sink(const std::string& path, Compression compression) {
  const Compression c = resolve(path, compression);
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  switch (c) {
    case Compression::gzip:
      return std::make_unique<GzipSink>(path);
    case Compression::zstd:
      return std::make_unique<ZstdSink>(std::make_unique<FileSink>(path), path);
    default:
      return std::make_unique<FileSink>(path);
  }
}

LineReader::LineReader(std::unique_ptr<ByteSource> src, size_t buf_size)
    : src_(std::move(src)) {
  buf_.resize(buf_size);
}

bool LineReader::next(std::string& line) {
  line.clear();
  while (true) {
    if (pos_ < fill_) {
      const char* base = buf_.data() + pos_;
      const size_t avail = fill_ - pos_;
      if (const char* nl = static_cast<const char*>(std::memchr(base, '\n', avail))) {
        const size_t len = static_cast<size_t>(nl - base);
        line.append(base, len);
        pos_ += len + 1;
        bytes_read_ += line.size() + 1;
        ++lines_read_;
        return true;
      }
      line.append(base, avail);
      pos_ = fill_;
    }
    if (eof_) {
      if (line.empty()) return false;
      bytes_read_ += line.size();
      ++lines_read_;
      return true;
    }
    fill_ = src_->read(buf_.data(), buf_.size());
    pos_ = 0;
    if (fill_ == 0) eof_ = true;
  }
}

JsonlWriter::JsonlWriter(const std::string& path, Compression compression)
    : path_(path), sink_(open_byte_sink(path, compression)) {}

JsonlWriter::~JsonlWriter() {
  try {
    close();
  } catch (...) {
    // Destruction must not throw; close() explicitly to observe errors.
  }
}

void JsonlWriter::write(const json& record) { write_raw(record.dump()); }

void JsonlWriter::write_raw(std::string_view data) {
  sink_->write(data.data(), data.size());
  sink_->write("\n", 1);
  ++count_;
}

void JsonlWriter::close() {
  if (closed_) return;
  closed_ = true;
  sink_->finish();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed on " + path);
}

}  // namespace craft
