#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "craft/jsonl.hpp"

namespace craft {

struct Document {
  std::string doc_id;
  std::string text;
  json meta = json::object();  // every non-text field, carried through unmodified
  uint64_t ordinal = 0;        // global read order, assigned by the stream
};

struct CorpusSource {
  std::string path;  // file or directory
  Compression compression = Compression::auto_detect;
  std::string text_field = "text";
};

struct ReadStats {
  uint64_t documents_read = 0;
  uint64_t documents_skipped = 0;
  uint64_t bytes_processed = 0;
};

// A directory source enumerates regular files recursively in lexicographic
// order of their relative paths, so runs are reproducible. A file source
// yields just that file.
std::vector<std::string> enumerate_source_files(const CorpusSource& source);

// Streams documents out of one or more corpus sources in file order with
// constant memory. Malformed lines (bad JSON, missing or non-string text
// field, invalid UTF-8) are skipped and counted.
class DocumentStream {
 public:
  explicit DocumentStream(std::vector<CorpusSource> sources);

  bool next(Document& out);
  const ReadStats& stats() const { return stats_; }

 private:
  struct FileEntry {
    std::string path;
    std::string display;  // relative path used in doc ids
    Compression compression;
    std::string text_field;
  };

  bool open_next_file();
  bool parse_line(const std::string& line, Document& out);

  std::vector<FileEntry> files_;
  size_t file_index_ = 0;
  std::unique_ptr<LineReader> reader_;
  const FileEntry* current_ = nullptr;
  uint64_t record_ordinal_ = 0;  // per file
  uint64_t global_ordinal_ = 0;
  std::string line_;
  ReadStats stats_;
};

}  // namespace craft
