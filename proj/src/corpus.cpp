#include "craft/corpus.hpp"

#include <algorithm>
#include <filesystem>

#include "craft/text.hpp"

namespace craft {

namespace fs = std::filesystem;

std::vector<std::string> enumerate_source_files(const CorpusSource& source) {
  const fs::path root(source.path);
  if (!fs::exists(root)) throw IoError("source path does not exist: " + source.path);
  if (fs::is_regular_file(root)) return {source.path};
  if (!fs::is_directory(root)) throw IoError("source path is not a file or directory: " + source.path);

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

DocumentStream::DocumentStream(std::vector<CorpusSource> sources) {
  for (const auto& src : sources) {
    const fs::path root(src.path);
    for (auto& file : enumerate_source_files(src)) {
      FileEntry e;
      e.path = file;
      e.compression = src.compression;
      e.text_field = src.text_field;
      if (fs::is_directory(root)) {
        std::error_code ec;
        const fs::path rel = fs::relative(file, root, ec);
        e.display = ec ? file : rel.generic_string();
      } else {
        e.display = root.filename().generic_string();
      }
      files_.push_back(std::move(e));
    }
  }
}

bool DocumentStream::open_next_file() {
  while (file_index_ < files_.size()) {
    current_ = &files_[file_index_++];
    reader_ = std::make_unique<LineReader>(open_byte_source(current_->path, current_->compression));
    record_ordinal_ = 0;
    return true;
  }
  current_ = nullptr;
  reader_.reset();
  return false;
}

bool DocumentStream::parse_line(const std::string& line, Document& out) {
  if (line.empty()) return false;
  json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (rec.is_discarded() || !rec.is_object()) return false;

  const auto text_it = rec.find(current_->text_field);
  if (text_it == rec.end() || !text_it->is_string()) return false;
  std::string text = text_it->get<std::string>();
  if (!is_valid_utf8(text)) return false;  // never silently truncate

  std::string doc_id;
  for (const char* key : {"doc_id", "id"}) {
    const auto it = rec.find(key);
    if (it != rec.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
      doc_id = it->get<std::string>();
      break;
    }
  }
  if (doc_id.empty()) doc_id = current_->display + "#" + std::to_string(record_ordinal_);

  rec.erase(current_->text_field);
  out.doc_id = std::move(doc_id);
  out.text = std::move(text);
  out.meta = std::move(rec);
  return true;
}

bool DocumentStream::next(Document& out) {
  while (true) {
    if (!reader_ && !open_next_file()) return false;
    if (!reader_->next(line_)) {
      reader_.reset();
      if (!open_next_file()) return false;
      continue;
    }
    stats_.bytes_processed += line_.size() + 1;
    const bool ok = parse_line(line_, out);
    if (ok) {
      out.ordinal = global_ordinal_++;
      ++record_ordinal_;
      ++stats_.documents_read;
      return true;
    }
    ++record_ordinal_;
    ++stats_.documents_skipped;
  }
}

}  // namespace craft
