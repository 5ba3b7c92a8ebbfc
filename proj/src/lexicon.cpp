#include "craft/lexicon.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "craft/text.hpp"

namespace craft {

std::string normalize_keyword(std::string_view keyword, const MatchPolicy& policy) {
  NormalizedText nt = normalize_with_map(keyword, policy.case_insensitive);
  return std::move(nt.text);
}

namespace {

bool has_json_extension(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json";
}

std::vector<std::string> read_plain_keywords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError("cannot open lexicon file: " + path);
  std::vector<std::string> keywords;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    keywords.push_back(stripped);
  }
  return keywords;
}

}  // namespace

Lexicon load_lexicon(const std::string& path, const std::string& region_id,
                     const LexiconLoadOptions& options, LexiconLoadReport* report) {
  LexiconLoadReport local;
  LexiconLoadReport& rep = report ? *report : local;

  Lexicon lex;
  std::vector<std::string> raw;

  if (has_json_extension(path)) {
    json doc;
    try {
      doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw LexiconError("lexicon JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("keywords") || !doc["keywords"].is_array())
      throw LexiconError("lexicon JSON must contain a \"keywords\" array: " + path);
    if (doc.contains("case_insensitive")) lex.policy.case_insensitive = doc["case_insensitive"].get<bool>();
    if (doc.contains("word_boundary")) lex.policy.word_boundary = doc["word_boundary"].get<bool>();
    if (doc.contains("region_id") && doc["region_id"].is_string())
      lex.region_id = doc["region_id"].get<std::string>();
    for (const auto& k : doc["keywords"]) {
      if (!k.is_string()) throw LexiconError("non-string keyword in " + path);
      raw.push_back(k.get<std::string>());
    }
  } else {
    raw = read_plain_keywords(path);
  }

  if (!region_id.empty()) lex.region_id = region_id;
  if (lex.region_id.empty())
    throw LexiconError("no region id given for lexicon " + path +
                       " (pass one or use a JSON region file)");

  rep.raw_entries = raw.size();
  if (raw.empty()) throw LexiconError("lexicon file is empty: " + path);

  std::vector<std::string> normalized;
  normalized.reserve(raw.size());
  for (const auto& k : raw) {
    std::string n = normalize_keyword(k, lex.policy);
    if (n.empty()) continue;  // pure-whitespace entries are dropped
    normalized.push_back(std::move(n));
  }
  if (normalized.empty()) throw LexiconError("lexicon has no usable keywords: " + path);

  std::sort(normalized.begin(), normalized.end());
  const auto dup_begin = std::unique(normalized.begin(), normalized.end());
  rep.duplicates_removed = static_cast<size_t>(normalized.end() - dup_begin);
  normalized.erase(dup_begin, normalized.end());
  if (rep.duplicates_removed > 0)
    rep.warnings.push_back(std::to_string(rep.duplicates_removed) +
                           " duplicate keyword(s) removed after normalization in " + path);

  if (normalized.size() < options.min_size) {
    const std::string msg = "lexicon " + path + " has " + std::to_string(normalized.size()) +
                            " keywords, " + std::to_string(options.min_size) + " required (" +
                            std::to_string(options.min_size - normalized.size()) + " short)";
    if (!options.allow_small) throw LexiconError(msg);
    rep.warnings.push_back(msg + "; loaded anyway");
  }

  lex.keywords = std::move(normalized);
  return lex;
}

}  // namespace craft
