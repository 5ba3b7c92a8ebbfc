#include "craft/mixer.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "craft/generate.hpp"
#include "craft/text.hpp"

namespace craft {

namespace fs = std::filesystem;

json MixSpec::to_json() const {
  return json{{"general_source", general_source},
              {"cultural_source", cultural_source},
              {"general_count", general_count},
              {"cultural_count", cultural_count},
              {"seed", seed},
              {"shuffle_output", shuffle_output},
              {"allow_short", allow_short}};
}

MixSpec MixSpec::from_json(const json& j) {
  MixSpec spec;
  if (!j.is_object()) throw MixError("mix spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "general_source") spec.general_source = value.get<std::string>();
    else if (key == "cultural_source") spec.cultural_source = value.get<std::string>();
    else if (key == "general_count") spec.general_count = value.get<uint64_t>();
    else if (key == "cultural_count") spec.cultural_count = value.get<uint64_t>();
    else if (key == "seed") spec.seed = value.get<uint64_t>();
    else if (key == "shuffle_output") spec.shuffle_output = value.get<bool>();
    else if (key == "allow_short") spec.allow_short = value.get<bool>();
    else if (key == "output_path") spec.output_path = value.get<std::string>();
    else throw MixError("unknown mix spec key: " + key);
  }
  return spec;
}

json MixManifest::to_json() const {
  return json{{"spec", spec.to_json()},
              {"actual_general", actual_general},
              {"actual_cultural", actual_cultural},
              {"output_path", output_path},
              {"content_digest", content_digest},
              {"created_at", created_at}};
}

std::mt19937_64 make_rng(uint64_t seed, uint64_t stream_tag) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream_tag)));
}

std::vector<uint64_t> sample_prefix(uint64_t pool_size, uint64_t k, std::mt19937_64& rng) {
  k = std::min(k, pool_size);
  std::vector<uint64_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (uint64_t i = 0; i < k; ++i) {
    const uint64_t j = i + bounded_rand(rng, pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

ExportFormat export_format_from_name(std::string_view name) {
  if (name == "chat_jsonl") return ExportFormat::chat_jsonl;
  if (name == "prompt_completion") return ExportFormat::prompt_completion;
  throw MixError("unknown export format: " + std::string(name));
}

namespace {

bool is_chat_record(const json& record) {
  return record.is_object() && record.contains("conversations") &&
         record["conversations"].is_array();
}

bool is_instruction_record(const json& record) {
  return record.is_object() && record.contains("question") && record.contains("answer");
}

json instruction_meta(const json& record) {
  json meta = json::object();
  for (const char* key : {"record_id", "region_id", "answer_mode", "source", "generator"}) {
    if (record.contains(key)) meta[key] = record[key];
  }
  return meta;
}

}  // namespace

json convert_record(const json& record, ExportFormat target) {
  if (target == ExportFormat::chat_jsonl) {
    if (is_chat_record(record)) return record;
    if (is_instruction_record(record)) {
      json out;
      out["conversations"] = json::array(
          {{{"from", "human"}, {"value", record["question"]}},
           {{"from", "gpt"}, {"value", record["answer"]}}});
      out["meta"] = instruction_meta(record);
      return out;
    }
    throw MixError("record is neither chat format nor an instruction record");
  }

  // prompt_completion
  std::string prompt;
  std::string completion;
  if (is_instruction_record(record)) {
    prompt = record["question"].get<std::string>();
    completion = record["answer"].get<std::string>();
  } else if (is_chat_record(record)) {
    for (const auto& turn : record["conversations"]) {
      const std::string from = turn.value("from", "");
      if (from == "human" && prompt.empty()) prompt = turn.value("value", "");
      if (from == "gpt" && completion.empty()) completion = turn.value("value", "");
    }
    if (prompt.empty() && completion.empty())
      throw MixError("chat record has no human/gpt turns");
  } else {
    throw MixError("record is neither chat format nor an instruction record");
  }
  json out{{"prompt", prompt}, {"completion", completion}};
  if (is_instruction_record(record)) out["meta"] = instruction_meta(record);
  return out;
}

std::pair<std::string, std::string> extract_qa(const json& record) {
  if (is_chat_record(record)) {
    std::string q;
    std::string a;
    for (const auto& turn : record["conversations"]) {
      const std::string from = turn.value("from", "");
      if (from == "human" && q.empty()) q = turn.value("value", "");
      if (from == "gpt" && a.empty()) a = turn.value("value", "");
    }
    return {q, a};
  }
  if (record.contains("prompt")) return {record.value("prompt", ""), record.value("completion", "")};
  if (is_instruction_record(record))
    return {record["question"].get<std::string>(), record["answer"].get<std::string>()};
  throw MixError("cannot extract a question/answer pair from record");
}

namespace {

// Pass 1: count and schema-check every line; reports the first bad line.
uint64_t count_and_validate(const std::string& path) {
  LineReader reader(open_byte_source(path));
  std::string line;
  uint64_t count = 0;
  while (reader.next(line)) {
    ++count;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() ||
        (!is_chat_record(rec) && !is_instruction_record(rec)))
      throw MixError("schema mismatch in " + path + " at line " + std::to_string(count));
  }
  return count;
}

// Pass 2: pick the records at `sorted_indices` (ascending line numbers).
std::vector<json> pick_lines(const std::string& path, const std::vector<uint64_t>& sorted_indices) {
  std::vector<json> out;
  out.reserve(sorted_indices.size());
  if (sorted_indices.empty()) return out;
  LineReader reader(open_byte_source(path));
  std::string line;
  uint64_t lineno = 0;
  size_t want = 0;
  while (want < sorted_indices.size() && reader.next(line)) {
    if (lineno == sorted_indices[want]) {
      out.push_back(json::parse(line));
      ++want;
    }
    ++lineno;
  }
  if (want != sorted_indices.size()) throw MixError("pool shrank while reading " + path);
  return out;
}

uint64_t check_pool(const std::string& which, uint64_t requested, uint64_t pool,
                    bool allow_short) {
  if (requested <= pool) return requested;
  if (!allow_short)
    throw MixError(which + " pool too small: requested " + std::to_string(requested) + ", have " +
                   std::to_string(pool) + " (short by " + std::to_string(requested - pool) + ")");
  return pool;
}

}  // namespace

MixManifest mix_datasets(const MixSpec& spec) {
  if (spec.output_path.empty()) throw MixError("output_path is required");

  const uint64_t general_pool =
      spec.general_source.empty() ? 0 : count_and_validate(spec.general_source);
  const uint64_t cultural_pool =
      spec.cultural_source.empty() ? 0 : count_and_validate(spec.cultural_source);

  const uint64_t n_general = check_pool("general", spec.general_count, general_pool, spec.allow_short);
  const uint64_t n_cultural =
      check_pool("cultural", spec.cultural_count, cultural_pool, spec.allow_short);

  auto rng_general = make_rng(spec.seed, kGeneralDrawTag);
  auto rng_cultural = make_rng(spec.seed, kCulturalDrawTag);
  std::vector<uint64_t> general_idx = sample_prefix(general_pool, n_general, rng_general);
  std::vector<uint64_t> cultural_idx = sample_prefix(cultural_pool, n_cultural, rng_cultural);
  std::sort(general_idx.begin(), general_idx.end());
  std::sort(cultural_idx.begin(), cultural_idx.end());

  std::vector<json> records;
  records.reserve(n_general + n_cultural);
  for (json& rec : pick_lines(spec.general_source, general_idx)) {
    json out = convert_record(rec, ExportFormat::chat_jsonl);
    out["meta"]["origin"] = "general";
    records.push_back(std::move(out));
  }
  for (json& rec : pick_lines(spec.cultural_source, cultural_idx)) {
    json out = convert_record(rec, ExportFormat::chat_jsonl);
    out["meta"]["origin"] = "cultural";
    records.push_back(std::move(out));
  }

  if (spec.shuffle_output) {
    auto rng_shuffle = make_rng(spec.seed, kShuffleDrawTag);
    for (size_t i = records.size(); i > 1; --i) {
      const uint64_t j = bounded_rand(rng_shuffle, i);
      std::swap(records[i - 1], records[j]);
    }
  }

  Fnv128 digest;
  JsonlWriter writer(spec.output_path);
  for (const json& rec : records) {
    const std::string line = rec.dump();
    digest.update(line);
    digest.update("\n");
    writer.write_raw(line);
  }
  writer.close();

  MixManifest manifest;
  manifest.spec = spec;
  manifest.actual_general = n_general;
  manifest.actual_cultural = n_cultural;
  manifest.output_path = spec.output_path;
  manifest.content_digest = "fnv1a128:" + digest.hex();
  manifest.created_at = iso8601_utc_now();
  write_file(spec.output_path + ".manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::vector<MixManifest> ratio_sweep(const MixSpec& base, uint64_t step, uint64_t max_cultural,
                                     const std::string& out_dir) {
  if (step < 1) throw MixError("sweep step must be >= 1");
  fs::create_directories(out_dir);
  std::vector<MixManifest> manifests;
  json sweep_index = json::array();
  for (uint64_t c = 0;; c += step) {
    MixSpec spec = base;
    spec.cultural_count = c;
    spec.output_path =
        (fs::path(out_dir) /
         ("mix_g" + std::to_string(base.general_count) + "_c" + std::to_string(c) + ".jsonl"))
            .string();
    manifests.push_back(mix_datasets(spec));
    sweep_index.push_back(manifests.back().to_json());
    if (c + step > max_cultural) break;
  }
  write_file((fs::path(out_dir) / "sweep_manifest.json").string(), sweep_index.dump(2) + "\n");
  return manifests;
}

}  // namespace craft
