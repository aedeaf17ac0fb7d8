#include "featprobe/io/manifest.hpp"

#include <map>
#include <set>

#include "featprobe/error.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/io/tensor.hpp"

namespace featprobe::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view split_name(Split split) noexcept {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kSchema, "unknown split '" + std::string(name) + "'");
}

fs::path PairManifest::resolve(const std::string& path) const {
  fs::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::vector<const PairEntry*> PairManifest::split(Split s) const {
  std::vector<const PairEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::kSchema, "manifest schema violation at " + pointer + ": " + what, pointer);
}

std::string require_string(const json& obj, const std::string& key, const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(pointer, "missing required key '" + key + "'");
  if (!it->is_string()) schema_error(pointer + "/" + key, "expected string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const std::string& key,
                                           const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(pointer + "/" + key, "expected string");
  return it->get<std::string>();
}

const std::set<std::string> kEntryKeys = {
    "original_feature_path",   "target_feature_path", "original_image_path",
    "manipulated_image_path",  "manipulation_id",     "sample_id",
    "label",                   "reconstructed_image_path", "target_stack_path",
    "reconstructed_stack_path"};

}  // namespace

PairManifest parse_manifest(const json& doc, fs::path base_dir) {
  if (!doc.is_object()) schema_error("", "manifest must be a JSON object");
  PairManifest m;
  m.base_dir = std::move(base_dir);
  m.backbone = optional_string(doc, "backbone", "");
  m.stage = optional_string(doc, "stage", "");

  auto entries = doc.find("entries");
  if (entries == doc.end()) schema_error("", "missing required key 'entries'");
  if (!entries->is_array()) schema_error("/entries", "expected array");

  std::map<std::string, Split> splits;
  if (auto it = doc.find("splits"); it != doc.end()) {
    if (!it->is_object()) schema_error("/splits", "expected object");
    for (const auto& [id, value] : it->items()) {
      std::string pointer = "/splits/" + id;
      if (!value.is_string()) schema_error(pointer, "expected string");
      try {
        splits[id] = parse_split(value.get<std::string>());
      } catch (const Error&) {
        schema_error(pointer, "split must be one of train|val|test");
      }
    }
  } else if (!entries->empty()) {
    schema_error("", "missing required key 'splits'");
  }

  for (std::size_t i = 0; i < entries->size(); ++i) {
    const json& e = (*entries)[i];
    std::string pointer = "/entries/" + std::to_string(i);
    if (!e.is_object()) schema_error(pointer, "expected object");
    for (const auto& [key, _] : e.items()) {
      if (!kEntryKeys.contains(key)) schema_error(pointer + "/" + key, "unknown key");
    }
    PairEntry entry;
    entry.original_feature_path = require_string(e, "original_feature_path", pointer);
    entry.target_feature_path = require_string(e, "target_feature_path", pointer);
    entry.manipulation_id = require_string(e, "manipulation_id", pointer);
    entry.sample_id = require_string(e, "sample_id", pointer);
    entry.original_image_path = optional_string(e, "original_image_path", pointer);
    entry.manipulated_image_path = optional_string(e, "manipulated_image_path", pointer);
    entry.reconstructed_image_path = optional_string(e, "reconstructed_image_path", pointer);
    entry.target_stack_path = optional_string(e, "target_stack_path", pointer);
    entry.reconstructed_stack_path = optional_string(e, "reconstructed_stack_path", pointer);
    if (auto it = e.find("label"); it != e.end() && !it->is_null()) {
      if (!it->is_number_integer()) schema_error(pointer + "/label", "expected integer");
      entry.label = it->get<int>();
    }
    auto split = splits.find(entry.sample_id);
    if (split == splits.end()) {
      schema_error("/splits", "no split for sample_id '" + entry.sample_id + "'");
    }
    entry.split = split->second;
    m.entries.push_back(std::move(entry));
  }
  return m;
}

PairManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_json(path), path.parent_path());
}

json manifest_to_json(const PairManifest& m) {
  json doc = json::object();
  if (m.backbone) doc["backbone"] = *m.backbone;
  if (m.stage) doc["stage"] = *m.stage;
  json entries = json::array();
  json splits = json::object();
  for (const auto& e : m.entries) {
    json j = {{"original_feature_path", e.original_feature_path},
              {"target_feature_path", e.target_feature_path},
              {"manipulation_id", e.manipulation_id},
              {"sample_id", e.sample_id}};
    if (e.original_image_path) j["original_image_path"] = *e.original_image_path;
    if (e.manipulated_image_path) j["manipulated_image_path"] = *e.manipulated_image_path;
    if (e.label) j["label"] = *e.label;
    if (e.reconstructed_image_path) j["reconstructed_image_path"] = *e.reconstructed_image_path;
    if (e.target_stack_path) j["target_stack_path"] = *e.target_stack_path;
    if (e.reconstructed_stack_path) j["reconstructed_stack_path"] = *e.reconstructed_stack_path;
    entries.push_back(std::move(j));
    splits[e.sample_id] = std::string(split_name(e.split));
  }
  doc["entries"] = std::move(entries);
  doc["splits"] = std::move(splits);
  return doc;
}

void save_manifest(const PairManifest& m, const fs::path& path) {
  write_json_atomic(path, manifest_to_json(m));
}

std::vector<std::string> validate_manifest(const PairManifest& m) {
  std::vector<std::string> violations;
  std::map<Split, std::set<std::string>> seen;
  for (std::size_t k = 0; k < m.entries.size(); ++k) {
    const PairEntry& e = m.entries[k];
    const std::string where = " at entry " + std::to_string(k);
    if (!seen[e.split].insert(e.sample_id).second) {
      violations.push_back("duplicate sample_id '" + e.sample_id + "' in " +
                           std::string(split_name(e.split)) + " split" + where);
    }
    std::optional<Shape> shapes[2];
    const std::string* paths[2] = {&e.original_feature_path, &e.target_feature_path};
    for (int i = 0; i < 2; ++i) {
      fs::path p = m.resolve(*paths[i]);
      if (!fs::exists(p)) {
        violations.push_back("missing file " + p.string() + where);
        continue;
      }
      try {
        shapes[i] = read_npy_shape(p);
      } catch (const Error& err) {
        violations.push_back(std::string(err.what()) + where);
      }
    }
    if (shapes[0] && shapes[1] && *shapes[0] != *shapes[1]) {
      violations.push_back("shape mismatch at entry " + std::to_string(k) + ": " +
                           shape_to_string(*shapes[0]) + " vs " + shape_to_string(*shapes[1]));
    }
    for (const auto& opt : {e.original_image_path, e.manipulated_image_path,
                            e.reconstructed_image_path, e.target_stack_path,
                            e.reconstructed_stack_path}) {
      if (opt && !fs::exists(m.resolve(*opt))) {
        violations.push_back("missing file " + m.resolve(*opt).string() + where);
      }
    }
  }
  return violations;
}

}  // namespace featprobe::io
