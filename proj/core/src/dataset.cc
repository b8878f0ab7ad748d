#include "synbd/dataset.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {

using ordered_json = nlohmann::ordered_json;

Dataset::Dataset(std::vector<LabeledSample> samples, std::vector<std::string> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
  if (samples_.empty()) throw DataError("dataset is empty");
  std::unordered_set<std::string> declared(labels_.begin(), labels_.end());
  if (declared.size() != labels_.size()) throw DataError("duplicate label in label set");
  std::unordered_set<std::string> ids;
  for (const auto& s : samples_) {
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id: " + s.id);
    if (!declared.count(s.label)) throw DataError("unknown label '" + s.label + "' in sample " + s.id);
  }
}

std::size_t Dataset::label_index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("unknown label: " + label);
  return static_cast<std::size_t>(it - labels_.begin());
}

bool Dataset::has_label(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

Dataset Dataset::with_samples(std::vector<LabeledSample> samples) const {
  if (samples.empty()) {
    Dataset d;
    d.labels_ = labels_;
    return d;
  }
  return Dataset(std::move(samples), labels_);
}

Dataset parse_dataset(const std::string& jsonl, const std::vector<std::string>& labels) {
  std::vector<LabeledSample> samples;
  std::set<std::string> observed;
  std::unordered_set<std::string> ids;
  const std::unordered_set<std::string> declared(labels.begin(), labels.end());
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto at = [&](const std::string& why) {
      return DataError("line " + std::to_string(line_no) + ": " + why);
    };
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw at(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw at("expected a JSON object");
    for (const char* key : {"id", "text", "label"}) {
      if (!obj.contains(key)) throw at(std::string("missing \"") + key + "\"");
      if (!obj[key].is_string()) throw at(std::string("\"") + key + "\" must be a string");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.key() != "id" && it.key() != "text" && it.key() != "label" && it.key() != "tree") {
        throw at("unexpected key \"" + it.key() + "\"");
      }
    }
    LabeledSample s;
    s.id = obj["id"].get<std::string>();
    s.text = obj["text"].get<std::string>();
    s.label = obj["label"].get<std::string>();
    if (s.id.empty()) throw at("empty id");
    if (!ids.insert(s.id).second) throw at("duplicate id \"" + s.id + "\"");
    if (!declared.empty() && !declared.count(s.label)) throw at("unknown label \"" + s.label + "\"");
    if (obj.contains("tree") && !obj["tree"].is_null()) {
      if (!obj["tree"].is_string()) throw at("\"tree\" must be a string");
      try {
        s.tree = parse_ptb(obj["tree"].get<std::string>());
      } catch (const ParseError& e) {
        throw at(std::string("bad tree: ") + e.what());
      }
    }
    observed.insert(s.label);
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("dataset has no samples");
  std::vector<std::string> label_set = labels;
  if (label_set.empty()) label_set.assign(observed.begin(), observed.end());
  return Dataset(std::move(samples), std::move(label_set));
}

Dataset load_dataset(const std::filesystem::path& path, const std::vector<std::string>& labels) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read dataset: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_dataset(ss.str(), labels);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset.samples()) {
    ordered_json obj;
    obj["id"] = s.id;
    obj["text"] = s.text;
    obj["label"] = s.label;
    if (s.tree) obj["tree"] = print_ptb(*s.tree);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write dataset: " + path.string());
  f << serialize_dataset(dataset);
  if (!f) throw Error("failed writing dataset: " + path.string());
}

std::vector<std::vector<std::string>> token_corpus(const Dataset& dataset) {
  std::vector<std::vector<std::string>> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples()) out.push_back(tokenize(s.text));
  return out;
}

}  // namespace synbd
