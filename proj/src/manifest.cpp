#include "dh/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace dh {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// One parsed key=value plus where it lives, for error messages.
struct Field {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int ordinal = 0;  // 1-based among sections of the same name
  std::vector<Field> fields;
  int line = 0;
};

std::string where(const Section& s) {
  if (s.name == "experiment") return "[experiment] " + std::to_string(s.ordinal);
  return "[" + s.name + "]";
}

long long parse_int(const Section& s, const Field& f) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(f.value, &used);
    if (used != f.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ManifestError(where(s) + " " + f.key + ": expected an integer, got '" + f.value + "'");
  }
}

std::size_t parse_count(const Section& s, const Field& f, bool allow_zero) {
  long long v = parse_int(s, f);
  if (v < 0 || (!allow_zero && v == 0))
    throw ManifestError(where(s) + " " + f.key + ": expected a " +
                        (allow_zero ? "non-negative" : "positive") + " integer, got '" + f.value +
                        "'");
  return static_cast<std::size_t>(v);
}

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  int experiment_count = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ManifestError("line " + std::to_string(line) + ": unterminated section header '" +
                            s + "'");
      std::string name = trim(s.substr(1, s.size() - 2));
      if (name != "dataset" && name != "split" && name != "experiment" && name != "output")
        throw ManifestError("line " + std::to_string(line) + ": unknown section [" + name +
                            "] (want dataset, split, experiment or output)");
      Section sec;
      sec.name = name;
      sec.line = line;
      sec.ordinal = (name == "experiment") ? ++experiment_count : 1;
      sections.push_back(std::move(sec));
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ManifestError("line " + std::to_string(line) + ": expected 'key = value', got '" + s +
                          "'");
    if (sections.empty())
      throw ManifestError("line " + std::to_string(line) + ": key outside any [section]");
    Field f;
    f.key = trim(s.substr(0, eq));
    f.value = trim(s.substr(eq + 1));
    f.line = line;
    if (f.key.empty())
      throw ManifestError("line " + std::to_string(line) + ": empty key");
    sections.back().fields.push_back(std::move(f));
  }
  return sections;
}

void reject_unknown(const Section& s, const std::set<std::string>& known) {
  for (const Field& f : s.fields)
    if (!known.count(f.key))
      throw ManifestError(where(s) + " has no field '" + f.key + "' (line " +
                          std::to_string(f.line) + ")");
}

const Field* find(const Section& s, const std::string& key) {
  const Field* hit = nullptr;
  for (const Field& f : s.fields) {
    if (f.key != key) continue;
    if (hit)
      throw ManifestError(where(s) + " " + key + ": duplicated (lines " +
                          std::to_string(hit->line) + " and " + std::to_string(f.line) + ")");
    hit = &f;
  }
  return hit;
}

std::string require(const Section& s, const std::string& key) {
  const Field* f = find(s, key);
  if (!f || f->value.empty())
    throw ManifestError(where(s) + " " + key + ": required field is missing");
  return f->value;
}

DatasetConfig parse_dataset(const Section& s) {
  reject_unknown(s, {"type", "name", "train_images", "train_labels", "test_images", "test_labels",
                     "csv", "label_column", "header"});
  DatasetConfig d;
  d.type = require(s, "type");
  if (d.type != "image" && d.type != "numeric")
    throw ManifestError("[dataset] type: expected 'image' or 'numeric', got '" + d.type + "'");
  d.name = require(s, "name");
  if (d.type == "image") {
    for (const char* k : {"csv", "label_column", "header"})
      if (find(s, k))
        throw ManifestError(std::string("[dataset] ") + k + ": not a field of image datasets");
    d.train_images = require(s, "train_images");
    d.train_labels = require(s, "train_labels");
    const Field* ti = find(s, "test_images");
    const Field* tl = find(s, "test_labels");
    if (static_cast<bool>(ti) != static_cast<bool>(tl))
      throw ManifestError("[dataset] test_images/test_labels: provide both or neither");
    if (ti) {
      d.test_images = ti->value;
      d.test_labels = tl->value;
    }
  } else {
    for (const char* k : {"train_images", "train_labels", "test_images", "test_labels"})
      if (find(s, k))
        throw ManifestError(std::string("[dataset] ") + k + ": not a field of numeric datasets");
    d.csv = require(s, "csv");
    if (const Field* f = find(s, "label_column")) {
      if (f->value == "last") {
        d.label_column = -1;
      } else {
        long long v = parse_int(s, *f);
        if (v < 0)
          throw ManifestError("[dataset] label_column: expected a column index or 'last', got '" +
                              f->value + "'");
        d.label_column = static_cast<int>(v);
      }
    }
    if (const Field* f = find(s, "header")) {
      if (f->value == "true")
        d.header = true;
      else if (f->value == "false")
        d.header = false;
      else
        throw ManifestError("[dataset] header: expected 'true' or 'false', got '" + f->value +
                            "'");
    }
  }
  return d;
}

SplitConfig parse_split(const Section& s, const DatasetConfig& d) {
  reject_unknown(s, {"train", "val", "test", "strategy"});
  SplitConfig sp;
  const Field* tr = find(s, "train");
  const Field* va = find(s, "val");
  const Field* te = find(s, "test");
  if (!tr) throw ManifestError("[split] train: required field is missing");
  if (!va) throw ManifestError("[split] val: required field is missing");
  sp.train_count = parse_count(s, *tr, false);
  sp.val_count = parse_count(s, *va, false);
  if (d.has_test_files()) {
    sp.test_count = te ? parse_count(s, *te, true) : 0;  // 0 = the whole test file
  } else {
    if (!te)
      throw ManifestError("[split] test: required field is missing (no predefined test files)");
    sp.test_count = parse_count(s, *te, false);
  }
  if (const Field* f = find(s, "strategy")) {
    if (f->value == "shuffled")
      sp.strategy = SplitStrategy::Shuffled;
    else if (f->value == "given-order")
      sp.strategy = SplitStrategy::GivenOrder;
    else
      throw ManifestError("[split] strategy: expected 'shuffled' or 'given-order', got '" +
                          f->value + "'");
  }
  return sp;
}

ExperimentConfig parse_experiment(const Section& s) {
  reject_unknown(s, {"family", "architecture", "epochs", "seeds"});
  ExperimentConfig e;
  std::string fam = require(s, "family");
  try {
    e.family = family_from_name(fam);
  } catch (const std::exception& ex) {
    throw ManifestError(where(s) + " family: " + ex.what());
  }
  const Field* arch = find(s, "architecture");
  const Field* epochs = find(s, "epochs");
  if (family_needs_network(e.family)) {
    if (!arch)
      throw ManifestError(where(s) + ": family " + fam + " requires an architecture id (1-7)");
    long long id = parse_int(s, *arch);
    if (id < 1 || id > 7)
      throw ManifestError(where(s) + " architecture: expected 1..7, got '" + arch->value + "'");
    e.architecture = static_cast<int>(id);
    e.epochs = {2, 5, 10, 20};
    if (epochs) {
      e.epochs.clear();
      for (const std::string& item : split_list(epochs->value)) {
        Field fake{"epochs", item, epochs->line};
        long long v = parse_int(s, fake);
        if (v < 1)
          throw ManifestError(where(s) + " epochs: expected positive integers, got '" + item +
                              "'");
        e.epochs.push_back(static_cast<int>(v));
      }
      if (e.epochs.empty()) throw ManifestError(where(s) + " epochs: empty list");
    }
  } else {
    if (arch)
      throw ManifestError(where(s) + ": family " + fam + " takes no architecture");
    if (epochs)
      throw ManifestError(where(s) + ": family " + fam + " takes no epochs");
    e.epochs = {0};
  }
  if (const Field* seeds = find(s, "seeds")) {
    e.seeds.clear();
    for (const std::string& item : split_list(seeds->value)) {
      Field fake{"seeds", item, seeds->line};
      long long v = parse_int(s, fake);
      if (v < 0)
        throw ManifestError(where(s) + " seeds: expected non-negative integers, got '" + item +
                            "'");
      e.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (e.seeds.empty()) throw ManifestError(where(s) + " seeds: empty list");
  }
  return e;
}

OutputConfig parse_output(const Section& s) {
  reject_unknown(s, {"directory", "aggregation"});
  OutputConfig o;
  if (const Field* f = find(s, "directory")) o.directory = f->value;
  if (o.directory.empty()) throw ManifestError("[output] directory: must not be empty");
  if (const Field* f = find(s, "aggregation")) {
    if (f->value == "peak")
      o.aggregation = Aggregation::Peak;
    else if (f->value == "per-run")
      o.aggregation = Aggregation::PerRun;
    else
      throw ManifestError("[output] aggregation: expected 'peak' or 'per-run', got '" + f->value +
                          "'");
  }
  return o;
}

}  // namespace

RunManifest parse_manifest_text(const std::string& text) {
  std::vector<Section> sections = tokenize(text);
  RunManifest m;
  const Section* dataset = nullptr;
  const Section* split = nullptr;
  const Section* output = nullptr;
  std::vector<const Section*> experiments;
  for (const Section& s : sections) {
    if (s.name == "dataset") {
      if (dataset) throw ManifestError("[dataset]: section appears twice");
      dataset = &s;
    } else if (s.name == "split") {
      if (split) throw ManifestError("[split]: section appears twice");
      split = &s;
    } else if (s.name == "output") {
      if (output) throw ManifestError("[output]: section appears twice");
      output = &s;
    } else {
      experiments.push_back(&s);
    }
  }
  if (!dataset) throw ManifestError("[dataset]: section is missing");
  if (!split) throw ManifestError("[split]: section is missing");
  if (experiments.empty()) throw ManifestError("[experiment]: at least one section is required");
  m.dataset = parse_dataset(*dataset);
  m.split = parse_split(*split, m.dataset);
  for (const Section* s : experiments) m.experiments.push_back(parse_experiment(*s));
  if (output) m.output = parse_output(*output);
  validate_manifest(m);
  return m;
}

RunManifest parse_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_text(ss.str());
}

void validate_manifest(const RunManifest& m) {
  const DatasetConfig& d = m.dataset;
  if (d.type != "image" && d.type != "numeric")
    throw ManifestError("[dataset] type: expected 'image' or 'numeric', got '" + d.type + "'");
  if (d.name.empty()) throw ManifestError("[dataset] name: required field is missing");
  if (d.type == "image" && (d.train_images.empty() || d.train_labels.empty()))
    throw ManifestError("[dataset] train_images/train_labels: required for image datasets");
  if (d.type == "numeric" && d.csv.empty())
    throw ManifestError("[dataset] csv: required for numeric datasets");
  if (m.split.train_count == 0) throw ManifestError("[split] train: must be positive");
  if (m.split.val_count == 0) throw ManifestError("[split] val: must be positive");
  if (m.split.test_count == 0 && !d.has_test_files())
    throw ManifestError("[split] test: must be positive (no predefined test files)");
  if (m.experiments.empty())
    throw ManifestError("[experiment]: at least one section is required");
  for (std::size_t i = 0; i < m.experiments.size(); ++i) {
    const ExperimentConfig& e = m.experiments[i];
    std::string tag = "[experiment] " + std::to_string(i + 1);
    bool needs_net = family_needs_network(e.family);
    if (needs_net && !e.architecture)
      throw ManifestError(tag + ": family " + family_name(e.family) +
                          " requires an architecture id (1-7)");
    if (!needs_net && e.architecture)
      throw ManifestError(tag + ": family " + family_name(e.family) + " takes no architecture");
    if (e.architecture && (*e.architecture < 1 || *e.architecture > 7))
      throw ManifestError(tag + " architecture: expected 1..7");
    if (e.epochs.empty()) throw ManifestError(tag + " epochs: empty list");
    for (int ep : e.epochs)
      if (needs_net ? ep < 1 : ep != 0)
        throw ManifestError(tag + " epochs: invalid value " + std::to_string(ep));
    if (e.seeds.empty()) throw ManifestError(tag + " seeds: empty list");
  }
  if (m.output.directory.empty())
    throw ManifestError("[output] directory: must not be empty");
}

}  // namespace dh
