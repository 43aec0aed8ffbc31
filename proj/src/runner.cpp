#include "dh/runner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "dh/pipeline.hpp"

namespace dh {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<const char*, 5> kFamilyRows = {"NN", "SVM", "KNN", "NN/SVM", "NN/KNN"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Accuracy as a percent rounded to 2 decimals; every report format goes
// through this one value so text, csv and json always agree.
double round_pct(double acc) { return std::round(acc * 10000.0) / 100.0; }

std::string pct_str(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_pct(acc));
  return buf;
}

// Code points, not bytes, so the em-dash pads like one column.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace

std::vector<Cell> enumerate_cells(const RunManifest& m) {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < m.experiments.size(); ++i) {
    const ExperimentConfig& e = m.experiments[i];
    for (int epochs : e.epochs)
      for (std::uint64_t seed : e.seeds)
        cells.push_back({i, e.family, e.architecture, epochs, seed});
  }
  return cells;
}

std::string cell_id(const RunManifest& m, const Cell& c) {
  std::ostringstream key;
  key << m.dataset.name << '|' << m.split.train_count << '|' << m.split.val_count << '|'
      << m.split.test_count << '|'
      << (m.split.strategy == SplitStrategy::Shuffled ? "shuffled" : "given-order") << '|'
      << family_name(c.family) << '|'
      << (c.architecture ? std::to_string(*c.architecture) : "-") << '|' << c.epochs << '|'
      << c.seed;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key.str())));
  return buf;
}

namespace {

struct PreparedData {
  Dataset base;
  std::optional<Dataset> test_base;  // predefined test files, in given order
};

PreparedData prepare_dataset(const RunManifest& m) {
  PreparedData p;
  if (m.dataset.type == "image") {
    p.base = load_idx(m.dataset.train_images, m.dataset.train_labels);
    if (m.dataset.has_test_files()) {
      p.test_base = load_idx(m.dataset.test_images, m.dataset.test_labels);
      int cc = std::max(p.base.class_count, p.test_base->class_count);
      p.base.class_count = cc;
      p.test_base->class_count = cc;
      p.test_base->name = m.dataset.name + "/test";
    }
  } else {
    p.base = load_csv(m.dataset.csv, m.dataset.label_column, m.dataset.header);
  }
  p.base.name = m.dataset.name;
  return p;
}

void check_counts(const RunManifest& m, const PreparedData& p) {
  std::size_t need =
      m.split.train_count + m.split.val_count + (p.test_base ? 0 : m.split.test_count);
  if (need > p.base.size())
    throw std::runtime_error("split needs " + std::to_string(need) + " rows but '" +
                             m.dataset.name + "' has " + std::to_string(p.base.size()));
  if (p.test_base && m.split.test_count > p.test_base->size())
    throw std::runtime_error("split asks for " + std::to_string(m.split.test_count) +
                             " test rows but the test file has " +
                             std::to_string(p.test_base->size()));
}

Dataset head_rows(const Dataset& ds, std::size_t k) {
  std::vector<std::size_t> shape = ds.features.shape;
  shape[0] = k;
  std::size_t dim = ds.sample_dim();
  Dataset out;
  out.features =
      Tensor(std::move(shape),
             std::vector<double>(ds.features.data.begin(),
                                 ds.features.data.begin() + static_cast<std::ptrdiff_t>(k * dim)));
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(k));
  out.class_count = ds.class_count;
  out.name = ds.name;
  return out;
}

ExperimentResult execute_cell(const RunManifest& m, const PreparedData& p, const Cell& cell) {
  SplitSpec sp;
  sp.train_count = m.split.train_count;
  sp.val_count = m.split.val_count;
  sp.test_count = p.test_base ? 0 : m.split.test_count;
  sp.seed = cell.seed;
  sp.strategy = m.split.strategy;
  Splits parts = split(p.base, sp);
  if (p.test_base) {
    std::size_t want = m.split.test_count ? m.split.test_count : p.test_base->size();
    parts.test = head_rows(*p.test_base, want);
  }

  NormalizationMode mode =
      m.dataset.type == "image" ? NormalizationMode::Image : NormalizationMode::ZScore;
  NormalizationStats stats = normalize_fit(parts.train, mode);
  parts.train = normalize_apply(stats, parts.train);
  parts.val = normalize_apply(stats, parts.val);
  parts.test = normalize_apply(stats, parts.test);
  AuditedSplits data(std::move(parts), m.dataset.name);

  switch (cell.family) {
    case Family::NN:
      return run_network_baseline(*cell.architecture, data, cell.epochs, cell.seed);
    case Family::SVM:
    case Family::KNN:
      return run_baseline_classifier(cell.family, data, cell.seed);
    case Family::NN_SVM:
      return run_hybrid(*cell.architecture, Family::SVM, data, cell.epochs, cell.seed);
    case Family::NN_KNN:
      return run_hybrid(*cell.architecture, Family::KNN, data, cell.epochs, cell.seed);
  }
  throw std::runtime_error("bad family");
}

std::string result_line(const std::string& id, const ExperimentResult& r) {
  ordered_json j;
  j["schema_version"] = 1;
  j["cell_id"] = id;
  j["model_family"] = r.model_family;
  if (r.architecture_id)
    j["architecture_id"] = *r.architecture_id;
  else
    j["architecture_id"] = nullptr;
  j["epochs"] = r.epochs;
  if (r.chosen_hyper)
    j["chosen_hyper"] = *r.chosen_hyper;
  else
    j["chosen_hyper"] = nullptr;
  j["test_accuracy"] = r.test_accuracy;
  j["seed"] = r.seed;
  j["dataset_name"] = r.dataset_name;
  return j.dump();
}

struct ExistingScan {
  std::vector<std::pair<std::string, std::string>> records;  // (cell_id, line)
  std::uintmax_t keep_bytes = 0;
  bool exists = false;
};

// Reads back an earlier results file. Scanning stops at the first incomplete
// or unparseable line -- a crash can only tear the tail we were appending, so
// everything before it is trustworthy.
ExistingScan scan_results(const std::string& path) {
  ExistingScan s;
  std::ifstream in(path, std::ios::binary);
  if (!in) return s;
  s.exists = true;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t off = 0;
  while (off < text.size()) {
    std::size_t nl = text.find('\n', off);
    if (nl == std::string::npos) break;  // incomplete final line
    std::string line = text.substr(off, nl - off);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("cell_id") ||
        !j["cell_id"].is_string() || j.value("schema_version", 0) != 1)
      break;
    s.records.emplace_back(j["cell_id"].get<std::string>(), std::move(line));
    off = nl + 1;
    s.keep_bytes = off;
  }
  return s;
}

enum class SlotState { Pending, Skip, Cached, Fresh, Failed };

struct Slot {
  SlotState state = SlotState::Pending;
  std::string line;
  std::string error;
  double wall_time = 0.0;
  double accuracy = 0.0;
};

}  // namespace

RunOutcome run_manifest(const RunManifest& m, int jobs, std::ostream* log) {
  validate_manifest(m);
  if (jobs < 1) jobs = 1;
  fs::create_directories(m.output.directory);
  const std::string results_path = m.output.directory + "/results.jsonl";
  const std::string timings_path = m.output.directory + "/timings.jsonl";
  const std::string failures_path = m.output.directory + "/failures.jsonl";

  PreparedData data = prepare_dataset(m);
  check_counts(m, data);

  std::vector<Cell> cells = enumerate_cells(m);
  std::vector<std::string> ids(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) ids[i] = cell_id(m, cells[i]);

  // Resume: when the existing records are an in-order prefix of this run's
  // cells, keep the bytes and append. Otherwise (earlier failures left holes,
  // or the file belongs to another manifest) rewrite in order, reusing every
  // line we can so finished cells are still never recomputed.
  ExistingScan scan = scan_results(results_path);
  bool prefix_mode = scan.records.size() <= ids.size();
  for (std::size_t j = 0; prefix_mode && j < scan.records.size(); ++j)
    if (scan.records[j].first != ids[j]) prefix_mode = false;

  std::size_t done_prefix = 0;
  std::map<std::string, const std::string*> cache;
  std::ofstream results;
  if (prefix_mode) {
    done_prefix = scan.records.size();
    if (scan.exists && fs::file_size(results_path) != scan.keep_bytes)
      fs::resize_file(results_path, scan.keep_bytes);
    results.open(results_path, std::ios::binary | std::ios::app);
  } else {
    if (log)
      *log << "results.jsonl is not an in-order prefix of this manifest; rewriting in order\n";
    for (const auto& [id, line] : scan.records) cache.emplace(id, &line);
    results.open(results_path, std::ios::binary | std::ios::trunc);
  }
  if (!results) throw std::runtime_error("cannot write '" + results_path + "'");
  std::ofstream timings(timings_path, std::ios::binary | std::ios::app);
  std::ofstream failures(failures_path, std::ios::binary | std::ios::trunc);

  std::vector<Slot> slots(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (prefix_mode && i < done_prefix) {
      slots[i].state = SlotState::Skip;
    } else if (!prefix_mode) {
      auto it = cache.find(ids[i]);
      if (it != cache.end()) {
        slots[i].state = SlotState::Cached;
        slots[i].line = *it->second;
      }
    }
  }

  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      {
        std::lock_guard<std::mutex> lk(mu);
        if (slots[i].state != SlotState::Pending) continue;  // pre-resolved
      }
      SlotState st;
      std::string line, err;
      double wall = 0.0, acc = 0.0;
      try {
        ExperimentResult r = execute_cell(m, data, cells[i]);
        wall = r.wall_time;
        acc = r.test_accuracy;
        line = result_line(ids[i], r);
        st = SlotState::Fresh;
      } catch (const std::exception& e) {
        err = e.what();
        st = SlotState::Failed;
      }
      {
        std::lock_guard<std::mutex> lk(mu);
        slots[i].line = std::move(line);
        slots[i].error = std::move(err);
        slots[i].wall_time = wall;
        slots[i].accuracy = acc;
        slots[i].state = st;
      }
      cv.notify_all();
    }
  };

  std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);

  // Commit in enumeration order whatever the workers' scheduling.
  RunOutcome out;
  out.total = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return slots[i].state != SlotState::Pending; });
    lk.unlock();
    Slot& slot = slots[i];

    if (log) {
      *log << "[" << (i + 1) << "/" << cells.size() << "] " << ids[i] << " "
           << family_name(cells[i].family);
      if (cells[i].architecture) *log << " arch=" << *cells[i].architecture;
      if (family_needs_network(cells[i].family)) *log << " epochs=" << cells[i].epochs;
      *log << " seed=" << cells[i].seed;
    }
    switch (slot.state) {
      case SlotState::Skip:
        ++out.skipped;
        if (log) *log << "  skipped (already recorded)\n";
        break;
      case SlotState::Cached:
        results << slot.line << '\n';
        results.flush();
        ++out.skipped;
        if (log) *log << "  skipped (already recorded)\n";
        break;
      case SlotState::Fresh: {
        results << slot.line << '\n';
        results.flush();
        ordered_json t;
        t["cell_id"] = ids[i];
        t["wall_time"] = slot.wall_time;
        timings << t.dump() << '\n';
        timings.flush();
        ++out.computed;
        if (log) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "  acc=%s%% (%.1fs)\n", pct_str(slot.accuracy).c_str(),
                        slot.wall_time);
          *log << buf;
        }
        break;
      }
      case SlotState::Failed: {
        ordered_json f;
        f["cell_id"] = ids[i];
        f["model_family"] = family_name(cells[i].family);
        if (cells[i].architecture)
          f["architecture_id"] = *cells[i].architecture;
        else
          f["architecture_id"] = nullptr;
        f["epochs"] = cells[i].epochs;
        f["seed"] = cells[i].seed;
        f["dataset_name"] = m.dataset.name;
        f["error"] = slot.error;
        failures << f.dump() << '\n';
        failures.flush();
        ++out.failed;
        if (log) *log << "  FAILED: " << slot.error << "\n";
        break;
      }
      case SlotState::Pending:
        break;  // unreachable
    }
  }
  for (std::thread& th : pool) th.join();
  results.close();
  timings.close();
  failures.close();

  std::vector<ResultRecord> records = load_results(results_path);
  if (!records.empty()) {
    std::string report = m.output.aggregation == Aggregation::Peak
                             ? render_report(records, ReportFormat::Text)
                             : render_per_run(records);
    std::ofstream rep(m.output.directory + "/report.txt", std::ios::binary);
    rep << report;
    write_plot_series(records, m.output.directory + "/plots");
  }

  out.exit_code = out.failed ? 1 : 0;
  if (log)
    *log << out.total << " cells: " << out.computed << " computed, " << out.skipped
         << " skipped, " << out.failed << " failed\n";
  return out;
}

std::vector<ResultRecord> load_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open results file '" + path + "'");
  std::vector<ResultRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string at = path + " line " + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
      throw std::runtime_error(at + ": not a JSON record");
    try {
      if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported schema_version");
      ResultRecord r;
      r.cell_id = j.at("cell_id").get<std::string>();
      r.model_family = j.at("model_family").get<std::string>();
      if (!j.at("architecture_id").is_null())
        r.architecture_id = j.at("architecture_id").get<int>();
      r.epochs = j.at("epochs").get<int>();
      if (!j.at("chosen_hyper").is_null()) r.chosen_hyper = j.at("chosen_hyper").get<double>();
      r.test_accuracy = j.at("test_accuracy").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.dataset_name = j.at("dataset_name").get<std::string>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(at + ": " + e.what());
    }
  }
  return out;
}

std::string render_report(const std::vector<ResultRecord>& records, ReportFormat format) {
  if (records.empty()) throw std::runtime_error("report: no results");
  std::set<std::string> names;
  for (const ResultRecord& r : records) names.insert(r.dataset_name);
  std::vector<std::string> datasets(names.begin(), names.end());

  std::map<std::pair<std::string, std::string>, double> peak;
  for (const ResultRecord& r : records) {
    auto key = std::make_pair(r.model_family, r.dataset_name);
    auto it = peak.find(key);
    if (it == peak.end() || r.test_accuracy > it->second) peak[key] = r.test_accuracy;
  }
  auto cell = [&](const char* family, const std::string& ds) -> const double* {
    auto it = peak.find({family, ds});
    return it == peak.end() ? nullptr : &it->second;
  };

  if (format == ReportFormat::Json) {
    ordered_json j;
    j["rows"] = kFamilyRows;
    j["columns"] = datasets;
    ordered_json cells = ordered_json::object();
    for (const char* family : kFamilyRows) {
      ordered_json row = ordered_json::object();
      for (const std::string& ds : datasets) {
        const double* v = cell(family, ds);
        if (v)
          row[ds] = round_pct(*v);
        else
          row[ds] = nullptr;
      }
      cells[family] = std::move(row);
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
  }

  if (format == ReportFormat::Csv) {
    std::ostringstream outs;
    outs << "model";
    for (const std::string& ds : datasets) outs << ',' << ds;
    outs << '\n';
    for (const char* family : kFamilyRows) {
      outs << family;
      for (const std::string& ds : datasets) {
        outs << ',';
        if (const double* v = cell(family, ds)) outs << pct_str(*v);
      }
      outs << '\n';
    }
    return outs.str();
  }

  // text
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> head = {"model"};
  head.insert(head.end(), datasets.begin(), datasets.end());
  table.push_back(head);
  for (const char* family : kFamilyRows) {
    std::vector<std::string> row = {family};
    for (const std::string& ds : datasets) {
      const double* v = cell(family, ds);
      row.push_back(v ? pct_str(*v) + "%" : "—");
    }
    table.push_back(row);
  }
  std::vector<std::size_t> widths(table[0].size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], display_width(row[c]));
  std::ostringstream outs;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      outs << row[c];
      if (c + 1 < row.size())
        outs << std::string(widths[c] - display_width(row[c]) + 2, ' ');
    }
    outs << '\n';
  }
  return outs.str();
}

std::string render_per_run(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw std::runtime_error("report: no results");
  std::ostringstream outs;
  for (const ResultRecord& r : records) {
    outs << r.cell_id << "  " << r.dataset_name << "  " << r.model_family;
    if (r.architecture_id) outs << "  arch=" << *r.architecture_id;
    if (r.epochs > 0) outs << "  epochs=" << r.epochs;
    outs << "  seed=" << r.seed;
    if (r.chosen_hyper) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", *r.chosen_hyper);
      outs << "  hyper=" << buf;
    }
    outs << "  acc=" << pct_str(r.test_accuracy) << "%\n";
  }
  return outs.str();
}

std::vector<std::string> write_plot_series(const std::vector<ResultRecord>& records,
                                           const std::string& directory) {
  // (dataset, family, arch) -> epoch -> seed -> accuracy
  std::map<std::tuple<std::string, std::string, int>,
           std::map<int, std::map<std::uint64_t, double>>>
      groups;
  for (const ResultRecord& r : records) {
    int arch = r.architecture_id ? *r.architecture_id : -1;
    groups[{r.dataset_name, r.model_family, arch}][r.epochs][r.seed] = r.test_accuracy;
  }
  fs::create_directories(directory);
  std::vector<std::string> paths;
  for (const auto& [key, epochs] : groups) {
    const auto& [dataset, family, arch] = key;
    std::set<std::uint64_t> seeds;
    for (const auto& [ep, per_seed] : epochs)
      for (const auto& [seed, acc] : per_seed) seeds.insert(seed);

    std::string fname = dataset + "_" + family;
    if (arch >= 0) fname += "_arch" + std::to_string(arch);
    std::replace(fname.begin(), fname.end(), '/', '-');
    std::string path = directory + "/" + fname + ".csv";

    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw std::runtime_error("cannot write '" + path + "'");
    outf << "epoch";
    for (std::uint64_t s : seeds) outf << ",seed_" << s;
    outf << ",median\n";
    for (const auto& [ep, per_seed] : epochs) {
      outf << ep;
      std::vector<double> vals;
      for (std::uint64_t s : seeds) {
        outf << ',';
        auto it = per_seed.find(s);
        if (it != per_seed.end()) {
          outf << pct_str(it->second);
          vals.push_back(round_pct(it->second));
        }
      }
      std::sort(vals.begin(), vals.end());
      double median = vals.size() % 2 ? vals[vals.size() / 2]
                                      : (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]) / 2.0;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", median);
      outf << ',' << buf << '\n';
    }
    paths.push_back(path);
  }
  return paths;
}

}  // namespace dh
