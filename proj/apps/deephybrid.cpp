#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dh/manifest.hpp"
#include "dh/pipeline.hpp"
#include "dh/runner.hpp"
#include "dh/serialize.hpp"

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int default_jobs() {
  const char* env = std::getenv("DEEPHYBRID_JOBS");
  if (!env) return 1;
  int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

int cmd_run(const std::string& manifest_path, int jobs) {
  dh::RunManifest m = dh::parse_manifest(manifest_path);
  dh::RunOutcome outcome = dh::run_manifest(m, jobs, &std::cout);
  return outcome.exit_code;
}

int cmd_validate(const std::string& manifest_path) {
  dh::RunManifest m = dh::parse_manifest(manifest_path);
  std::cout << "manifest OK: " << dh::enumerate_cells(m).size() << " cells, output '"
            << m.output.directory << "'\n";
  return 0;
}

int cmd_report(const std::string& results_path, const std::string& format, bool per_run) {
  std::vector<dh::ResultRecord> records = dh::load_results(results_path);
  if (per_run) {
    std::cout << dh::render_per_run(records);
    return 0;
  }
  dh::ReportFormat f = dh::ReportFormat::Text;
  if (format == "csv") f = dh::ReportFormat::Csv;
  if (format == "json") f = dh::ReportFormat::Json;
  std::cout << dh::render_report(records, f);
  return 0;
}

// Dumps the 256-dim feature vectors of a saved network for external use.
// Rows come out as feature_1,...,feature_D,label with round-trip precision.
// The input is taken as-is: apply the same normalization you trained with
// before saving a .dhds cache, or pass the raw CSV the network was fed.
int cmd_extract(const std::string& network_path, const std::string& data_path,
                const std::string& out_path) {
  dh::TrainedNetwork net = dh::load_network(network_path);
  dh::Dataset data;
  if (ends_with(data_path, ".dhds"))
    data = dh::load_dataset_cache(data_path);
  else if (ends_with(data_path, ".csv") || ends_with(data_path, ".csv.gz"))
    data = dh::load_csv(data_path, -1, false);
  else
    throw std::runtime_error("extract: data file must end in .csv, .csv.gz or .dhds");

  dh::FeatureExtractor fx = dh::strip_softmax(net);
  dh::Tensor features = dh::extract_features(fx, data);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  std::size_t n = features.shape[0], d = features.shape[1];
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", features.at(i, j));
      out << buf << ',';
    }
    out << data.labels[i] << '\n';
  }
  std::cout << "wrote " << n << " x " << d << " features to '" << out_path << "'\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deephybrid: train NN/SVM/KNN hybrids and reproduce the comparison tables"};
  app.require_subcommand(1);

  std::string manifest_path, results_path, format = "text";
  std::string network_path, data_path, out_path;
  int jobs = default_jobs();
  bool per_run = false;

  CLI::App* run = app.add_subcommand("run", "execute every cell of a run manifest");
  run->add_option("manifest", manifest_path, "manifest file")->required();
  run->add_option("-j,--jobs", jobs, "parallel cells (default: $DEEPHYBRID_JOBS or 1)");

  CLI::App* validate = app.add_subcommand("validate", "parse and check a manifest, run nothing");
  validate->add_option("manifest", manifest_path, "manifest file")->required();

  CLI::App* report = app.add_subcommand("report", "render a results.jsonl as a peak table");
  report->add_option("results", results_path, "results.jsonl file")->required();
  report->add_option("-f,--format", format, "text | csv | json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_flag("--per-run", per_run, "list every record instead of the peak table");

  CLI::App* extract = app.add_subcommand("extract", "dump a saved network's features as CSV");
  extract->add_option("--network", network_path, "saved .dhnn network file")->required();
  extract->add_option("--data", data_path, "input data (.csv, .csv.gz or .dhds)")->required();
  extract->add_option("--out", out_path, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(manifest_path, jobs);
    if (*validate) return cmd_validate(manifest_path);
    if (*report) return cmd_report(results_path, format, per_run);
    if (*extract) return cmd_extract(network_path, data_path, out_path);
  } catch (const dh::ManifestError& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
