#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "histobench/benchmark.hpp"
#include "histobench/corruption.hpp"
#include "histobench/errors.hpp"
#include "histobench/image_io.hpp"
#include "histobench/manifest.hpp"
#include "histobench/synthetic.hpp"

namespace fs = std::filesystem;
using namespace histobench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitPartial = 2;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ParamMap parse_overrides(const std::vector<std::string>& assignments) {
  ParamMap out;
  for (const auto& a : assignments) {
    const auto [key, value] = parse_param_assignment(a);
    out[key] = value;
  }
  return out;
}

std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!safe) c = '_';
  }
  return out;
}

BenchmarkConfig config_or_default(const std::string& path) {
  return path.empty() ? BenchmarkConfig{} : load_config(path);
}

int finish_report(const RunReport& report, const std::string& path) {
  write_report(report, path);
  std::cout << render_table(report);
  if (report.calibration_accuracy >= 0.0) {
    std::cout << "calibration accuracy: " << report.calibration_accuracy << '\n';
  }
  for (const auto& cell : report.cells) {
    if (!cell.ok) {
      std::cerr << "cell " << cell.corruption << "/" << cell.method << " failed: " << cell.error << '\n';
    }
    for (const auto& e : cell.stream_errors) {
      std::cerr << "cell " << cell.corruption << "/" << cell.method << " skipped " << e << '\n';
    }
  }
  return report.failed_cells() + report.stream_error_count() > 0 ? kExitPartial : kExitOk;
}

int run_corrupt(const std::string& manifest_path, const std::string& out_dir, const std::string& kind,
                std::uint64_t seed, const std::vector<std::string>& params) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const CorruptionSpec spec = CorruptionSpec::parse(kind, seed, parse_overrides(params));
  spec.validate();
  fs::create_directories(out_dir);
  DatasetManifest written;
  written.class_names = manifest.class_names;
  std::set<std::string> stems;
  for (const auto& e : manifest.entries) {
    const std::string stem = file_stem_for(e.id);
    if (!stems.insert(stem).second) {
      throw ValidationError("ids \"" + e.id + "\" and another entry map to the same file name");
    }
  }
  std::size_t failures = 0;
  CorruptStream stream(manifest, spec);
  while (auto item = stream.next()) {
    if (!item->image) {
      std::cerr << "skipped " << item->id << ": " << item->error << '\n';
      ++failures;
      continue;
    }
    const std::string file = file_stem_for(item->id) + ".png";
    save_image(*item->image, fs::path(out_dir) / file);
    written.entries.push_back({item->id, file, item->label});
  }
  write_manifest(written, fs::path(out_dir) / "manifest.jsonl");
  std::cout << "wrote " << written.entries.size() << " images (" << spec.name() << ", seed " << seed << ") to "
            << out_dir << '\n';
  return failures > 0 ? kExitPartial : kExitOk;
}

int run_synth(const std::string& out_dir, int count, int size, std::uint64_t seed, const std::string& prefix) {
  if (count < 1 || size < 8) {
    throw ArgumentError("synth needs --count >= 1 and --size >= 8");
  }
  fs::create_directories(out_dir);
  const auto data = synthetic::make_texture_dataset(count, size, seed, prefix);
  DatasetManifest manifest;
  manifest.class_names = data.class_names;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const std::string file = data.ids[i] + ".png";
    save_image(data.images[i], fs::path(out_dir) / file);
    manifest.entries.push_back({data.ids[i], file, data.labels[i]});
  }
  write_manifest(manifest, fs::path(out_dir) / "manifest.jsonl");
  std::cout << "wrote " << count << " texture images to " << out_dir << '\n';
  return kExitOk;
}

std::vector<CorruptionSpec> parse_kinds(const std::string& kinds, std::uint64_t seed) {
  std::vector<CorruptionSpec> specs;
  if (kinds == "all") {
    specs.push_back(CorruptionSpec::parse("none", seed));
    for (const CorruptionKind k : all_corruption_kinds()) {
      specs.push_back(CorruptionSpec::parse(kind_name(k), seed));
    }
    return specs;
  }
  for (const auto& k : split(kinds, ',')) {
    specs.push_back(CorruptionSpec::parse(k, seed));
  }
  if (specs.empty()) {
    throw ArgumentError("--kinds is empty");
  }
  return specs;
}

std::vector<Method> parse_methods(const std::string& methods) {
  std::vector<Method> out;
  for (const auto& m : split(methods, ',')) out.push_back(parse_method(m));
  if (out.empty()) {
    throw ArgumentError("--methods is empty");
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corruption benchmark and test-time adaptation for histopathology classifiers"};
  app.require_subcommand(1);

  std::string manifest;
  std::string out_dir;
  std::string kind;
  std::string kinds;
  std::string methods = "source,tent,latte";
  std::uint64_t seed = 0;
  std::string config;
  std::string report;
  std::string in;
  std::string format = "table";
  std::vector<std::string> params;
  int count = 512;
  int size = 64;
  std::string prefix = "tex";

  auto* corrupt = app.add_subcommand("corrupt", "Write a corrupted copy of a dataset as PNGs plus a manifest");
  corrupt->add_option("--manifest", manifest, "Input manifest (JSON lines)")->required();
  corrupt->add_option("--out", out_dir, "Output directory")->required();
  corrupt->add_option("--kind", kind, "Corruption kind, or kinds joined with '+'")->required();
  corrupt->add_option("--seed", seed, "Global seed")->required();
  corrupt->add_option("--param", params, "Parameter override key=value (repeatable)");

  auto* bench = app.add_subcommand("benchmark", "Evaluate methods across corruptions");
  bench->add_option("--manifest", manifest, "Dataset manifest")->required();
  bench->add_option("--kinds", kinds, "Comma-separated kinds, or 'all' (clean plus all ten)")->required();
  bench->add_option("--methods", methods, "Comma-separated subset of source,tent,latte")->capture_default_str();
  bench->add_option("--seed", seed, "Global seed")->required();
  bench->add_option("--config", config, "Config JSON");
  bench->add_option("--report", report, "Report JSON to write")->required();

  auto* adapt = app.add_subcommand("adapt", "Single LATTE run with its per-iteration loss trace");
  adapt->add_option("--manifest", manifest, "Dataset manifest")->required();
  adapt->add_option("--kind", kind, "Corruption kind")->required();
  adapt->add_option("--seed", seed, "Global seed")->required();
  adapt->add_option("--config", config, "Config JSON");
  adapt->add_option("--report", report, "Report JSON to write")->required();

  auto* show = app.add_subcommand("report", "Render a report as a table or CSV");
  show->add_option("--in", in, "Report JSON")->required();
  show->add_option("--format", format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate the two-class checker/blob texture dataset");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--count", count, "Number of images")->capture_default_str();
  synth->add_option("--size", size, "Image side in pixels")->capture_default_str();
  synth->add_option("--seed", seed, "Dataset seed")->required();
  synth->add_option("--prefix", prefix, "Id prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (corrupt->parsed()) {
      return run_corrupt(manifest, out_dir, kind, seed, params);
    }
    if (bench->parsed()) {
      const DatasetManifest m = load_manifest(manifest);
      return finish_report(run_benchmark(m, parse_kinds(kinds, seed), parse_methods(methods),
                                         config_or_default(config)),
                           report);
    }
    if (adapt->parsed()) {
      const DatasetManifest m = load_manifest(manifest);
      const RunReport r =
          run_benchmark(m, {CorruptionSpec::parse(kind, seed)}, {Method::kLatte}, config_or_default(config));
      const int code = finish_report(r, report);
      const CellResult& cell = r.cells.front();
      for (std::size_t i = 0; i < cell.loss_trace.size(); ++i) {
        std::printf("iteration %2zu  mean loss %.6f\n", i, cell.loss_trace[i]);
      }
      return code;
    }
    if (show->parsed()) {
      const RunReport r = read_report(in);
      std::cout << (format == "csv" ? render_csv(r) : render_table(r));
      return kExitOk;
    }
    if (synth->parsed()) {
      return run_synth(out_dir, count, size, seed, prefix);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
