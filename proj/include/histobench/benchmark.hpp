#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "histobench/corruption.hpp"
#include "histobench/latte/latte.hpp"
#include "histobench/manifest.hpp"

namespace histobench {

enum class Method { kSource, kTent, kLatte };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct ModelConfig {
  int image_size = 64;
  latte::VisionEncoderConfig vision;  // lora_rank/lora_alpha are taken from the adaptation section
  latte::TextEncoderConfig text;      // likewise

  bool operator==(const ModelConfig&) const = default;
};

/// Supervised fit of the vision projection on a labelled manifest before any
/// evaluation. Skipped when `manifest` is empty.
struct CalibrationSection {
  std::string manifest;  // absolute
  latte::CalibrationConfig fit;

  bool operator==(const CalibrationSection&) const = default;
};

struct BenchmarkConfig {
  latte::AdaptationConfig adaptation;
  std::vector<std::string> templates;
  std::vector<double> template_weights;  // empty means uniform
  ModelConfig model;
  CalibrationSection calibration;

  BenchmarkConfig();
  latte::TemplateSet template_set() const;
  void validate() const;
  bool operator==(const BenchmarkConfig&) const = default;
};

/// Relative paths ("templates" as a file, "calibration.manifest") resolve
/// against `base_dir`. Unknown keys and wrong types raise ValidationError.
BenchmarkConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const BenchmarkConfig& config);
BenchmarkConfig load_config(const std::filesystem::path& path);

nlohmann::json spec_to_json(const CorruptionSpec& spec);
CorruptionSpec spec_from_json(const nlohmann::json& j);

struct CellResult {
  std::string corruption;
  std::string method;
  bool ok = false;
  std::string error;
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::size_t images = 0;
  std::vector<std::string> stream_errors;
  std::vector<double> loss_trace;                 // mean over batches, per iteration
  std::vector<std::vector<double>> batch_traces;  // per batch, per iteration
  double wall_clock_seconds = 0.0;

  /// Everything except wall-clock time.
  bool same_numbers(const CellResult& other) const;
};

struct RunReport {
  std::string manifest;
  std::uint64_t manifest_fingerprint = 0;
  std::vector<std::string> class_names;
  std::uint64_t global_seed = 0;
  std::vector<CorruptionSpec> specs;
  std::vector<Method> methods;
  BenchmarkConfig config;
  std::vector<CellResult> cells;
  double calibration_accuracy = -1.0;  // negative when calibration was skipped
  double wall_clock_seconds = 0.0;

  std::size_t failed_cells() const;
  std::size_t stream_error_count() const;
  bool same_numbers(const RunReport& other) const;
};

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

/// Frozen encoders plus the template class embeddings they share.
struct Pipeline {
  latte::ToyVisionEncoder vision;
  latte::ToyTextEncoder text;
  std::vector<std::string> class_names;
  latte::ClassTexts class_texts;
  latte::Matrix class_embeddings;  // template average
  double calibration_accuracy = -1.0;
};

/// Builds the encoders, encodes the class prompts and runs calibration.
Pipeline build_pipeline(const BenchmarkConfig& config, const std::vector<std::string>& class_names);

/// Images resized to the model's input side.
std::vector<ImageTensor> prepare_batch(const std::vector<ImageTensor>& images, int image_size);

/// Every spec × method cell, each with its own copy of the calibrated vision
/// encoder. A failing cell is recorded and the grid continues.
RunReport run_benchmark(const DatasetManifest& manifest, const std::vector<CorruptionSpec>& specs,
                        const std::vector<Method>& methods, const BenchmarkConfig& config);

/// Re-runs a report from its echo. Throws ValidationError when the manifest
/// on disk no longer matches the recorded fingerprint.
RunReport replay(const RunReport& report);

std::string render_table(const RunReport& report);
std::string render_csv(const RunReport& report);

} // namespace histobench
