#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "histobench/corruption.hpp"
#include "histobench/image.hpp"

namespace histobench {

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory unless absolute
  int label = 0;

  bool operator==(const ManifestEntry&) const = default;
};

/// JSON-lines: a header object {"class_names": [...]} followed by one
/// {"id", "path", "label"} object per line.
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;
  std::filesystem::path source;  // absolute path the manifest was loaded from
  std::uint64_t fingerprint = 0;  // manifest_fingerprint(source)

  std::filesystem::path resolve(const ManifestEntry& entry) const;
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// Throws ValidationError naming the offending line/id for malformed JSON,
/// duplicate ids, out-of-range labels or missing files.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// FNV-1a of the manifest file bytes.
std::uint64_t manifest_fingerprint(const std::filesystem::path& path);

struct StreamItem {
  std::string id;
  int label = 0;
  std::optional<ImageTensor> image;  // empty when loading or corrupting failed
  std::string error;
};

/// Lazily loads and corrupts one manifest entry at a time, in manifest order.
class CorruptStream {
public:
  CorruptStream(const DatasetManifest& manifest, CorruptionSpec spec);

  std::optional<StreamItem> next();
  void reset();
  std::size_t error_count() const { return errors_; }
  const CorruptionSpec& spec() const { return spec_; }

private:
  const DatasetManifest* manifest_;
  CorruptionSpec spec_;
  std::size_t position_ = 0;
  std::size_t errors_ = 0;
};

using Classifier = std::function<Eigen::VectorXi(const std::vector<ImageTensor>&)>;

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes with no samples
  std::size_t evaluated = 0;
  std::vector<std::string> errors;  // "id: message" per failed item
};

/// Micro-averaged accuracy; the classifier sees batches of `batch_size`
/// successfully loaded images (the last batch may be short).
EvalResult evaluate(CorruptStream& stream, const Classifier& classifier, int batch_size, int num_classes);

} // namespace histobench
