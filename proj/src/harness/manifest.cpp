#include "histobench/manifest.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "histobench/errors.hpp"
#include "histobench/image_io.hpp"

namespace histobench {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path DatasetManifest::resolve(const ManifestEntry& entry) const {
  const fs::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open manifest " + path.string());
  }
  DatasetManifest manifest;
  manifest.source = fs::absolute(path);
  manifest.base_dir = manifest.source.parent_path();
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) {
      throw ValidationError(where + ": expected a JSON object");
    }
    if (!have_header) {
      if (!obj.contains("class_names") || !obj["class_names"].is_array() || obj["class_names"].empty()) {
        throw ValidationError(where + ": first line must be a header with a non-empty class_names array");
      }
      for (const auto& name : obj["class_names"]) {
        if (!name.is_string() || name.get<std::string>().empty()) {
          throw ValidationError(where + ": class names must be non-empty strings");
        }
        manifest.class_names.push_back(name.get<std::string>());
      }
      have_header = true;
      continue;
    }
    if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty()) {
      throw ValidationError(where + ": entry needs a non-empty string id");
    }
    ManifestEntry entry;
    entry.id = obj["id"].get<std::string>();
    const std::string tag = where + " (id \"" + entry.id + "\")";
    if (!obj.contains("path") || !obj["path"].is_string()) {
      throw ValidationError(tag + ": entry needs a string path");
    }
    entry.path = obj["path"].get<std::string>();
    if (!obj.contains("label") || !obj["label"].is_number_integer()) {
      throw ValidationError(tag + ": entry needs an integer label");
    }
    const auto label = obj["label"].get<long long>();
    if (label < 0 || label >= static_cast<long long>(manifest.class_names.size())) {
      throw ValidationError(tag + ": label " + std::to_string(label) + " outside [0, " +
                            std::to_string(manifest.class_names.size()) + ")");
    }
    entry.label = static_cast<int>(label);
    if (!seen.insert(entry.id).second) {
      throw ValidationError(tag + ": duplicate id \"" + entry.id + "\"");
    }
    if (!fs::is_regular_file(manifest.resolve(entry))) {
      throw ValidationError(tag + ": image file not found: " + manifest.resolve(entry).string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!have_header) {
    throw ValidationError(path.string() + ": manifest is empty");
  }
  manifest.fingerprint = manifest_fingerprint(path);
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write manifest " + path.string());
  }
  out << json{{"class_names", manifest.class_names}}.dump() << '\n';
  for (const auto& e : manifest.entries) {
    out << json{{"id", e.id}, {"path", e.path}, {"label", e.label}}.dump() << '\n';
  }
  if (!out) {
    throw IoError("failed writing manifest " + path.string());
  }
}

std::uint64_t manifest_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

CorruptStream::CorruptStream(const DatasetManifest& manifest, CorruptionSpec spec)
    : manifest_(&manifest), spec_(std::move(spec)) {
  spec_.validate();
}

std::optional<StreamItem> CorruptStream::next() {
  if (position_ >= manifest_->entries.size()) {
    return std::nullopt;
  }
  const ManifestEntry& entry = manifest_->entries[position_++];
  StreamItem item;
  item.id = entry.id;
  item.label = entry.label;
  try {
    item.image = apply_corruption(load_image(manifest_->resolve(entry)), spec_, entry.id);
  } catch (const std::exception& e) {
    item.error = e.what();
    ++errors_;
  }
  return item;
}

void CorruptStream::reset() {
  position_ = 0;
  errors_ = 0;
}

EvalResult evaluate(CorruptStream& stream, const Classifier& classifier, int batch_size, int num_classes) {
  if (batch_size < 1) {
    throw ArgumentError("batch_size must be positive");
  }
  if (num_classes < 1) {
    throw ArgumentError("num_classes must be positive");
  }
  EvalResult result;
  std::vector<std::size_t> class_total(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> class_correct(static_cast<std::size_t>(num_classes), 0);
  std::size_t correct = 0;
  std::vector<ImageTensor> batch;
  std::vector<int> labels;
  auto flush = [&] {
    if (batch.empty()) return;
    const Eigen::VectorXi predicted = classifier(batch);
    if (predicted.size() != static_cast<Eigen::Index>(batch.size())) {
      throw ArgumentError("classifier returned the wrong number of predictions");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto k = static_cast<std::size_t>(labels[i]);
      ++class_total[k];
      if (predicted[static_cast<Eigen::Index>(i)] == labels[i]) {
        ++correct;
        ++class_correct[k];
      }
    }
    result.evaluated += batch.size();
    batch.clear();
    labels.clear();
  };
  while (auto item = stream.next()) {
    if (!item->image) {
      result.errors.push_back(item->id + ": " + item->error);
      continue;
    }
    if (item->label < 0 || item->label >= num_classes) {
      throw ArgumentError("label out of range for item " + item->id);
    }
    batch.push_back(std::move(*item->image));
    labels.push_back(item->label);
    if (static_cast<int>(batch.size()) == batch_size) {
      flush();
    }
  }
  flush();
  if (result.evaluated == 0) {
    throw ArgumentError("evaluation stream yielded no usable images");
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(result.evaluated);
  for (std::size_t k = 0; k < class_total.size(); ++k) {
    result.per_class_accuracy.push_back(class_total[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                            : static_cast<double>(class_correct[k]) /
                                                                  static_cast<double>(class_total[k]));
  }
  return result;
}

} // namespace histobench
