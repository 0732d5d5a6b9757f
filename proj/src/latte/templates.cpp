#include "histobench/latte/templates.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "histobench/errors.hpp"

namespace histobench::latte {

TemplateSet::TemplateSet(std::vector<std::string> templates, std::vector<double> weights)
    : templates_(std::move(templates)), weights_(std::move(weights)) {
  if (templates_.empty()) {
    throw ArgumentError("template set is empty");
  }
  for (const auto& t : templates_) {
    const auto first = t.find(kClassPlaceholder);
    if (first == std::string::npos || t.find(kClassPlaceholder, first + 1) != std::string::npos) {
      throw ArgumentError("template must contain exactly one {class} placeholder: \"" + t + "\"");
    }
  }
  if (weights_.empty()) {
    weights_.assign(templates_.size(), 1.0 / static_cast<double>(templates_.size()));
  }
  if (weights_.size() != templates_.size()) {
    throw ArgumentError("template weights and templates differ in count");
  }
  for (const double w : weights_) {
    if (!(w >= 0.0)) {
      throw ArgumentError("template weights must be non-negative");
    }
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("template weights must sum to 1, got " + std::to_string(total));
  }
}

TemplateSet TemplateSet::defaults() {
  return TemplateSet({
      "a histopathology slide showing {class}",
      "histopathology image of {class}",
      "pathology tissue showing {class}",
      "presence of {class} tissue on image",
      "a photomicrograph showing {class}",
      "a photomicrograph of {class}",
      "an image of {class}",
      "an image showing {class}",
      "a histology slide of {class}",
      "microscopy image showing {class}",
      "an H&E stained image of {class}",
      "a tissue section with {class}",
      "histopathological view of {class}",
      "a microscopic image of {class} tissue",
      "a pathology image showing {class}",
      "stained tissue containing {class}",
      "a whole slide image patch of {class}",
      "a photo of {class} tissue under the microscope",
      "a slide image with {class}",
      "histology of {class}",
      "this tissue shows {class}",
      "an example of {class} in a histopathology image",
      "a close-up view of {class} tissue",
      "pathology slide with {class}",
      "a digitized slide showing {class}"});
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open template file " + path.string());
  }
  std::vector<std::string> templates;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    templates.push_back(line);
  }
  return TemplateSet(std::move(templates));
}

std::string TemplateSet::instantiate(std::size_t q, const std::string& class_name) const {
  std::string out = templates_.at(q);
  out.replace(out.find(kClassPlaceholder), kClassPlaceholder.size(), class_name);
  return out;
}

TemplateSet TemplateSet::head(std::size_t count) const {
  if (count == 0 || count > templates_.size()) {
    throw ArgumentError("template head count out of range");
  }
  return TemplateSet(std::vector<std::string>(templates_.begin(), templates_.begin() + static_cast<long>(count)));
}

} // namespace histobench::latte
