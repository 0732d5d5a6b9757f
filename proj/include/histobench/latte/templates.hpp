#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace histobench::latte {

inline constexpr std::string_view kClassPlaceholder = "{class}";

/// Ordered prompt templates with convex loss weights.
class TemplateSet {
public:
  /// Empty `weights` means uniform 1/Q. Weights must be non-negative and sum
  /// to 1 within 1e-9; every template holds exactly one placeholder.
  explicit TemplateSet(std::vector<std::string> templates, std::vector<double> weights = {});

  /// The built-in set of 25.
  static TemplateSet defaults();
  /// One template per line; blank lines and lines starting with '#' skipped.
  static TemplateSet load(const std::filesystem::path& path);

  std::size_t size() const { return templates_.size(); }
  const std::vector<std::string>& templates() const { return templates_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string instantiate(std::size_t q, const std::string& class_name) const;
  /// First `count` templates with uniform weights.
  TemplateSet head(std::size_t count) const;

private:
  std::vector<std::string> templates_;
  std::vector<double> weights_;
};

} // namespace histobench::latte
