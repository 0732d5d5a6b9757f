#include "histobench/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histobench/errors.hpp"
#include "histobench/image_io.hpp"

namespace histobench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kSource: return "source";
    case Method::kTent: return "tent";
    case Method::kLatte: return "latte";
  }
  throw ArgumentError("unknown method");
}

Method parse_method(std::string_view name) {
  for (const Method m : {Method::kSource, Method::kTent, Method::kLatte}) {
    if (method_name(m) == name) {
      return m;
    }
  }
  throw ArgumentError("unknown method \"" + std::string(name) + "\" (expected source, tent or latte)");
}

BenchmarkConfig::BenchmarkConfig() : templates(latte::TemplateSet::defaults().templates()) {}

latte::TemplateSet BenchmarkConfig::template_set() const {
  return latte::TemplateSet(templates, template_weights);
}

void BenchmarkConfig::validate() const {
  try {
    adaptation.validate();
    template_set();
    latte::VisionEncoderConfig vision = model.vision;
    vision.lora_rank = adaptation.lora_rank;
    vision.lora_alpha = adaptation.lora_alpha;
    vision.validate();
    latte::TextEncoderConfig text = model.text;
    text.lora_rank = adaptation.lora_rank;
    text.lora_alpha = adaptation.lora_alpha;
    text.validate();
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
  if (model.image_size < 1 || model.image_size % model.vision.patch_size != 0) {
    throw ValidationError("invalid config: model.image_size must be a positive multiple of the patch size");
  }
  if (calibration.fit.steps < 0 || !(calibration.fit.learning_rate > 0.0) || !(calibration.fit.temperature > 0.0)) {
    throw ValidationError("invalid config: calibration needs steps >= 0 and positive rates");
  }
}

namespace {

/// Reads known keys of one JSON object and rejects any others.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) {
      throw ValidationError(where_ + ": expected a JSON object");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) const { return j_.at(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) {
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(path(key) + ": wrong type");
    }
  }

  void number(const std::string& key, double& out) {
    if (has(key) && !j_.at(key).is_number()) {
      throw ValidationError(path(key) + ": expected a number");
    }
    get(key, out);
  }

  void integer(const std::string& key, int& out) {
    if (has(key) && !j_.at(key).is_number_integer()) {
      throw ValidationError(path(key) + ": expected an integer");
    }
    get(key, out);
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (has(key) && !j_.at(key).is_number_unsigned() && !(j_.at(key).is_number_integer() && j_.at(key) >= 0)) {
      throw ValidationError(path(key) + ": expected a non-negative integer");
    }
    get(key, out);
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ValidationError("unknown config key \"" + path(item.key()) + "\"");
      }
    }
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string absolute_from(const std::string& path, const fs::path& base_dir) {
  const fs::path p(path);
  return (p.is_absolute() || base_dir.empty() ? fs::absolute(p) : fs::absolute(base_dir / p)).lexically_normal().string();
}

} // namespace

BenchmarkConfig config_from_json(const json& j, const fs::path& base_dir) {
  BenchmarkConfig c;
  ObjectReader root(j, "");
  auto& a = c.adaptation;
  root.integer("iterations", a.iterations);
  root.number("learning_rate", a.learning_rate);
  root.integer("batch_size", a.batch_size);
  root.number("temperature", a.temperature);
  root.integer("lora_rank", a.lora_rank);
  root.number("lora_alpha", a.lora_alpha);
  if (root.has("adapt_set")) {
    if (!root.at("adapt_set").is_string()) {
      throw ValidationError("adapt_set: expected a string");
    }
    try {
      a.adapt_set = latte::adapt_set_from_string(root.at("adapt_set").get<std::string>());
    } catch (const ArgumentError& e) {
      throw ValidationError(std::string("adapt_set: ") + e.what());
    }
  }
  root.get("episodic_reset", a.episodic_reset);
  root.number("pseudolabel_temperature", a.pseudolabel_temperature);
  root.get("per_template_predictions", a.per_template_predictions);
  root.get("adapt_text", a.adapt_text);

  if (root.has("templates")) {
    const json& t = root.at("templates");
    if (t.is_string()) {
      try {
        c.templates = latte::TemplateSet::load(absolute_from(t.get<std::string>(), base_dir)).templates();
      } catch (const std::exception& e) {
        throw ValidationError(std::string("templates: ") + e.what());
      }
    } else if (t.is_array()) {
      root.get("templates", c.templates);
    } else {
      throw ValidationError("templates: expected a file path or a list of strings");
    }
  }
  root.get("template_weights", c.template_weights);

  if (root.has("model")) {
    ObjectReader model(root.at("model"), "model");
    model.integer("image_size", c.model.image_size);
    if (model.has("vision")) {
      ObjectReader v(model.at("vision"), "model.vision");
      auto& vc = c.model.vision;
      v.integer("patch_size", vc.patch_size);
      v.integer("embed_dim", vc.embed_dim);
      v.integer("depth", vc.depth);
      v.integer("heads", vc.heads);
      v.integer("mlp_ratio", vc.mlp_ratio);
      v.integer("output_dim", vc.output_dim);
      v.number("position_scale", vc.position_scale);
      v.seed("seed", vc.seed);
      v.finish();
    }
    if (model.has("text")) {
      ObjectReader t(model.at("text"), "model.text");
      auto& tc = c.model.text;
      t.integer("vocab_size", tc.vocab_size);
      t.integer("embed_dim", tc.embed_dim);
      t.integer("heads", tc.heads);
      t.integer("mlp_ratio", tc.mlp_ratio);
      t.integer("output_dim", tc.output_dim);
      t.number("position_scale", tc.position_scale);
      t.seed("seed", tc.seed);
      t.finish();
    }
    model.finish();
  }
  if (root.has("calibration")) {
    ObjectReader cal(root.at("calibration"), "calibration");
    cal.get("manifest", c.calibration.manifest);
    if (!c.calibration.manifest.empty()) {
      c.calibration.manifest = absolute_from(c.calibration.manifest, base_dir);
    }
    cal.integer("steps", c.calibration.fit.steps);
    cal.number("learning_rate", c.calibration.fit.learning_rate);
    cal.number("temperature", c.calibration.fit.temperature);
    cal.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json config_to_json(const BenchmarkConfig& c) {
  const auto& a = c.adaptation;
  const auto& v = c.model.vision;
  const auto& t = c.model.text;
  json j = {
      {"iterations", a.iterations},
      {"learning_rate", a.learning_rate},
      {"batch_size", a.batch_size},
      {"temperature", a.temperature},
      {"lora_rank", a.lora_rank},
      {"lora_alpha", a.lora_alpha},
      {"adapt_set", latte::to_string(a.adapt_set)},
      {"episodic_reset", a.episodic_reset},
      {"pseudolabel_temperature", a.pseudolabel_temperature},
      {"per_template_predictions", a.per_template_predictions},
      {"adapt_text", a.adapt_text},
      {"templates", c.templates},
      {"template_weights", c.template_weights},
      {"model",
       {{"image_size", c.model.image_size},
        {"vision",
         {{"patch_size", v.patch_size},
          {"embed_dim", v.embed_dim},
          {"depth", v.depth},
          {"heads", v.heads},
          {"mlp_ratio", v.mlp_ratio},
          {"output_dim", v.output_dim},
          {"position_scale", v.position_scale},
          {"seed", v.seed}}},
        {"text",
         {{"vocab_size", t.vocab_size},
          {"embed_dim", t.embed_dim},
          {"heads", t.heads},
          {"mlp_ratio", t.mlp_ratio},
          {"output_dim", t.output_dim},
          {"position_scale", t.position_scale},
          {"seed", t.seed}}}}},
      {"calibration",
       {{"manifest", c.calibration.manifest},
        {"steps", c.calibration.fit.steps},
        {"learning_rate", c.calibration.fit.learning_rate},
        {"temperature", c.calibration.fit.temperature}}},
  };
  return j;
}

BenchmarkConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

json spec_to_json(const CorruptionSpec& spec) {
  json stages = json::array();
  for (const auto& stage : spec.stages) {
    stages.push_back({{"kind", std::string(kind_name(stage.kind))}, {"params", stage.params}});
  }
  return {{"name", spec.name()}, {"global_seed", spec.global_seed}, {"stages", stages}};
}

CorruptionSpec spec_from_json(const json& j) {
  try {
    CorruptionSpec spec;
    spec.global_seed = j.at("global_seed").get<std::uint64_t>();
    for (const auto& s : j.at("stages")) {
      CorruptionStage stage;
      stage.kind = parse_kind(s.at("kind").get<std::string>());
      stage.params = s.at("params").get<ParamMap>();
      spec.stages.push_back(std::move(stage));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed corruption spec: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("invalid corruption spec: ") + e.what());
  }
}

namespace {

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool both_nan = std::isnan(a[i]) && std::isnan(b[i]);
    if (!both_nan && a[i] != b[i]) return false;
  }
  return true;
}

json nan_to_null(const std::vector<double>& v) {
  json out = json::array();
  for (const double x : v) {
    out.push_back(std::isnan(x) ? json(nullptr) : json(x));
  }
  return out;
}

std::vector<double> null_to_nan(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) {
    out.push_back(x.is_null() ? std::nan("") : x.get<double>());
  }
  return out;
}

} // namespace

bool CellResult::same_numbers(const CellResult& o) const {
  return corruption == o.corruption && method == o.method && ok == o.ok && error == o.error &&
         accuracy == o.accuracy && same_doubles(per_class_accuracy, o.per_class_accuracy) && images == o.images &&
         stream_errors == o.stream_errors && loss_trace == o.loss_trace && batch_traces == o.batch_traces;
}

std::size_t RunReport::failed_cells() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.ok ? 0 : 1;
  return n;
}

std::size_t RunReport::stream_error_count() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.stream_errors.size();
  return n;
}

bool RunReport::same_numbers(const RunReport& o) const {
  if (cells.size() != o.cells.size() || calibration_accuracy != o.calibration_accuracy) {
    return false;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].same_numbers(o.cells[i])) return false;
  }
  return true;
}

json report_to_json(const RunReport& r) {
  json specs = json::array();
  for (const auto& s : r.specs) specs.push_back(spec_to_json(s));
  json methods = json::array();
  for (const Method m : r.methods) methods.push_back(std::string(method_name(m)));
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"corruption", c.corruption},
                     {"method", c.method},
                     {"ok", c.ok},
                     {"error", c.error},
                     {"accuracy", c.accuracy},
                     {"per_class_accuracy", nan_to_null(c.per_class_accuracy)},
                     {"images", c.images},
                     {"stream_errors", c.stream_errors},
                     {"loss_trace", c.loss_trace},
                     {"batch_traces", c.batch_traces},
                     {"wall_clock_seconds", c.wall_clock_seconds}});
  }
  return {{"manifest", r.manifest},
          {"manifest_fingerprint", r.manifest_fingerprint},
          {"class_names", r.class_names},
          {"global_seed", r.global_seed},
          {"specs", specs},
          {"methods", methods},
          {"config", config_to_json(r.config)},
          {"calibration_accuracy", r.calibration_accuracy},
          {"wall_clock_seconds", r.wall_clock_seconds},
          {"cells", cells}};
}

RunReport report_from_json(const json& j) {
  try {
    RunReport r;
    r.manifest = j.at("manifest").get<std::string>();
    r.manifest_fingerprint = j.at("manifest_fingerprint").get<std::uint64_t>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    r.global_seed = j.at("global_seed").get<std::uint64_t>();
    for (const auto& s : j.at("specs")) r.specs.push_back(spec_from_json(s));
    for (const auto& m : j.at("methods")) r.methods.push_back(parse_method(m.get<std::string>()));
    r.config = config_from_json(j.at("config"));
    r.calibration_accuracy = j.at("calibration_accuracy").get<double>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    for (const auto& c : j.at("cells")) {
      CellResult cell;
      cell.corruption = c.at("corruption").get<std::string>();
      cell.method = c.at("method").get<std::string>();
      cell.ok = c.at("ok").get<bool>();
      cell.error = c.at("error").get<std::string>();
      cell.accuracy = c.at("accuracy").get<double>();
      cell.per_class_accuracy = null_to_nan(c.at("per_class_accuracy"));
      cell.images = c.at("images").get<std::size_t>();
      cell.stream_errors = c.at("stream_errors").get<std::vector<std::string>>();
      cell.loss_trace = c.at("loss_trace").get<std::vector<double>>();
      cell.batch_traces = c.at("batch_traces").get<std::vector<std::vector<double>>>();
      cell.wall_clock_seconds = c.at("wall_clock_seconds").get<double>();
      r.cells.push_back(std::move(cell));
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("invalid report: ") + e.what());
  }
}

void write_report(const RunReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write report " + path.string());
  }
  out << report_to_json(report).dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing report " + path.string());
  }
}

RunReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open report " + path.string());
  }
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

std::vector<ImageTensor> prepare_batch(const std::vector<ImageTensor>& images, int image_size) {
  std::vector<ImageTensor> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    out.push_back(img.height() == image_size && img.width() == image_size
                      ? img
                      : resize_bilinear(img, image_size, image_size));
  }
  return out;
}

Pipeline build_pipeline(const BenchmarkConfig& config, const std::vector<std::string>& class_names) {
  config.validate();
  latte::VisionEncoderConfig vision = config.model.vision;
  vision.lora_rank = config.adaptation.lora_rank;
  vision.lora_alpha = config.adaptation.lora_alpha;
  latte::TextEncoderConfig text = config.model.text;
  text.lora_rank = config.adaptation.lora_rank;
  text.lora_alpha = config.adaptation.lora_alpha;
  Pipeline p{latte::ToyVisionEncoder(vision), latte::ToyTextEncoder(text), class_names, {}, {}, -1.0};
  p.class_texts = latte::encode_class_texts(p.text, config.template_set(), class_names);
  p.class_embeddings = latte::average_class_embeddings(p.class_texts);
  if (!config.calibration.manifest.empty()) {
    const DatasetManifest held = load_manifest(config.calibration.manifest);
    if (held.class_names != class_names) {
      throw ValidationError("calibration manifest class_names differ from the evaluation manifest");
    }
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    for (const auto& e : held.entries) {
      images.push_back(load_image(held.resolve(e)));
      labels.push_back(e.label);
    }
    p.calibration_accuracy = latte::calibrate_projection(p.vision, p.class_embeddings,
                                                         prepare_batch(images, config.model.image_size), labels,
                                                         config.calibration.fit);
  }
  return p;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CellResult run_cell(const DatasetManifest& manifest, const CorruptionSpec& spec, Method method,
                    const BenchmarkConfig& config, const Pipeline& pipeline) {
  const auto start = Clock::now();
  CellResult cell;
  cell.corruption = spec.name();
  cell.method = std::string(method_name(method));
  try {
    latte::ToyVisionEncoder vision = pipeline.vision;
    latte::ToyTextEncoder text = pipeline.text;
    const latte::TemplateSet templates = config.template_set();
    const auto& a = config.adaptation;
    Classifier classify = [&](const std::vector<ImageTensor>& raw) -> Eigen::VectorXi {
      const std::vector<ImageTensor> batch = prepare_batch(raw, config.model.image_size);
      if (method == Method::kSource) {
        return latte::source_predict(vision, pipeline.class_embeddings, batch, a.temperature).predictions;
      }
      const latte::AdaptResult result =
          method == Method::kLatte
              ? (a.adapt_text ? latte::adapt_batch(vision, text, batch, pipeline.class_names, templates, a)
                              : latte::adapt_batch(vision, pipeline.class_texts, templates, batch, a))
              : latte::tent_adapt_batch(vision, pipeline.class_embeddings, batch, a);
      std::vector<double> trace;
      for (const auto& it : result.trace) trace.push_back(it.loss);
      cell.batch_traces.push_back(std::move(trace));
      return result.predictions;
    };
    CorruptStream stream(manifest, spec);
    const EvalResult eval = evaluate(stream, classify, a.batch_size, manifest.num_classes());
    cell.accuracy = eval.accuracy;
    cell.per_class_accuracy = eval.per_class_accuracy;
    cell.images = eval.evaluated;
    cell.stream_errors = eval.errors;
    if (!cell.batch_traces.empty()) {
      cell.loss_trace.assign(cell.batch_traces.front().size(), 0.0);
      for (const auto& t : cell.batch_traces) {
        for (std::size_t i = 0; i < t.size(); ++i) cell.loss_trace[i] += t[i];
      }
      for (double& v : cell.loss_trace) v /= static_cast<double>(cell.batch_traces.size());
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.wall_clock_seconds = seconds_since(start);
  return cell;
}

} // namespace

RunReport run_benchmark(const DatasetManifest& manifest, const std::vector<CorruptionSpec>& specs,
                        const std::vector<Method>& methods, const BenchmarkConfig& config) {
  if (specs.empty() || methods.empty()) {
    throw ArgumentError("run_benchmark needs at least one corruption and one method");
  }
  const auto start = Clock::now();
  RunReport report;
  report.manifest = manifest.source.string();
  report.manifest_fingerprint = manifest.fingerprint;
  report.class_names = manifest.class_names;
  report.global_seed = specs.front().global_seed;
  report.specs = specs;
  report.methods = methods;
  report.config = config;
  const Pipeline pipeline = build_pipeline(config, manifest.class_names);
  report.calibration_accuracy = pipeline.calibration_accuracy;
  for (const auto& spec : specs) {
    for (const Method method : methods) {
      report.cells.push_back(run_cell(manifest, spec, method, config, pipeline));
    }
  }
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

RunReport replay(const RunReport& report) {
  const DatasetManifest manifest = load_manifest(report.manifest);
  if (manifest.fingerprint != report.manifest_fingerprint) {
    throw ValidationError("manifest " + report.manifest + " changed since the report was written");
  }
  return run_benchmark(manifest, report.specs, report.methods, report.config);
}

namespace {

std::string format_accuracy(const CellResult* cell) {
  if (cell == nullptr) return "-";
  if (!cell->ok) return "FAILED";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * cell->accuracy;
  return os.str();
}

const CellResult* find_cell(const RunReport& r, const std::string& corruption, Method method) {
  for (const auto& c : r.cells) {
    if (c.corruption == corruption && c.method == method_name(method)) return &c;
  }
  return nullptr;
}

} // namespace

std::string render_table(const RunReport& r) {
  std::size_t width = std::string("corruption").size();
  for (const auto& s : r.specs) width = std::max(width, s.name().size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "corruption";
  for (const Method m : r.methods) os << "  " << std::right << std::setw(8) << method_name(m);
  os << '\n' << std::string(width + 10 * r.methods.size(), '-') << '\n';
  for (const auto& s : r.specs) {
    os << std::left << std::setw(static_cast<int>(width)) << s.name();
    for (const Method m : r.methods) {
      os << "  " << std::right << std::setw(8) << format_accuracy(find_cell(r, s.name(), m));
    }
    os << '\n';
  }
  if (r.specs.size() > 1) {
    os << std::left << std::setw(static_cast<int>(width)) << "mean";
    for (const Method m : r.methods) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& s : r.specs) {
        const CellResult* c = find_cell(r, s.name(), m);
        if (c != nullptr && c->ok) {
          sum += c->accuracy;
          ++n;
        }
      }
      std::ostringstream v;
      if (n > 0) v << std::fixed << std::setprecision(2) << 100.0 * sum / static_cast<double>(n);
      os << "  " << std::right << std::setw(8) << (n > 0 ? v.str() : "-");
    }
    os << '\n';
  }
  return os.str();
}

std::string render_csv(const RunReport& r) {
  std::ostringstream os;
  os << "corruption,method,ok,accuracy,images,stream_errors,final_loss,wall_clock_seconds\n";
  os << std::setprecision(17);
  for (const auto& c : r.cells) {
    os << c.corruption << ',' << c.method << ',' << (c.ok ? "true" : "false") << ',' << c.accuracy << ','
       << c.images << ',' << c.stream_errors.size() << ',';
    if (!c.loss_trace.empty()) os << c.loss_trace.back();
    os << ',' << c.wall_clock_seconds << '\n';
  }
  return os.str();
}

} // namespace histobench
