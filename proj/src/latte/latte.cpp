#include "histobench/latte/latte.hpp"

#include <cmath>
#include <numeric>

namespace histobench::latte {

void AdaptationConfig::validate() const {
  if (iterations < 0) throw ArgumentError("iterations must be non-negative");
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning_rate must be non-negative");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (!(pseudolabel_temperature > 0.0)) throw ArgumentError("pseudolabel_temperature must be positive");
  if (lora_rank < 1) throw ArgumentError("lora_rank must be positive");
}

std::string to_string(AdaptSet set) {
  switch (set) {
    case AdaptSet::kLora: return "lora";
    case AdaptSet::kLayerNorm: return "layernorm";
    case AdaptSet::kBoth: return "both";
  }
  return "both";
}

AdaptSet adapt_set_from_string(const std::string& name) {
  if (name == "lora") return AdaptSet::kLora;
  if (name == "layernorm") return AdaptSet::kLayerNorm;
  if (name == "both") return AdaptSet::kBoth;
  throw ArgumentError("unknown adapt_set \"" + name + "\" (expected lora, layernorm or both)");
}

ClassTexts encode_class_texts(ToyTextEncoder& encoder, const TemplateSet& templates,
                              const std::vector<std::string>& class_names) {
  if (class_names.empty()) {
    throw ArgumentError("class_names is empty");
  }
  ClassTexts out;
  out.reserve(templates.size());
  for (std::size_t q = 0; q < templates.size(); ++q) {
    std::vector<std::string> prompts;
    for (const auto& name : class_names) {
      if (name.empty()) throw ArgumentError("class names must be non-empty");
      prompts.push_back(templates.instantiate(q, name));
    }
    out.push_back(encoder.encode(prompts));
  }
  return out;
}

Matrix average_class_embeddings(const ClassTexts& per_template) {
  if (per_template.empty()) {
    throw ArgumentError("no class-text matrices to average");
  }
  Matrix sum = per_template.front();
  for (std::size_t q = 1; q < per_template.size(); ++q) {
    sum += per_template[q];
  }
  return nn::l2_normalize_rows(sum / static_cast<double>(per_template.size()));
}

Matrix class_logits(const Matrix& z_v, const Matrix& class_embeddings) {
  if (z_v.cols() != class_embeddings.cols()) {
    throw ArgumentError("class_logits: embedding widths differ");
  }
  Matrix logits(z_v.rows(), class_embeddings.rows());
  for (Eigen::Index i = 0; i < z_v.rows(); ++i) {
    for (Eigen::Index k = 0; k < class_embeddings.rows(); ++k) {
      logits(i, k) = z_v.row(i).dot(class_embeddings.row(k));
    }
  }
  return logits;
}

ZeroShotResult zero_shot_predict(const Matrix& z_v, const Matrix& class_embeddings, double tau) {
  const Matrix logits = class_logits(z_v, class_embeddings);
  ZeroShotResult out;
  out.probabilities = nn::softmax_rows(logits, tau);
  out.predictions = nn::argmax_rows(logits);
  return out;
}

ZeroShotResult zero_shot_predict(const Matrix& z_v, const ClassTexts& per_template, double tau) {
  return zero_shot_predict(z_v, average_class_embeddings(per_template), tau);
}

Matrix select_rows(const Matrix& class_embeddings, const Eigen::VectorXi& labels) {
  Matrix out(labels.size(), class_embeddings.cols());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_embeddings.rows()) {
      throw ArgumentError("label out of range in select_rows");
    }
    out.row(i) = class_embeddings.row(labels[i]);
  }
  return out;
}

Matrix transductive_pseudolabels(const Matrix& z_v, const Matrix& zhat_t, double temperature) {
  return nn::softmax_rows(pseudolabel_similarity(z_v, zhat_t), temperature);
}

Matrix pseudolabel_similarity(const Matrix& z_v, const Matrix& zhat_t) {
  if (z_v.rows() != zhat_t.rows() || z_v.cols() != zhat_t.cols()) {
    throw ArgumentError("pseudolabels: Z_v and Ẑ_t differ in shape");
  }
  const Matrix combined = 0.5 * (z_v * z_v.transpose() + zhat_t * zhat_t.transpose());
  return 0.5 * (combined + combined.transpose());
}

double latte_cross_entropy(const Matrix& z_v, const Matrix& zhat_t, const Matrix& targets, double tau,
                           Matrix* grad_z_v, Matrix* grad_zhat_t) {
  const Matrix logits = z_v * zhat_t.transpose();
  if (grad_z_v == nullptr && grad_zhat_t == nullptr) {
    return nn::cross_entropy_rows(logits, targets, tau);
  }
  Matrix grad_logits;
  const double loss = nn::cross_entropy_rows(logits, targets, tau, &grad_logits);
  if (grad_z_v != nullptr) {
    *grad_z_v = grad_logits * zhat_t;
  }
  if (grad_zhat_t != nullptr) {
    *grad_zhat_t = grad_logits.transpose() * z_v;
  }
  return loss;
}

double latte_loss_single_template(const Matrix& z_v, const Matrix& zhat_t, double tau,
                                  double pseudolabel_temperature, Matrix* grad_z_v, Matrix* grad_zhat_t) {
  return latte_cross_entropy(z_v, zhat_t, transductive_pseudolabels(z_v, zhat_t, pseudolabel_temperature), tau,
                             grad_z_v, grad_zhat_t);
}

double ensemble_loss(const std::vector<double>& losses, const std::vector<double>& weights) {
  if (losses.size() != weights.size() || losses.empty()) {
    throw ArgumentError("ensemble_loss: need one weight per template loss");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("ensemble_loss: weights must sum to 1, got " + std::to_string(total));
  }
  double out = 0.0;
  for (std::size_t q = 0; q < losses.size(); ++q) {
    out += weights[q] * losses[q];
  }
  return out;
}

LossTerms latte_objective(const Matrix& z_v, const ClassTexts& class_texts, const std::vector<double>& weights,
                          const AdaptationConfig& config, const LossTerms* frozen) {
  if (class_texts.size() != weights.size()) {
    throw ArgumentError("latte_objective: one weight per template required");
  }
  if (frozen != nullptr &&
      (frozen->template_labels.size() != class_texts.size() || frozen->pseudolabels.size() != class_texts.size())) {
    throw ArgumentError("latte_objective: frozen targets come from a different template count");
  }
  LossTerms terms;
  terms.predictions = frozen != nullptr ? frozen->predictions
                                        : zero_shot_predict(z_v, class_texts, config.temperature).predictions;
  terms.grad_z_v = Matrix::Zero(z_v.rows(), z_v.cols());
  for (std::size_t q = 0; q < class_texts.size(); ++q) {
    Eigen::VectorXi labels;
    if (frozen != nullptr) {
      labels = frozen->template_labels[q];
    } else if (config.per_template_predictions) {
      labels = nn::argmax_rows(class_logits(z_v, class_texts[q]));
    } else {
      labels = terms.predictions;
    }
    const Matrix zhat = select_rows(class_texts[q], labels);
    Matrix targets = frozen != nullptr ? frozen->pseudolabels[q]
                                       : transductive_pseudolabels(z_v, zhat, config.pseudolabel_temperature);
    Matrix grad;
    Matrix grad_zhat;
    terms.per_template.push_back(latte_cross_entropy(z_v, zhat, targets, config.temperature, &grad, &grad_zhat));
    terms.grad_z_v += weights[q] * grad;
    Matrix grad_texts = Matrix::Zero(class_texts[q].rows(), class_texts[q].cols());
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      grad_texts.row(labels[i]) += weights[q] * grad_zhat.row(i);
    }
    terms.grad_class_texts.push_back(std::move(grad_texts));
    terms.template_labels.push_back(std::move(labels));
    terms.pseudolabels.push_back(std::move(targets));
  }
  terms.total = ensemble_loss(terms.per_template, weights);
  return terms;
}

std::vector<Matrix> snapshot(const std::vector<Param*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const Param* p : params) {
    out.push_back(p->value);
  }
  return out;
}

void restore(const std::vector<Param*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->value = values[i];
    params[i]->zero_grad();
    params[i]->reset_moments();
  }
}

namespace {

void zero_all_grads(ToyVisionEncoder& vision) {
  nn::zero_grads(vision.parameters(AdaptSet::kBoth));
  vision.projection().zero_grad();
}

// Shared loop. `classes()` yields the current template-averaged class
// embeddings; `objective(z, trace)` returns dL/dZ_v and may accumulate
// gradients of parameters outside the vision encoder.
template <typename Classes, typename Objective>
AdaptResult run_adaptation(ToyVisionEncoder& vision, const std::vector<ImageTensor>& images,
                           const AdaptationConfig& config, const std::vector<Param*>& params, Classes&& classes,
                           Objective&& objective) {
  config.validate();
  if (images.empty()) {
    throw ArgumentError("cannot adapt on an empty batch");
  }
  const std::vector<Matrix> initial = snapshot(params);
  for (Param* p : params) {
    p->reset_moments();
  }
  AdaptResult result;
  Matrix z = vision.encode(images);
  result.initial_predictions = zero_shot_predict(z, classes(), config.temperature).predictions;
  const nn::AdamOptions adam{.lr = config.learning_rate};
  for (int it = 0; it < config.iterations; ++it) {
    if (it > 0) {
      z = vision.encode(images);
    }
    zero_all_grads(vision);
    nn::zero_grads(params);
    IterationTrace trace;
    const Matrix grad = objective(z, trace);
    vision.backward(grad);
    nn::adam_step(params, adam, it + 1);
    result.trace.push_back(std::move(trace));
  }
  if (config.iterations > 0) {
    z = vision.encode(images);
  }
  const ZeroShotResult final = zero_shot_predict(z, classes(), config.temperature);
  result.predictions = final.predictions;
  result.probabilities = final.probabilities;
  zero_all_grads(vision);
  nn::zero_grads(params);
  if (config.episodic_reset) {
    restore(params, initial);
  }
  return result;
}

} // namespace

AdaptResult adapt_batch(ToyVisionEncoder& vision, const ClassTexts& class_texts, const TemplateSet& templates,
                        const std::vector<ImageTensor>& images, const AdaptationConfig& config) {
  if (class_texts.size() != templates.size()) {
    throw ArgumentError("adapt_batch: class texts were encoded with a different template count");
  }
  if (config.adapt_text) {
    throw ArgumentError("adapt_batch: adapt_text needs the text encoder overload");
  }
  const Matrix averaged = average_class_embeddings(class_texts);
  return run_adaptation(vision, images, config, vision.parameters(config.adapt_set),
                        [&] { return averaged; },
                        [&](const Matrix& z, IterationTrace& trace) {
                          LossTerms terms = latte_objective(z, class_texts, templates.weights(), config);
                          trace.loss = terms.total;
                          trace.template_losses = std::move(terms.per_template);
                          return terms.grad_z_v;
                        });
}

AdaptResult adapt_batch(ToyVisionEncoder& vision, ToyTextEncoder& text, const std::vector<ImageTensor>& images,
                        const std::vector<std::string>& class_names, const TemplateSet& templates,
                        const AdaptationConfig& config) {
  if (!config.adapt_text) {
    return adapt_batch(vision, encode_class_texts(text, templates, class_names), templates, images, config);
  }
  ClassTexts class_texts;
  return run_adaptation(vision, images, config, adapted_parameters(vision, text, config),
                        [&] {
                          class_texts = encode_class_texts(text, templates, class_names);
                          return average_class_embeddings(class_texts);
                        },
                        [&](const Matrix& z, IterationTrace& trace) {
                          class_texts = encode_class_texts(text, templates, class_names);
                          LossTerms terms = latte_objective(z, class_texts, templates.weights(), config);
                          backward_class_texts(text, templates, class_names, terms.grad_class_texts);
                          trace.loss = terms.total;
                          trace.template_losses = std::move(terms.per_template);
                          return terms.grad_z_v;
                        });
}

std::vector<Param*> adapted_parameters(ToyVisionEncoder& vision, ToyTextEncoder& text,
                                       const AdaptationConfig& config) {
  std::vector<Param*> params = vision.parameters(config.adapt_set);
  if (config.adapt_text) {
    const std::vector<Param*> extra = text.parameters(config.adapt_set);
    params.insert(params.end(), extra.begin(), extra.end());
  }
  return params;
}

void backward_class_texts(ToyTextEncoder& text, const TemplateSet& templates,
                          const std::vector<std::string>& class_names, const ClassTexts& grads) {
  if (grads.size() != templates.size()) {
    throw ArgumentError("backward_class_texts: one gradient matrix per template required");
  }
  for (std::size_t q = 0; q < templates.size(); ++q) {
    for (std::size_t k = 0; k < class_names.size(); ++k) {
      const Eigen::RowVectorXd g = grads[q].row(static_cast<Eigen::Index>(k));
      if (g.isZero(0.0)) {
        continue;
      }
      text.backward_one(templates.instantiate(q, class_names[k]), g);
    }
  }
}

double tent_entropy_loss(const Matrix& probabilities) { return nn::entropy_rows(probabilities); }

Matrix tent_entropy_grad(const Matrix& probabilities, double tau) {
  const Matrix logp = probabilities.array().max(nn::kLogFloor).log().matrix();
  const Eigen::VectorXd row_entropy = -(probabilities.array() * logp.array()).rowwise().sum();
  const Matrix shifted = logp.colwise() + row_entropy;
  return -(probabilities.array() * shifted.array()).matrix() / (tau * static_cast<double>(probabilities.rows()));
}

AdaptResult tent_adapt_batch(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                             const std::vector<ImageTensor>& images, const AdaptationConfig& config) {
  return run_adaptation(vision, images, config, vision.parameters(AdaptSet::kLayerNorm),
                        [&] { return class_embeddings; },
                        [&](const Matrix& z, IterationTrace& trace) {
                          const Matrix probs = nn::softmax_rows((z * class_embeddings.transpose()).eval(),
                                                               config.temperature);
                          trace.loss = tent_entropy_loss(probs);
                          return (tent_entropy_grad(probs, config.temperature) * class_embeddings).eval();
                        });
}

ZeroShotResult source_predict(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                              const std::vector<ImageTensor>& images, double tau) {
  return zero_shot_predict(vision.encode(images), class_embeddings, tau);
}

double calibrate_projection(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                            const std::vector<ImageTensor>& images, const std::vector<int>& labels,
                            const CalibrationConfig& config) {
  if (images.size() != labels.size() || images.empty()) {
    throw ArgumentError("calibration needs one label per image");
  }
  if (config.steps < 0 || !(config.temperature > 0.0)) {
    throw ArgumentError("invalid calibration config");
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix targets = Matrix::Zero(n, class_embeddings.rows());
  Eigen::VectorXi truth(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= class_embeddings.rows()) {
      throw ArgumentError("calibration label out of range");
    }
    targets(i, y) = 1.0;
    truth[i] = y;
  }
  Param& projection = vision.projection();
  projection.reset_moments();
  const nn::AdamOptions adam{.lr = config.learning_rate};
  for (int step = 1; step <= config.steps; ++step) {
    const Matrix z = vision.encode(images);
    Matrix grad_logits;
    nn::cross_entropy_rows((z * class_embeddings.transpose()).eval(), targets, config.temperature, &grad_logits);
    zero_all_grads(vision);
    vision.backward(grad_logits * class_embeddings);
    nn::adam_step({&projection}, adam, step);
  }
  zero_all_grads(vision);
  projection.reset_moments();
  const Eigen::VectorXi predicted =
      zero_shot_predict(vision.encode(images), class_embeddings, config.temperature).predictions;
  return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(n);
}

} // namespace histobench::latte
