#pragma once

#include <string>
#include <vector>

#include "histobench/latte/encoders.hpp"
#include "histobench/latte/templates.hpp"
#include "histobench/nn/adam.hpp"

namespace histobench::latte {

struct AdaptationConfig {
  int iterations = 10;
  double learning_rate = 1e-3;
  int batch_size = 128;
  double temperature = 0.07;
  int lora_rank = 2;
  double lora_alpha = 1.0;
  AdaptSet adapt_set = AdaptSet::kBoth;
  bool episodic_reset = true;
  /// Softmax temperature of the pseudolabel similarity matrix.
  double pseudolabel_temperature = 1.0;
  /// When set, Ẑ_t for template q uses that template's own argmax instead of
  /// the template-averaged prediction.
  bool per_template_predictions = false;
  /// Also adapt the text encoder's `adapt_set` parameters; class texts are
  /// then re-encoded every iteration.
  bool adapt_text = false;

  void validate() const;
  bool operator==(const AdaptationConfig&) const = default;
};

std::string to_string(AdaptSet set);
AdaptSet adapt_set_from_string(const std::string& name);

/// One C×d_e matrix of class embeddings per template.
using ClassTexts = std::vector<Matrix>;

ClassTexts encode_class_texts(ToyTextEncoder& encoder, const TemplateSet& templates,
                              const std::vector<std::string>& class_names);

/// Template-averaged class embeddings, rows re-normalised.
Matrix average_class_embeddings(const ClassTexts& per_template);

struct ZeroShotResult {
  Matrix probabilities;
  Eigen::VectorXi predictions;
};

ZeroShotResult zero_shot_predict(const Matrix& z_v, const ClassTexts& per_template, double tau);
ZeroShotResult zero_shot_predict(const Matrix& z_v, const Matrix& class_embeddings, double tau);

/// Z_v · Cᵀ with every entry an independent dot product, so identical class
/// rows give bit-identical logits.
Matrix class_logits(const Matrix& z_v, const Matrix& class_embeddings);

/// Rows of `class_embeddings` picked by `labels`.
Matrix select_rows(const Matrix& class_embeddings, const Eigen::VectorXi& labels);

/// (Z_v Z_vᵀ + Ẑ_t Ẑ_tᵀ)/2, exactly symmetric.
Matrix pseudolabel_similarity(const Matrix& z_v, const Matrix& zhat_t);

/// softmax(pseudolabel_similarity / temperature) row-wise.
Matrix transductive_pseudolabels(const Matrix& z_v, const Matrix& zhat_t, double temperature = 1.0);

/// CE(Z_v Ẑ_tᵀ, targets; τ) for given targets. `grad_z_v` and `grad_zhat_t`,
/// when given, receive the gradients with the targets held constant.
double latte_cross_entropy(const Matrix& z_v, const Matrix& zhat_t, const Matrix& targets, double tau,
                           Matrix* grad_z_v = nullptr, Matrix* grad_zhat_t = nullptr);

/// CE(Z_v Ẑ_tᵀ, P̂; τ) with P̂ held constant. `grad_z_v` and `grad_zhat_t`,
/// when given, receive dL/dZ_v and dL/dẐ_t.
double latte_loss_single_template(const Matrix& z_v, const Matrix& zhat_t, double tau,
                                  double pseudolabel_temperature = 1.0, Matrix* grad_z_v = nullptr,
                                  Matrix* grad_zhat_t = nullptr);

/// Σ α_q L_q; the weights must sum to 1 within 1e-9.
double ensemble_loss(const std::vector<double>& losses, const std::vector<double>& weights);

struct LossTerms {
  double total = 0.0;
  std::vector<double> per_template;
  Matrix grad_z_v;
  ClassTexts grad_class_texts;  // dL/d(class-text matrix) per template
  Eigen::VectorXi predictions;
  std::vector<Eigen::VectorXi> template_labels;  // ŷ used to build Ẑ_t, per template
  std::vector<Matrix> pseudolabels;              // P̂, per template
};

/// The full objective on fixed embeddings, with gradients w.r.t. Z_v and the
/// class texts. With `frozen`, its labels and pseudolabels are reused instead
/// of being recomputed, which is the function the gradients differentiate.
LossTerms latte_objective(const Matrix& z_v, const ClassTexts& class_texts, const std::vector<double>& weights,
                          const AdaptationConfig& config, const LossTerms* frozen = nullptr);

struct IterationTrace {
  double loss = 0.0;
  std::vector<double> template_losses;
};

struct AdaptResult {
  Eigen::VectorXi predictions;
  Matrix probabilities;
  Eigen::VectorXi initial_predictions;
  std::vector<IterationTrace> trace;
};

/// Runs `config.iterations` LATTE steps on one batch, then predicts with
/// template averaging. The text side is frozen, so `class_texts` is fixed.
/// With episodic_reset the adapted parameters are restored before returning.
AdaptResult adapt_batch(ToyVisionEncoder& vision, const ClassTexts& class_texts, const TemplateSet& templates,
                        const std::vector<ImageTensor>& images, const AdaptationConfig& config);

AdaptResult adapt_batch(ToyVisionEncoder& vision, ToyTextEncoder& text, const std::vector<ImageTensor>& images,
                        const std::vector<std::string>& class_names, const TemplateSet& templates,
                        const AdaptationConfig& config);

/// Mean row entropy, and its gradient w.r.t. logits when probs = softmax(logits/τ).
double tent_entropy_loss(const Matrix& probabilities);
Matrix tent_entropy_grad(const Matrix& probabilities, double tau);

/// Entropy minimisation on the template-averaged classifier, layer-norm
/// affines only.
AdaptResult tent_adapt_batch(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                             const std::vector<ImageTensor>& images, const AdaptationConfig& config);

/// Predictions of the unadapted encoder.
ZeroShotResult source_predict(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                              const std::vector<ImageTensor>& images, double tau);

struct CalibrationConfig {
  int steps = 100;
  double learning_rate = 1e-2;
  double temperature = 0.07;
  bool operator==(const CalibrationConfig&) const = default;
};

/// Supervised fit of the vision projection alone on labelled held-out images.
/// Returns the final training accuracy.
double calibrate_projection(ToyVisionEncoder& vision, const Matrix& class_embeddings,
                            const std::vector<ImageTensor>& images, const std::vector<int>& labels,
                            const CalibrationConfig& config);

/// The parameters adapt_batch updates under `config`.
std::vector<Param*> adapted_parameters(ToyVisionEncoder& vision, ToyTextEncoder& text,
                                       const AdaptationConfig& config);

/// Backpropagates per-template class-text gradients into the text encoder.
void backward_class_texts(ToyTextEncoder& text, const TemplateSet& templates,
                          const std::vector<std::string>& class_names, const ClassTexts& grads);

/// Value copies of parameters, for episodic reset.
std::vector<Matrix> snapshot(const std::vector<Param*>& params);
void restore(const std::vector<Param*>& params, const std::vector<Matrix>& values);

} // namespace histobench::latte
