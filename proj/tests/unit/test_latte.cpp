#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "latte_fixtures.hpp"
#include "histobench/latte/latte.hpp"

using namespace histobench;
using namespace histobench::latte;
using histobench::testing::smooth_batch;

namespace {

Matrix basis_rows(Eigen::Index rows, Eigen::Index dim) {
  Matrix m = Matrix::Zero(rows, dim);
  for (Eigen::Index i = 0; i < rows; ++i) m(i, i) = 1.0;
  return m;
}

Matrix random_unit_rows(Eigen::Index rows, Eigen::Index dim, std::uint64_t seed) {
  Rng64 rng(seed);
  return nn::l2_normalize_rows(nn::gaussian_matrix(rows, dim, 1.0, rng));
}

bool params_equal(const std::vector<Param*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value != values[i]) return false;
  }
  return true;
}

const std::vector<std::string> kClasses{"tumor", "stroma", "lymphocytes"};

TemplateSet two_templates() {
  return TemplateSet({"a histopathology slide showing {class}", "histopathology image of {class}"});
}

} // namespace

TEST(VisionEncoder, UnitRowsDeterministicAndShapeChecked) {
  ToyVisionEncoder vision;
  auto images = smooth_batch(3, 16, 1);
  images.push_back(images.front());
  const Matrix z = vision.encode(images);
  ASSERT_EQ(z.rows(), 4);
  ASSERT_EQ(z.cols(), 16);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    EXPECT_NEAR(z.row(i).norm(), 1.0, 1e-9);
  }
  EXPECT_EQ(z.row(0), z.row(3));
  EXPECT_THROW(vision.encode({ImageTensor(16, 24)}), ArgumentError);
  EXPECT_THROW(vision.encode({ImageTensor(12, 12)}), ArgumentError);
  EXPECT_THROW(vision.encode({}), ArgumentError);
}

TEST(VisionEncoder, ZeroLoraBMatchesFrozenOutputForAnyA) {
  ToyVisionEncoder vision;
  const auto images = smooth_batch(2, 16, 2);
  const Matrix frozen = vision.encode(images);
  Rng64 rng(5);
  for (Param* p : vision.parameters(AdaptSet::kLora)) {
    if (p->name.ends_with(".lora_a")) {
      p->value = nn::gaussian_matrix(p->value.rows(), p->value.cols(), 1.0, rng);
    }
  }
  EXPECT_EQ(vision.encode(images), frozen);
}

TEST(VisionEncoder, ParameterFamilies) {
  ToyVisionEncoder vision;
  const auto lora = vision.parameters(AdaptSet::kLora);
  const auto norms = vision.parameters(AdaptSet::kLayerNorm);
  const auto both = vision.parameters(AdaptSet::kBoth);
  // 2 blocks × 6 LoRA pairs × (A, B); 2 blocks × 2 LNs × (γ, β) + final LN.
  EXPECT_EQ(lora.size(), 24u);
  EXPECT_EQ(norms.size(), 10u);
  EXPECT_EQ(both.size(), 34u);
}

TEST(TextEncoder, UnitRowsAndIdenticalStrings) {
  ToyTextEncoder text;
  const Matrix z = text.encode({"a histology slide of stroma", "a histology slide of stroma", "tumor"});
  EXPECT_EQ(z.row(0), z.row(1));
  EXPECT_NE(z.row(0), z.row(2));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    EXPECT_NEAR(z.row(i).norm(), 1.0, 1e-9);
  }
  EXPECT_THROW(text.encode_one("  ,; "), ArgumentError);
  EXPECT_EQ(ToyTextEncoder::tokenize("An H&E-stained image!"),
            (std::vector<std::string>{"an", "h", "e", "stained", "image"}));
}

TEST(ClassTexts, IdenticalTemplatesSingleClassAndLocality) {
  ToyTextEncoder text;
  const TemplateSet twice({"histopathology image of {class}", "histopathology image of {class}"});
  const ClassTexts same = encode_class_texts(text, twice, kClasses);
  ASSERT_EQ(same.size(), 2u);
  EXPECT_EQ(same[0], same[1]);

  const ClassTexts single = encode_class_texts(text, two_templates(), {"tumor"});
  for (const Matrix& m : single) {
    ASSERT_EQ(m.rows(), 1);
    EXPECT_NEAR(m.row(0).norm(), 1.0, 1e-9);
  }

  const ClassTexts before = encode_class_texts(text, two_templates(), kClasses);
  const ClassTexts after = encode_class_texts(text, two_templates(), {"tumor", "adipose", "lymphocytes"});
  for (std::size_t q = 0; q < before.size(); ++q) {
    EXPECT_EQ(before[q].row(0), after[q].row(0));
    EXPECT_NE(before[q].row(1), after[q].row(1));
    EXPECT_EQ(before[q].row(2), after[q].row(2));
  }
  EXPECT_THROW(encode_class_texts(text, two_templates(), {}), ArgumentError);
  EXPECT_THROW(encode_class_texts(text, two_templates(), {"tumor", ""}), ArgumentError);
}

TEST(Templates, ValidationDefaultsAndFile) {
  EXPECT_THROW(TemplateSet({"no placeholder"}), ArgumentError);
  EXPECT_THROW(TemplateSet({"{class} and {class}"}), ArgumentError);
  EXPECT_THROW(TemplateSet({"{class}", "a {class}"}, {0.7, 0.7}), ArgumentError);
  EXPECT_THROW(TemplateSet({"{class}", "a {class}"}, {1.5, -0.5}), ArgumentError);
  const TemplateSet defaults = TemplateSet::defaults();
  EXPECT_EQ(defaults.size(), 25u);
  EXPECT_EQ(defaults.templates().front(), "a histopathology slide showing {class}");
  EXPECT_NEAR(std::accumulate(defaults.weights().begin(), defaults.weights().end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(defaults.instantiate(1, "stroma"), "histopathology image of stroma");

  const TemplateSet shipped = TemplateSet::load(std::filesystem::path(HISTOBENCH_SOURCE_DIR) / "data/templates.txt");
  EXPECT_EQ(shipped.templates(), defaults.templates());

  histobench::testing::TempDir dir;
  {
    std::ofstream out(dir / "t.txt");
    out << "# header\n\nfirst {class}\r\nsecond {class}\n";
  }
  EXPECT_EQ(TemplateSet::load(dir / "t.txt").templates(), (std::vector<std::string>{"first {class}", "second {class}"}));
}

TEST(ZeroShot, AnalyticTwoClassProbability) {
  const double tau = 0.07;
  const Matrix z_v = basis_rows(1, 16);
  const ClassTexts texts{basis_rows(2, 16)};
  const ZeroShotResult r = zero_shot_predict(z_v, texts, tau);
  const double expected = 1.0 / (1.0 + std::exp(-1.0 / tau));
  EXPECT_NEAR(r.probabilities(0, 0), expected, 1e-15);
  EXPECT_NEAR(1.0 - r.probabilities(0, 0), 6.2e-7, 0.05e-7);
  EXPECT_EQ(r.predictions[0], 0);
}

TEST(ZeroShot, IdenticalClassesGiveUniformAndLowestIndex) {
  const Matrix z_v = random_unit_rows(5, 16, 3);
  const Matrix same = random_unit_rows(1, 16, 4).replicate(3, 1);
  const ZeroShotResult r = zero_shot_predict(z_v, ClassTexts{same}, 0.07);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_EQ(r.predictions[i], 0);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(r.probabilities(i, k), 1.0 / 3.0, 1e-15);
  }
}

TEST(ZeroShot, RepeatedTemplatesMatchSingle) {
  const Matrix z_v = random_unit_rows(6, 16, 5);
  const Matrix t = random_unit_rows(3, 16, 6);
  const ZeroShotResult one = zero_shot_predict(z_v, ClassTexts{t}, 0.07);
  const ZeroShotResult many = zero_shot_predict(z_v, ClassTexts{t, t, t, t}, 0.07);
  EXPECT_EQ(one.predictions, many.predictions);
  EXPECT_LE((one.probabilities - many.probabilities).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ZeroShot, AveragedEmbeddingsAreRenormalised) {
  const Matrix avg = average_class_embeddings({random_unit_rows(3, 16, 7), random_unit_rows(3, 16, 8)});
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(avg.row(k).norm(), 1.0, 1e-12);
}

TEST(Pseudolabels, ConstantSimilarityGivesUniformRows) {
  const Matrix v = random_unit_rows(1, 16, 9).replicate(5, 1);
  const Matrix t = random_unit_rows(1, 16, 10).replicate(5, 1);
  const Matrix p = transductive_pseudolabels(v, t);
  EXPECT_LE((p.array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(Pseudolabels, OrthonormalDiagonal) {
  const Matrix e = basis_rows(4, 16);
  const Matrix p = transductive_pseudolabels(e, e);
  const double diag = std::exp(1.0) / (std::exp(1.0) + 3.0);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(p(i, i), diag, 1e-15);
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (i != j) EXPECT_NEAR(p(i, j), 1.0 / (std::exp(1.0) + 3.0), 1e-15);
    }
  }
  EXPECT_NEAR(p(0, 0), 0.4754, 5e-5);
}

TEST(Pseudolabels, RowsStochasticAndPreSoftmaxSymmetric) {
  const Matrix v = random_unit_rows(7, 16, 11);
  const Matrix t = random_unit_rows(7, 16, 12);
  const Matrix s = pseudolabel_similarity(v, t);
  EXPECT_EQ(s, s.transpose());
  EXPECT_LE((s - 0.5 * (v * v.transpose() + t * t.transpose())).cwiseAbs().maxCoeff(), 1e-15);
  for (const double temp : {1.0, 0.3}) {
    const Matrix p = transductive_pseudolabels(v, t, temp);
    EXPECT_LE((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LE((p - nn::softmax_rows(s, temp)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(LatteLoss, SingleImageIsZero) {
  const Matrix v = random_unit_rows(1, 16, 13);
  const Matrix t = random_unit_rows(1, 16, 14);
  EXPECT_NEAR(latte_loss_single_template(v, t, 0.07), 0.0, 1e-15);
}

TEST(LatteLoss, OrthonormalClosedForm) {
  const double tau = 0.07;
  const Matrix e = basis_rows(4, 16);
  // Targets from the orthonormal pseudolabel case, logits = I/τ.
  const double d = std::exp(1.0) / (std::exp(1.0) + 3.0);
  const double o = 1.0 / (std::exp(1.0) + 3.0);
  const double sd = std::exp(1.0 / tau) / (std::exp(1.0 / tau) + 3.0);
  const double so = 1.0 / (std::exp(1.0 / tau) + 3.0);
  const double expected = -(d * std::log(sd) + 3.0 * o * std::log(so));
  EXPECT_NEAR(latte_loss_single_template(e, e, tau), expected, 1e-12);
}

TEST(LatteLoss, GradientsMatchCentralDifferences) {
  const double tau = 0.5;
  Matrix v = random_unit_rows(5, 6, 15);
  Matrix t = random_unit_rows(5, 6, 16);
  Matrix gv;
  Matrix gt;
  latte_loss_single_template(v, t, tau, 1.0, &gv, &gt);
  const double h = 1e-6;
  // Targets are constants: differentiate with P̂ frozen at the base point.
  const Matrix targets = transductive_pseudolabels(v, t);
  auto loss_frozen = [&](const Matrix& a, const Matrix& b) {
    return nn::cross_entropy_rows((a * b.transpose()).eval(), targets, tau);
  };
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      Matrix vp = v, vm = v, tp = t, tm = t;
      vp(i, j) += h;
      vm(i, j) -= h;
      tp(i, j) += h;
      tm(i, j) -= h;
      EXPECT_NEAR((loss_frozen(vp, t) - loss_frozen(vm, t)) / (2 * h), gv(i, j), 1e-7);
      EXPECT_NEAR((loss_frozen(v, tp) - loss_frozen(v, tm)) / (2 * h), gt(i, j), 1e-7);
    }
  }
}

TEST(Ensemble, ExamplesAndWeightCheck) {
  EXPECT_DOUBLE_EQ(ensemble_loss({1.0, 3.0}, {0.5, 0.5}), 2.0);
  EXPECT_NEAR(ensemble_loss({0.7, 0.7, 0.7}, {1.0 / 3, 1.0 / 3, 1.0 / 3}), 0.7, 1e-15);
  EXPECT_THROW(ensemble_loss({1.0, 2.0}, {0.5, 0.6}), ArgumentError);
  EXPECT_THROW(ensemble_loss({1.0}, {0.5, 0.5}), ArgumentError);
}

TEST(Ensemble, RescaledWeightsLeaveObjectiveUnchanged) {
  const Matrix z = random_unit_rows(6, 16, 17);
  const ClassTexts texts{random_unit_rows(3, 16, 18), random_unit_rows(3, 16, 19)};
  const AdaptationConfig config;
  const std::vector<double> raw{2.0, 6.0};
  const std::vector<double> a{0.25, 0.75};
  std::vector<double> b;
  const double scale = 37.0;
  const double sum = scale * (raw[0] + raw[1]);
  for (const double w : raw) b.push_back(scale * w / sum);
  EXPECT_NEAR(latte_objective(z, texts, a, config).total, latte_objective(z, texts, b, config).total, 1e-15);
}

TEST(Objective, SingleTemplateEqualsDirectLoss) {
  const Matrix z = random_unit_rows(6, 16, 20);
  const Matrix t = random_unit_rows(3, 16, 21);
  const AdaptationConfig config;
  const LossTerms terms = latte_objective(z, ClassTexts{t}, {1.0}, config);
  const Eigen::VectorXi labels = zero_shot_predict(z, t, config.temperature).predictions;
  EXPECT_EQ(terms.total, latte_loss_single_template(z, select_rows(t, labels), config.temperature));
}

TEST(Objective, IdenticalTemplatesEqualSingleTemplate) {
  const Matrix z = random_unit_rows(6, 16, 22);
  const Matrix t = random_unit_rows(3, 16, 23);
  const AdaptationConfig config;
  const double one = latte_objective(z, ClassTexts{t}, {1.0}, config).total;
  const double four = latte_objective(z, ClassTexts{t, t, t, t}, {0.25, 0.25, 0.25, 0.25}, config).total;
  EXPECT_NEAR(one, four, 1e-12);
}

TEST(Objective, PerTemplatePredictionSwitch) {
  const Matrix z = random_unit_rows(8, 16, 24);
  const Matrix t = random_unit_rows(3, 16, 25);
  AdaptationConfig shared;
  AdaptationConfig own = shared;
  own.per_template_predictions = true;
  // Identical templates: each template's argmax equals the averaged one.
  EXPECT_NEAR(latte_objective(z, ClassTexts{t, t}, {0.5, 0.5}, shared).total,
              latte_objective(z, ClassTexts{t, t}, {0.5, 0.5}, own).total, 1e-15);
}

TEST(Objective, ClassTextGradientMatchesCentralDifferences) {
  Matrix z = random_unit_rows(6, 8, 26);
  ClassTexts texts{random_unit_rows(3, 8, 27), random_unit_rows(3, 8, 28)};
  AdaptationConfig config;
  config.temperature = 0.5;
  const std::vector<double> w{0.3, 0.7};
  const LossTerms terms = latte_objective(z, texts, w, config);
  const double h = 1e-6;
  for (std::size_t q = 0; q < texts.size(); ++q) {
    for (Eigen::Index k = 0; k < 3; ++k) {
      for (Eigen::Index j = 0; j < 8; ++j) {
        // Targets depend on Ẑ but are constants for the gradient, so freeze
        // them through the single-template form with fixed labels.
        const double base = texts[q](k, j);
        auto eval = [&](double value) {
          ClassTexts probe = texts;
          probe[q](k, j) = value;
          const Matrix zhat = select_rows(probe[q], terms.predictions);
          const Matrix targets = transductive_pseudolabels(z, select_rows(texts[q], terms.predictions));
          return w[q] * nn::cross_entropy_rows((z * zhat.transpose()).eval(), targets, config.temperature);
        };
        EXPECT_NEAR((eval(base + h) - eval(base - h)) / (2 * h), terms.grad_class_texts[q](k, j), 1e-7);
      }
    }
  }
}

TEST(AdaptBatch, ZeroIterationsReproduceSource) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const auto images = smooth_batch(6, 16, 30);
  const TemplateSet templates = two_templates();
  const ClassTexts texts = encode_class_texts(text, templates, kClasses);
  AdaptationConfig config;
  config.iterations = 0;
  const AdaptResult r = adapt_batch(vision, texts, templates, images, config);
  const ZeroShotResult src = source_predict(vision, average_class_embeddings(texts), images, config.temperature);
  EXPECT_EQ(r.predictions, src.predictions);
  EXPECT_EQ(r.probabilities, src.probabilities);
  EXPECT_TRUE(r.trace.empty());
}

TEST(AdaptBatch, FirstIterationLossIsFrozenModelLoss) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const auto images = smooth_batch(6, 16, 31);
  const TemplateSet templates = two_templates();
  const ClassTexts texts = encode_class_texts(text, templates, kClasses);
  const AdaptationConfig config;
  const LossTerms frozen = latte_objective(vision.encode(images), texts, templates.weights(), config);
  const AdaptResult r = adapt_batch(vision, texts, templates, images, config);
  ASSERT_EQ(r.trace.size(), 10u);
  EXPECT_EQ(r.trace.front().loss, frozen.total);
  EXPECT_EQ(r.trace.front().template_losses, frozen.per_template);
  EXPECT_EQ(r.initial_predictions, frozen.predictions);
}

TEST(AdaptBatch, EpisodicResetRestoresParametersAndMoments) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const auto images = smooth_batch(6, 16, 32);
  const TemplateSet templates = two_templates();
  AdaptationConfig config;
  config.adapt_text = true;
  const auto params = adapted_parameters(vision, text, config);
  const auto before = snapshot(params);
  adapt_batch(vision, text, images, kClasses, templates, config);
  EXPECT_TRUE(params_equal(params, before));
  for (const Param* p : params) {
    EXPECT_TRUE(p->moment1.isZero(0.0));
    EXPECT_TRUE(p->grad.isZero(0.0));
  }

  config.episodic_reset = false;
  adapt_batch(vision, text, images, kClasses, templates, config);
  EXPECT_FALSE(params_equal(params, before));
}

TEST(AdaptBatch, FrozenTextEncoderIsNotTouched) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const auto images = smooth_batch(4, 16, 33);
  AdaptationConfig config;
  config.episodic_reset = false;
  const auto text_params = text.parameters(AdaptSet::kBoth);
  const auto before = snapshot(text_params);
  adapt_batch(vision, text, images, kClasses, two_templates(), config);
  EXPECT_TRUE(params_equal(text_params, before));
  EXPECT_THROW(
      [&] {
        AdaptationConfig bad;
        bad.adapt_text = true;
        adapt_batch(vision, encode_class_texts(text, two_templates(), kClasses), two_templates(), images, bad);
      }(),
      ArgumentError);
}

TEST(AdaptBatch, AdaptSetSelectsParameterFamilies) {
  const auto images = smooth_batch(4, 16, 34);
  ToyTextEncoder text;
  const ClassTexts texts = encode_class_texts(text, two_templates(), kClasses);
  for (const AdaptSet set : {AdaptSet::kLora, AdaptSet::kLayerNorm}) {
    ToyVisionEncoder vision;
    AdaptationConfig config;
    config.adapt_set = set;
    config.episodic_reset = false;
    const AdaptSet other = set == AdaptSet::kLora ? AdaptSet::kLayerNorm : AdaptSet::kLora;
    const auto untouched = snapshot(vision.parameters(other));
    const auto touched = snapshot(vision.parameters(set));
    adapt_batch(vision, texts, two_templates(), images, config);
    EXPECT_TRUE(params_equal(vision.parameters(other), untouched));
    EXPECT_FALSE(params_equal(vision.parameters(set), touched));
  }
}

TEST(AdaptBatch, PermutingTheBatchPermutesPredictions) {
  ToyTextEncoder text;
  const TemplateSet templates = two_templates();
  const ClassTexts texts = encode_class_texts(text, templates, kClasses);
  const auto images = smooth_batch(6, 16, 35);
  const std::vector<int> order{3, 0, 5, 1, 4, 2};
  std::vector<ImageTensor> permuted;
  for (const int i : order) permuted.push_back(images[static_cast<std::size_t>(i)]);
  AdaptationConfig config;
  config.iterations = 3;
  ToyVisionEncoder vision;
  const AdaptResult a = adapt_batch(vision, texts, templates, images, config);
  const AdaptResult b = adapt_batch(vision, texts, templates, permuted, config);
  for (std::size_t j = 0; j < order.size(); ++j) {
    EXPECT_EQ(b.predictions[static_cast<Eigen::Index>(j)], a.predictions[order[j]]);
  }
  for (std::size_t it = 0; it < a.trace.size(); ++it) {
    EXPECT_NEAR(a.trace[it].loss, b.trace[it].loss, 1e-12);
  }
}

TEST(AdaptBatch, RejectsEmptyBatchAndBadConfig) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  EXPECT_THROW(adapt_batch(vision, text, {}, kClasses, two_templates(), AdaptationConfig{}), ArgumentError);
  AdaptationConfig bad;
  bad.temperature = 0.0;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = AdaptationConfig{};
  bad.iterations = -1;
  EXPECT_THROW(bad.validate(), ArgumentError);
  EXPECT_EQ(adapt_set_from_string(to_string(AdaptSet::kLayerNorm)), AdaptSet::kLayerNorm);
  EXPECT_THROW(adapt_set_from_string("everything"), ArgumentError);
}

TEST(GradientSuite, VisionOnlyPassesEveryCoordinate) {
  const auto result = histobench::testing::latte_gradient_suite(false);
  EXPECT_EQ(result.parameter_count, 34u);
  EXPECT_GE(result.distinct_predictions, 2u);
  for (const auto& e : result.report.entries) {
    EXPECT_TRUE(e.passed) << e.name << " max rel err " << e.max_relative_error;
  }
}

TEST(GradientSuite, WithTextAdaptationPassesEveryCoordinate) {
  const auto result = histobench::testing::latte_gradient_suite(true);
  EXPECT_EQ(result.parameter_count, 34u + 18u);
  EXPECT_GE(result.distinct_predictions, 2u);
  for (const auto& e : result.report.entries) {
    EXPECT_TRUE(e.passed) << e.name << " max rel err " << e.max_relative_error;
  }
}

TEST(Tent, EntropyExamplesAndGradient) {
  Matrix onehot = Matrix::Zero(3, 4);
  for (int i = 0; i < 3; ++i) onehot(i, i) = 1.0;
  EXPECT_NEAR(tent_entropy_loss(onehot), 0.0, 1e-12);
  EXPECT_NEAR(tent_entropy_loss(Matrix::Constant(2, 4, 0.25)), std::log(4.0), 1e-15);

  const double tau = 0.3;
  Rng64 rng(40);
  const Matrix logits = nn::gaussian_matrix(3, 4, 1.0, rng);
  const Matrix grad = tent_entropy_grad(nn::softmax_rows(logits, tau), tau);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      Matrix p = logits, m = logits;
      p(i, j) += h;
      m(i, j) -= h;
      const double fd =
          (tent_entropy_loss(nn::softmax_rows(p, tau)) - tent_entropy_loss(nn::softmax_rows(m, tau))) / (2 * h);
      EXPECT_NEAR(fd, grad(i, j), 1e-8);
    }
  }
}

TEST(Tent, AdaptsLayerNormsOnly) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const Matrix classes = average_class_embeddings(encode_class_texts(text, two_templates(), kClasses));
  AdaptationConfig config;
  config.episodic_reset = false;
  const auto lora = snapshot(vision.parameters(AdaptSet::kLora));
  const AdaptResult r = tent_adapt_batch(vision, classes, smooth_batch(6, 16, 41), config);
  EXPECT_TRUE(params_equal(vision.parameters(AdaptSet::kLora), lora));
  ASSERT_EQ(r.trace.size(), 10u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].loss, r.trace[i - 1].loss + 1e-6);
  }
}

TEST(Calibration, FitsOnlyTheProjection) {
  ToyVisionEncoder vision;
  ToyTextEncoder text;
  const Matrix classes = average_class_embeddings(encode_class_texts(text, two_templates(), kClasses));
  const auto images = smooth_batch(6, 16, 42);
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  const auto adaptable = snapshot(vision.parameters(AdaptSet::kBoth));
  const Matrix projection = vision.projection().value;
  CalibrationConfig cc;
  cc.steps = 200;
  cc.learning_rate = 5e-2;
  const double acc = calibrate_projection(vision, classes, images, labels, cc);
  EXPECT_TRUE(params_equal(vision.parameters(AdaptSet::kBoth), adaptable));
  EXPECT_NE(vision.projection().value, projection);
  EXPECT_DOUBLE_EQ(acc, 1.0);
  EXPECT_THROW(calibrate_projection(vision, classes, images, {0, 1}, cc), ArgumentError);
  EXPECT_THROW(calibrate_projection(vision, classes, images, {0, 1, 2, 0, 1, 3}, cc), ArgumentError);
}
