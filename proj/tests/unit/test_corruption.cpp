#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "histobench/corruption.hpp"
#include "histobench/image_io.hpp"
#include "histobench/photometric.hpp"
#include "histobench/stain.hpp"

using namespace histobench;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ArgumentError& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST(CorruptionKind, NamesRoundTripAndTenKinds) {
  EXPECT_EQ(all_corruption_kinds().size(), 10u);
  std::set<std::string> names;
  for (CorruptionKind k : all_corruption_kinds()) {
    EXPECT_NE(k, CorruptionKind::kNone);
    EXPECT_EQ(parse_kind(kind_name(k)), k);
    names.insert(std::string(kind_name(k)));
  }
  EXPECT_EQ(names.size(), 10u);
  EXPECT_EQ(parse_kind("none"), CorruptionKind::kNone);
  EXPECT_NE(error_of([] { parse_kind("fog"); }).find("\"fog\""), std::string::npos);
}

TEST(CorruptionSpec, ParseChainsAndMergesDefaults) {
  const auto spec = CorruptionSpec::parse("stain-heavy+gaussian-noise", 42);
  ASSERT_EQ(spec.stages.size(), 2u);
  EXPECT_EQ(spec.stages[0].kind, CorruptionKind::kStainHeavy);
  EXPECT_EQ(spec.stages[0].params.at("theta"), stain::kStainHeavyTheta);
  EXPECT_EQ(spec.stages[1].params, default_params(CorruptionKind::kGaussianNoise));
  EXPECT_EQ(spec.global_seed, 42u);
  EXPECT_EQ(spec.name(), "stain-heavy+gaussian-noise");
  EXPECT_NO_THROW(spec.validate());
}

TEST(CorruptionSpec, OverridesByKeyAndQualifiedKey) {
  const auto a = CorruptionSpec::parse("motion-blur", 1, {{"length", 9.0}});
  EXPECT_EQ(a.stages[0].params.at("length"), 9.0);
  const auto b = CorruptionSpec::parse("dust+air-bubble", 1, {{"dust.count_max", 4.0}, {"rim_alpha", 0.1}});
  EXPECT_EQ(b.stages[0].params.at("count_max"), 4.0);
  EXPECT_EQ(b.stages[1].params.at("count_max"), default_params(CorruptionKind::kAirBubble).at("count_max"));
  EXPECT_EQ(b.stages[1].params.at("rim_alpha"), 0.1);

  EXPECT_NE(error_of([] { CorruptionSpec::parse("dust+air-bubble", 1, {{"count_max", 4.0}}); }).find("ambiguous"),
            std::string::npos);
  EXPECT_NE(error_of([] { CorruptionSpec::parse("contrast", 1, {{"sigma", 0.1}}); }).find("does not apply"),
            std::string::npos);
  EXPECT_FALSE(error_of([] { CorruptionSpec::parse("contrast", 1, {{"contrast.gain", 0.1}}); }).empty());
  EXPECT_FALSE(error_of([] { CorruptionSpec::parse("contrast++dust", 1); }).empty());
}

TEST(CorruptionSpec, ValidateNamesTheParameter) {
  EXPECT_NE(error_of([] { CorruptionSpec::parse("defocus-blur", 1, {{"radius", 0.0}}); }).find("radius"),
            std::string::npos);
  EXPECT_NE(error_of([] { CorruptionSpec::parse("motion-blur", 1, {{"length", 2.5}}); }).find("integer"),
            std::string::npos);
  CorruptionSpec edited = CorruptionSpec::parse("stain-light", 1);
  edited.stages[0].params["theta"] = 1.5;
  EXPECT_NE(error_of([&] { edited.validate(); }).find("theta"), std::string::npos);
  edited.stages[0].params.erase("theta");
  EXPECT_NE(error_of([&] { edited.validate(); }).find("missing"), std::string::npos);
  EXPECT_FALSE(error_of([] { CorruptionSpec{}.validate(); }).empty());
}

TEST(CorruptionSpec, ParamAssignment) {
  EXPECT_EQ(parse_param_assignment("sigma=0.25"), (std::pair<std::string, double>{"sigma", 0.25}));
  EXPECT_FALSE(error_of([] { parse_param_assignment("sigma"); }).empty());
  EXPECT_FALSE(error_of([] { parse_param_assignment("sigma=loud"); }).empty());
}

TEST(ApplyCorruption, SeededPerImageAndChainedWithOneGenerator) {
  const ImageTensor x = histobench::testing::smooth_image(24, 24, 1);
  const auto spec = CorruptionSpec::parse("gaussian-noise+shot-noise", 42);
  const ImageTensor y = apply_corruption(x, spec, "img-7");
  EXPECT_EQ(apply_corruption(x, spec, "img-7"), y);
  EXPECT_NE(apply_corruption(x, spec, "img-8"), y);

  Rng64 rng(derive_image_seed(42, "img-7"));
  const ImageTensor manual = photometric::shot_noise(
      photometric::gaussian_noise(x, default_params(CorruptionKind::kGaussianNoise).at("sigma"), rng),
      default_params(CorruptionKind::kShotNoise).at("c"), rng);
  EXPECT_EQ(y, manual);
}

TEST(ApplyCorruption, EveryKindKeepsShapeAndRange) {
  const ImageTensor x = histobench::testing::smooth_image(40, 40, 2);
  EXPECT_EQ(apply_corruption(x, CorruptionSpec::parse("none", 1), "a"), x);
  for (CorruptionKind k : all_corruption_kinds()) {
    const ImageTensor y = apply_corruption(x, CorruptionSpec::parse(kind_name(k), 1), "a");
    EXPECT_EQ(y.height(), 40);
    EXPECT_TRUE(y.is_valid()) << kind_name(k);
  }
}

TEST(CorruptBytes, MatchesThePngPath) {
  histobench::testing::TempDir dir;
  const ImageTensor x = histobench::testing::random_image(64, 60, 4);
  save_image(x, dir / "x.png");
  const ImageTensor loaded = load_image(dir / "x.png");
  for (CorruptionKind k : all_corruption_kinds()) {
    const auto spec = CorruptionSpec::parse(kind_name(k), 42);
    save_image(apply_corruption(loaded, spec, "x"), dir / "y.png");
    EXPECT_EQ(corrupt_bytes(to_bytes(loaded), 64, 60, spec, "x"), to_bytes(load_image(dir / "y.png")))
        << kind_name(k);
  }
}
