// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "lcumini/lcu.hpp"
#include "lcumini/vocab.hpp"
#include "test_util.hpp"

using namespace lcumini;
using lcumini::testing::bitwise_equal;
using lcumini::testing::random_mask;
using lcumini::testing::random_tensor;

namespace {

using TF = Tensor<float>;

ConditionUnit<float> blank_unit(std::size_t h, std::size_t w, CuRole role = CuRole::target) {
  return {TF::zeros({3, h, w}), TF::full({1, h, w}, 1.0f), TF::zeros({3, h, w}), role};
}

LcuPlusPlus<float> blank_lcu(std::size_t n, std::size_t size) {
  LcuPlusPlus<float> lcu;
  for (std::size_t i = 0; i < n; ++i) lcu.units.push_back(blank_unit(size, size, i + 1 == n ? CuRole::target : CuRole::reference));
  return lcu;
}

// Independent token oracle: walk the patch grid and count origins.
std::size_t count_patch_origins(std::size_t h, std::size_t w, std::size_t patch) {
  std::size_t n = 0;
  for (std::size_t y = 0; y + patch <= h; y += patch)
    for (std::size_t x = 0; x + patch <= w; x += patch) ++n;
  return n;
}

// Independent cost oracle: multiply-adds of the score matrix and of P*V, two FLOPs each.
std::uint64_t count_attention_flops(std::uint64_t tokens, std::uint64_t dim) {
  std::uint64_t macs = 0;
  for (std::uint64_t i = 0; i < tokens; ++i)
    for (std::uint64_t j = 0; j < tokens; ++j) macs += dim /* q_i . k_j */ + dim /* p_ij * v_j */;
  return 2 * macs;
}

}  // namespace

TEST(TextInstruction, EmptyIffNull) {
  EXPECT_NO_THROW(TextInstruction::null().validate(vocab::kSize));
  EXPECT_THROW(TextInstruction::of({}), ContractError);
  TextInstruction bad{{1}, true};
  EXPECT_THROW(bad.validate(vocab::kSize), ContractError);
}

TEST(TextInstruction, IdsInsideVocabulary) {
  EXPECT_NO_THROW(TextInstruction::of({vocab::kSize - 1}).validate(vocab::kSize));
  EXPECT_THROW(TextInstruction::of({vocab::kSize}).validate(vocab::kSize), ContractError);
}

TEST(Vocab, EncodeDecodeRoundTrip) {
  const auto ids = vocab::encode("fill red disk");
  EXPECT_EQ(ids, (std::vector<std::size_t>{vocab::kFill, vocab::kFirstColor, vocab::kDisk}));
  EXPECT_EQ(vocab::decode(ids), "fill red disk");
  EXPECT_TRUE(vocab::encode("   ").empty());
  EXPECT_THROW(vocab::encode("fill teal"), ConfigError);
}

TEST(ConditionUnit, Validation) {
  auto u = blank_unit(4, 4);
  EXPECT_NO_THROW(u.validate());
  u.mask = TF::full({1, 4, 5}, 1.0f);
  EXPECT_THROW(u.validate(), ShapeError);
  u.mask = TF::full({1, 4, 4}, 0.5f);
  EXPECT_THROW(u.validate(), ContractError);
  u = blank_unit(4, 4);
  u.noisy = TF::zeros({3, 2, 2});
  EXPECT_THROW(u.validate(), ShapeError);
  u = blank_unit(4, 4, CuRole::reference);
  u.mask.mutable_data()[3] = 0.0f;
  EXPECT_THROW(u.validate(), ContractError);
}

TEST(LcuPlusPlus, TargetIsLastAndUnique) {
  auto lcu = blank_lcu(3, 8);
  EXPECT_NO_THROW(lcu.validate());
  std::swap(lcu.units[0], lcu.units[2]);
  EXPECT_THROW(lcu.validate(), ContractError);
  lcu = blank_lcu(2, 8);
  lcu.units[0].role = CuRole::target;
  EXPECT_THROW(lcu.validate(), ContractError);
  EXPECT_THROW(LcuPlusPlus<float>{}.validate(), ContractError);
}

TEST(LcuPlusPlus, UnitsShareGeometry) {
  auto lcu = blank_lcu(2, 8);
  lcu.units[0] = blank_unit(4, 4, CuRole::reference);
  EXPECT_THROW(lcu.validate(), ShapeError);
}

TEST(BuildCuMap, BlankUnitHasOnlyMaskChannelSet) {
  const auto map = build_cu_map(ConditionUnit<float>{TF::zeros({3, 2, 2}), TF::full({1, 2, 2}, 1.0f), TF::zeros({3, 2, 2}),
                                                     CuRole::target});
  ASSERT_EQ(map.shape(), (Shape{7, 2, 2}));
  for (std::size_t c = 0; c < 7; ++c)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(map.data()[c * 4 + i], c == 3 ? 1.0f : 0.0f);
}

TEST(BuildCuMap, ChannelOrderIsImageMaskNoise) {
  ConditionUnit<float> u{random_tensor<float>({3, 4, 4}, 1, false, 0, 1), random_mask(4, 2),
                         random_tensor<float>({3, 4, 4}, 3), CuRole::target};
  const auto map = build_cu_map(u);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(map.data()[c * 16 + i], u.image.data()[c * 16 + i]);
      EXPECT_EQ(map.data()[(4 + c) * 16 + i], u.noisy.data()[c * 16 + i]);
    }
    EXPECT_EQ(map.data()[3 * 16 + i], u.mask.data()[i]);
  }
}

TEST(BuildCuMap, SplitRoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t h = 1 + seed % 7, w = 1 + (seed / 7) % 5;
    Rng rng(seed);
    std::vector<float> m(h * w);
    for (auto& v : m) v = static_cast<float>(rng() & 1u);
    ConditionUnit<float> u{random_tensor<float>({3, h, w}, seed, false, 0, 1), TF::from({1, h, w}, m),
                           random_tensor<float>({3, h, w}, seed + 1000, false, -4, 4), CuRole::target};
    const auto back = split_cu_map(build_cu_map(u), CuRole::target);
    EXPECT_TRUE(bitwise_equal(back.image, u.image));
    EXPECT_TRUE(bitwise_equal(back.mask, u.mask));
    EXPECT_TRUE(bitwise_equal(back.noisy, u.noisy));
  }
  EXPECT_THROW(split_cu_map(TF::zeros({4, 2, 2}), CuRole::target), ShapeError);
}

TEST(TokenLayout, ReferenceGenerationTargetHasZeroImageBlock) {
  auto lcu = blank_lcu(2, 8);
  lcu.units[0].image = random_tensor<float>({3, 8, 8}, 9, false, 0, 1);
  const auto layout = assemble_lcu_pp(lcu, 4);
  const auto target_image = slice(layout.maps[1], 0, 0, 3);
  for (float v : target_image.data()) EXPECT_EQ(v, 0.0f);
}

TEST(TokenLayout, LcuPlusPlusCounts) {
  EXPECT_EQ(count_patch_origins(16, 16, 4), 16u);
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> cases = {
      // N, size, patch, expected total
      {1, 16, 4, 16},
      {3, 16, 4, 48},
      {1, 16, 16, 1},
  };
  for (const auto& [n, size, patch, expected] : cases) {
    const auto layout = assemble_lcu_pp(blank_lcu(n, size), patch);
    EXPECT_EQ(layout.total_tokens, expected);
    EXPECT_EQ(layout.total_tokens, n * count_patch_origins(size, size, patch));
    EXPECT_EQ(layout.maps.size(), n);
    for (const auto& m : layout.maps) EXPECT_EQ(m.dim(0), kCuChannels);
  }
}

TEST(TokenLayout, LegacyCounts) {
  const auto unit = blank_unit(16, 16);
  const auto legacy = assemble_legacy_lcu_0ref(unit, 4);
  EXPECT_EQ(legacy.total_tokens, 32u);
  ASSERT_EQ(legacy.maps.size(), 2u);
  for (const auto& m : legacy.maps) EXPECT_EQ(m.dim(0), kLegacyChannels);
  EXPECT_EQ(assemble_legacy_lcu_0ref(unit, 16).total_tokens, 2u);
  // Mask is carried by both legacy maps and once by the LCU++ map.
  const auto mask_legacy0 = slice(legacy.maps[0], 0, 3, 1), mask_legacy1 = slice(legacy.maps[1], 0, 3, 1);
  EXPECT_TRUE(bitwise_equal(mask_legacy0, unit.mask));
  EXPECT_TRUE(bitwise_equal(mask_legacy1, unit.mask));
}

TEST(TokenLayout, NonDivisiblePatchIsShapeError) {
  EXPECT_THROW(assemble_lcu_pp(blank_lcu(1, 10), 4), ShapeError);
  EXPECT_THROW(assemble_legacy_lcu_0ref(blank_unit(10, 10), 4), ShapeError);
  EXPECT_THROW(patches_per_map(8, 8, 0), ShapeError);
}

// Any 0-ref geometry: legacy has twice the tokens and four times the attention FLOPs.
TEST(TokenLayout, LegacyRatiosHoldForRandomGeometries) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t patch = 1 + rng() % 4;
    const std::size_t h = patch * (1 + rng() % 6), w = patch * (1 + rng() % 6);
    const std::uint64_t d = 1 + rng() % 64;
    const auto unit = blank_unit(h, w);
    const auto legacy = assemble_legacy_lcu_0ref(unit, patch);
    const auto lcupp = assemble_lcu_pp(LcuPlusPlus<float>{TextInstruction::null(), {unit}}, patch);
    EXPECT_EQ(legacy.total_tokens, 2 * lcupp.total_tokens);
    EXPECT_EQ(lcupp.total_tokens, count_patch_origins(h, w, patch));
    EXPECT_EQ(attention_cost(legacy, d), 4 * attention_cost(lcupp, d));
  }
}

TEST(AttentionCost, MatchesCountingOracle) {
  for (std::uint64_t t : {1u, 2u, 7u, 16u, 32u})
    for (std::uint64_t d : {1u, 8u, 64u}) EXPECT_EQ(attention_cost(t, d), count_attention_flops(t, d));
  EXPECT_EQ(attention_cost(1, 8), 32u);
  EXPECT_EQ(attention_cost(32, 8), 4 * attention_cost(16, 8));
  EXPECT_THROW(attention_cost(0, 8), ContractError);
}
