#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dehaze/haze_model.h"
#include "support.h"

using namespace dehaze;
using testing_support::random_tensor;

TEST(Scattering, RoundTripRecoversClearImage) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1.0), a(0.5, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor j = random_tensor(rng, 3, 5, 7, 0.0, 1.0);
    const Tensor tv = random_tensor(rng, 1, 5, 7, 0.1, 1.0);
    const TransmissionMap t(tv);
    const ScatteringParams p{{a(rng), a(rng), a(rng)}, 1.0};
    const Tensor back = invert_scattering(apply_scattering(j, t, p), t, p);
    for (std::size_t i = 0; i < j.size(); ++i) ASSERT_NEAR(back[i], j[i], 1e-12);
  }
}

TEST(Scattering, UnitTransmissionLeavesImageUnchanged) {
  std::mt19937_64 rng(2);
  const Tensor j = random_tensor(rng, 3, 4, 4, 0.0, 1.0);
  const Tensor i = apply_scattering(j, TransmissionMap::uniform(4, 4, 1.0),
                                    ScatteringParams::gray(0.8, 1.0));
  EXPECT_EQ(i, j);
}

TEST(Scattering, SmallTransmissionApproachesAtmosphericLight) {
  std::mt19937_64 rng(3);
  const Tensor j = random_tensor(rng, 3, 4, 4, 0.0, 1.0);
  const Tensor i = apply_scattering(j, TransmissionMap::uniform(4, 4, 1e-9),
                                    ScatteringParams{{0.7, 0.8, 0.9}, 1.0});
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(i.at(c, 2, 2), 0.7 + 0.1 * c, 1e-8);
}

TEST(Scattering, InversionRefusesTransmissionBelowFloor) {
  const Tensor i(3, 2, 2, 0.5);
  EXPECT_THROW(invert_scattering(i, TransmissionMap::uniform(2, 2, 0.5 * kMinTransmission),
                                 ScatteringParams::gray(0.9, 1.0)),
               std::domain_error);
  EXPECT_NO_THROW(invert_scattering(i, TransmissionMap::uniform(2, 2, kMinTransmission),
                                    ScatteringParams::gray(0.9, 1.0)));
}

TEST(Scattering, MapsValidateTheirRanges) {
  EXPECT_THROW(TransmissionMap(Tensor(1, 2, 2, 0.0)), std::invalid_argument);
  EXPECT_THROW(TransmissionMap(Tensor(1, 2, 2, 1.5)), std::invalid_argument);
  EXPECT_THROW(TransmissionMap(Tensor(3, 2, 2, 0.5)), std::invalid_argument);
  EXPECT_THROW(DepthMap(Tensor(1, 2, 2, -0.1)), std::invalid_argument);
  EXPECT_THROW(DepthMap(Tensor(1, 2, 2, NAN)), std::invalid_argument);
}

TEST(Scattering, TransmissionFromDepth) {
  const DepthMap d = DepthMap::uniform(2, 3, 0.5);
  const TransmissionMap t = transmission_from_depth(d, 2.0);
  EXPECT_DOUBLE_EQ(t(1, 2), std::exp(-1.0));
  EXPECT_EQ(transmission_from_depth(d, 0.0).values(), Tensor(1, 2, 3, 1.0));
  EXPECT_THROW(transmission_from_depth(d, -1.0), std::invalid_argument);
  // Far scenes saturate at a tiny positive transmission instead of zero.
  const TransmissionMap far = transmission_from_depth(DepthMap::uniform(1, 1, 1e6), 5.0);
  EXPECT_GT(far(0, 0), 0.0);
}

TEST(Scattering, AccumulatedError) {
  // 0.1 + 0.1 + 0.01 lands one ulp away from the double nearest 0.21.
  EXPECT_NEAR(accumulate_error({0.1, 0.1}), 0.21, 1e-15);
  EXPECT_EQ(accumulate_error({0.0, 0.0}), 0.0);
  EXPECT_EQ(accumulate_error({0.3, 0.0}), 0.3);
  EXPECT_THROW(accumulate_error({-0.1, 0.1}), std::invalid_argument);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    EXPECT_EQ(accumulate_error({a, b}), accumulate_error({b, a}));
    EXPECT_GE(accumulate_error({a, b}), std::max(a, b));
  }
}

TEST(Scattering, HazeMapIsDifference) {
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor(rng, 3, 3, 3, -1, 1), b = random_tensor(rng, 3, 3, 3, -1, 1);
  EXPECT_EQ(haze_map(a, b), a - b);
}

TEST(Synthesis, ZeroScatteringReturnsClearImage) {
  std::mt19937_64 rng(7);
  const Tensor j = random_tensor(rng, 3, 6, 5, 0.0, 1.0);
  const HazyPair p = synthesize_pair(j, ScatteringParams::gray(0.9, 0.0), std::nullopt);
  EXPECT_EQ(p.haze, j);
  EXPECT_EQ(p.clear, j);
}

TEST(Synthesis, DepthRampMakesTopRowsFarther) {
  SynthesisOptions o;
  o.depth_ramp = 1.0;
  const DepthMap d = synthetic_depth(5, 3, o);
  EXPECT_GT(d(0, 1), d(4, 1));
  EXPECT_DOUBLE_EQ(d(4, 1), o.depth);
}

TEST(Synthesis, SampledParametersStayInRange) {
  std::mt19937_64 rng(8);
  SynthesisOptions o;
  for (int i = 0; i < 100; ++i) {
    const ScatteringParams p = sample_scattering(rng, o);
    EXPECT_GE(p.beta, o.beta_min);
    EXPECT_LE(p.beta, o.beta_max);
    EXPECT_GE(p.alpha[0], o.alpha_min);
    EXPECT_LE(p.alpha[0], o.alpha_max);
  }
}

TEST(Synthesis, HazeIsBrighterAndFlatterThanClear) {
  const Tensor j = testing_support::synthetic_scene(4, 32, 32);
  const HazyPair p = synthesize_pair(j, ScatteringParams::gray(1.0, 1.2), std::nullopt);
  EXPECT_GT(p.haze.min(), j.min());
  EXPECT_LT(p.haze.max() - p.haze.min(), j.max() - j.min());
}
