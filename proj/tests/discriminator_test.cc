#include <gtest/gtest.h>

#include <random>

#include "dehaze/discriminator.h"
#include "support.h"

using namespace dehaze;
using testing_support::random_tensor;

TEST(Spp, CellBounds) {
  EXPECT_EQ(spp_cell(0, 1, 7), std::make_pair(0, 7));
  EXPECT_EQ(spp_cell(0, 2, 5), std::make_pair(0, 3));
  EXPECT_EQ(spp_cell(1, 2, 5), std::make_pair(2, 5));
  EXPECT_EQ(spp_cell(2, 3, 9), std::make_pair(6, 9));
  // Every pixel falls into some cell.
  for (int size = 4; size < 30; ++size) {
    for (int n = 1; n <= 4; ++n) {
      EXPECT_EQ(spp_cell(0, n, size).first, 0);
      EXPECT_EQ(spp_cell(n - 1, n, size).second, size);
      for (int i = 0; i + 1 < n; ++i) {
        EXPECT_LE(spp_cell(i + 1, n, size).first, spp_cell(i, n, size).second);
      }
    }
  }
}

TEST(Spp, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(1);
  for (int h = 4; h <= 17; ++h) {
    for (int w = 4; w <= 13; ++w) {
      const Tensor x = random_tensor(rng, 2, h, w, -1, 1);
      EXPECT_EQ(spp_pool(x, 4).values, testing_support::ref_spp(x, 4)) << h << "x" << w;
    }
  }
}

TEST(Spp, LengthAndUndersizedInput) {
  EXPECT_EQ(spp_length(512, 4), 512 * 30);
  EXPECT_EQ(spp_length(7, 1), 7);
  EXPECT_THROW(spp_pool(Tensor(2, 3, 9), 4), std::invalid_argument);
}

TEST(Spp, BackwardRoutesToArgmax) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, 1, 6, 6, -1, 1);
  const SppResult r = spp_pool(x, 2);
  std::vector<double> g(r.values.size(), 1.0);
  const Tensor gx = spp_backward(r, g);
  double total = 0.0;
  for (double v : gx.values()) total += v;
  EXPECT_DOUBLE_EQ(total, 5.0);
  EXPECT_EQ(gx[r.argmax[0]] >= 1.0, true);
}

TEST(Discriminator, HeadWidthIsIndependentOfInputSize) {
  Discriminator d(DiscriminatorSpec::canonical(16));
  d.initialize(3);
  std::mt19937_64 rng(4);
  for (auto [h, w] : std::vector<std::pair<int, int>>{{25, 25}, {64, 64}, {40, 97}, {130, 66}}) {
    const Tensor a = random_tensor(rng, 3, h, w, -1, 1);
    d.forward(a, a);
    EXPECT_EQ(d.last_head_width(), 32 * 30);
  }
}

TEST(Discriminator, MinimumInputSize) {
  DiscriminatorSpec spec = DiscriminatorSpec::canonical(16);
  EXPECT_EQ(spec.min_input_size(), 25);
  Discriminator d(spec);
  d.initialize(5);
  EXPECT_NO_THROW(d.forward(Tensor(3, 25, 25), Tensor(3, 25, 25)));
  EXPECT_THROW(d.forward(Tensor(3, 24, 40), Tensor(3, 24, 40)), std::invalid_argument);
}

TEST(Discriminator, ProbabilityIsSigmoidOfLogit) {
  Discriminator d(DiscriminatorSpec::canonical(16));
  d.initialize(6);
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor(rng, 3, 32, 32, -1, 1), b = random_tensor(rng, 3, 32, 32, -1, 1);
  const double logit = d.forward(a, b);
  EXPECT_DOUBLE_EQ(d.discriminate(a, b), sigmoid(logit));
  EXPECT_GT(sigmoid(800.0), 0.99);
  EXPECT_GE(sigmoid(-800.0), 0.0);
}

TEST(Discriminator, MiniatureGradientCheck) {
  DiscriminatorSpec spec;
  spec.conv_channels = {2, 3, 3, 4};
  Discriminator d(spec);
  d.initialize(8, 0.3);
  std::mt19937_64 rng(9);
  Tensor cond = random_tensor(rng, 3, 27, 26, -1, 1);
  Tensor cand = random_tensor(rng, 3, 27, 26, -1, 1);
  auto loss = [&]() { return d.forward(cond, cand); };
  loss();
  const ParameterList params = d.parameters();
  zero_grads(params);
  const auto grads = d.backward(1.0);
  const auto check = testing_support::check_parameters(params, loss, rng, 12, 1e-6);
  EXPECT_LT(check.relative_error(), 1e-5);
  testing_support::GradCheck inputs;
  for (std::size_t i = 0; i < cand.size(); i += 37) {
    inputs.analytic.push_back(grads.candidate[i]);
    inputs.numeric.push_back(testing_support::central_difference(loss, &cand[i], 1e-6));
    inputs.analytic.push_back(grads.condition[i]);
    inputs.numeric.push_back(testing_support::central_difference(loss, &cond[i], 1e-6));
  }
  EXPECT_LT(inputs.relative_error(), 1e-5);
}
