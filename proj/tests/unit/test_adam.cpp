#include <gtest/gtest.h>

#include <cmath>

#include "fcaide/adam.hpp"

using namespace fcaide;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamMap p{{"w", Tensor({3}, 1.25)}};
  AdamState st;
  adam_step(p, {{"w", Tensor({3}, 0.0)}}, st, 0.1);
  EXPECT_EQ(p.at("w"), Tensor({3}, 1.25));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepClosedForm) {
  // Bias correction makes the first update exactly -lr * g / (|g| + eps).
  for (double g : {0.3, -2.0, 1e-3}) {
    ParamMap p{{"w", Tensor::scalar(0.5)}};
    AdamState st;
    adam_step(p, {{"w", Tensor::scalar(g)}}, st, 0.01);
    EXPECT_NEAR(p.at("w").item(), 0.5 - 0.01 * g / (std::abs(g) + 1e-8), 1e-15);
  }
}

TEST(Adam, ConstantGradientStepApproachesLr) {
  ParamMap p{{"w", Tensor::scalar(0.0)}};
  AdamState st;
  double prev = 0.0, step = 0.0;
  for (int t = 0; t < 500; ++t) {
    adam_step(p, {{"w", Tensor::scalar(0.7)}}, st, 1e-3);
    step = prev - p.at("w").item();
    prev = p.at("w").item();
  }
  EXPECT_NEAR(step, 1e-3, 1e-9);
}

TEST(Adam, MinimizesQuadratic) {
  ParamMap p{{"w", Tensor({2}, std::vector<double>{3.0, -2.0})}};
  AdamState st;
  for (int t = 0; t < 3000; ++t) {
    Tensor g({2});
    for (std::size_t i = 0; i < 2; ++i) g[i] = 2.0 * (p.at("w")[i] - 1.0);
    adam_step(p, {{"w", g}}, st, 0.01);
  }
  EXPECT_NEAR(p.at("w")[0], 1.0, 1e-3);
  EXPECT_NEAR(p.at("w")[1], 1.0, 1e-3);
}

TEST(Adam, RejectsBadGradientsWithoutSideEffects) {
  ParamMap p{{"a", Tensor({2}, 1.0)}, {"b", Tensor({2}, 1.0)}};
  AdamState st;
  Tensor bad({2}, 0.0);
  bad[1] = NAN;
  try {
    adam_step(p, {{"a", Tensor({2}, 1.0)}, {"b", bad}}, st, 0.1);
    FAIL();
  } catch (const NonFiniteGradient& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  EXPECT_EQ(p.at("a"), Tensor({2}, 1.0));
  EXPECT_EQ(st.step, 0);
  EXPECT_THROW(adam_step(p, {{"a", Tensor({2}, 1.0)}}, st, 0.1), std::invalid_argument);
  EXPECT_THROW(adam_step(p, {{"a", Tensor({3}, 1.0)}, {"b", Tensor({2}, 1.0)}}, st, 0.1), std::invalid_argument);
}
