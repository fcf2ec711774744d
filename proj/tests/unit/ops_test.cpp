#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nli/autograd/ops.hpp"
#include "nli/errors.hpp"
#include "support/oracles.hpp"

namespace nli {
namespace {

using T = Tensor<double>;

void expect_values(const T& t, std::initializer_list<double> want, double tol = 1e-12) {
  ASSERT_EQ(t.size(), want.size());
  std::size_t i = 0;
  for (double w : want) EXPECT_NEAR(t[i++], w, tol) << "index " << i - 1;
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  expect_values(matmul(T({2, 2}, {1, 0, 0, 1}), T({2, 2}, {1, 2, 3, 4})), {1, 2, 3, 4});
}

TEST(Matmul, RowTimesColumn) { expect_values(matmul(T({1, 2}, {1, 2}), T({2, 1}, {3, 4})), {11}); }

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(T({2, 3}), T({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2 x 3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientOfSumWithIdentity) {
  T a({2, 2}, {1, 1, 1, 1}, true);
  T b({2, 2}, {1, 0, 0, 1});
  GradTape<double> tape;
  TapeScope<double> scope(tape);
  tape.backward(sum(matmul(a, b)));
  EXPECT_EQ(std::vector<double>(a.grad().begin(), a.grad().end()), std::vector<double>({1, 1, 1, 1}));
}

TEST(Matmul, AssociativeOnSmallIntegers) {
  std::mt19937_64 rng(1);
  auto ints = [&](Shape s) {
    std::vector<double> v(shape_size(s));
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng() % 7) - 3);
    return T(s, v);
  };
  const T a = ints({3, 4}), b = ints({4, 2}), c = ints({2, 5});
  const T left = matmul(matmul(a, b), c);
  const T right = matmul(a, matmul(b, c));
  for (std::size_t i = 0; i < left.size(); ++i) EXPECT_EQ(left[i], right[i]);
}

TEST(BatchedMatmul, TransposeMatchesExplicit) {
  std::mt19937_64 rng(2);
  const T a = testing::random_tensor<double>({2, 3, 4}, rng);
  const T b = testing::random_tensor<double>({2, 5, 4}, rng);
  const T got = batched_matmul(a, b, true);
  ASSERT_EQ(got.shape(), Shape({2, 3, 5}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < 4; ++k) s += a[n * 12 + i * 4 + k] * b[n * 20 + j * 4 + k];
        EXPECT_NEAR(got[n * 15 + i * 5 + j], s, 1e-12);
      }
}

TEST(Softmax, UniformOnEqualInputs) {
  expect_values(softmax(T({3}, {0, 0, 0}), 0), {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST(Softmax, MaskedEntryGetsZeroWeight) {
  expect_values(softmax(T({2}, {masked_score<double>(), 0}), 0), {0, 1});
}

TEST(Softmax, HandValues) { expect_values(softmax(T({3}, {1, 2, 3}), 0), {0.09003, 0.24473, 0.66524}, 1e-5); }

TEST(Softmax, RowsSumToOneAlongEitherAxis) {
  std::mt19937_64 rng(3);
  const T x = testing::random_tensor<double>({4, 5}, rng, -20, 20);
  const T rows = softmax(x, 1);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_GE(rows[r * 5 + c], 0);
      s += rows[r * 5 + c];
    }
    EXPECT_NEAR(s, 1, 1e-6);
  }
  const T cols = softmax(x, 0);
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < 4; ++r) s += cols[r * 5 + c];
    EXPECT_NEAR(s, 1, 1e-6);
  }
}

TEST(Softmax, StableForLargeInputs) {
  const Tensor<float> p = softmax(Tensor<float>({2}, {1000.0f, 999.0f}), 0);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0], 1 / (1 + std::exp(-1.0)), 1e-6);
}

TEST(Gelu, ReferencePoints) {
  const T g = gelu(T({3}, {0, 1, -10}));
  EXPECT_EQ(g[0], 0);
  EXPECT_NEAR(g[1], testing::gelu_reference(1.0), 1e-15);
  EXPECT_LT(std::abs(g[2]), 1e-5);
}

TEST(LayerNorm, ConstantRowCollapsesToBias) {
  expect_values(layer_norm(T({1, 3}, {4, 4, 4}), T({3}, {1, 1, 1}), T({3}, {0, 0, 0}), 1e-5), {0, 0, 0});
}

TEST(LayerNorm, TwoPointRow) {
  expect_values(layer_norm(T({1, 2}, {1, 3}), T({2}, {1, 1}), T({2}, {0, 0}), 1e-12), {-1, 1}, 1e-9);
  expect_values(layer_norm(T({1, 2}, {1, 3}), T({2}, {2, 2}), T({2}, {5, 5}), 1e-12), {3, 7}, 1e-9);
}

TEST(LayerNorm, MeanZeroUnitVariance) {
  std::mt19937_64 rng(4);
  const T x = testing::random_tensor<double>({6, 16}, rng, -5, 5);
  const T y = layer_norm(x, T::filled({16}, 1), T::filled({16}, 0), 1e-5);
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 16; ++c) mean += y[r * 16 + c] / 16;
    for (std::size_t c = 0; c < 16; ++c) var += (y[r * 16 + c] - mean) * (y[r * 16 + c] - mean) / 16;
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1, 1e-4);
  }
}

TEST(LayerNorm, GainShapeChecked) {
  EXPECT_THROW(layer_norm(T({2, 3}), T({2}), T({3}), 1e-5), DimensionError);
}

TEST(MaskedFill, SingleElementUnchanged) { expect_values(masked_fill(T({1, 1}, std::vector<double>{0.7}), CausalMask{}), {0.7}); }

TEST(MaskedFill, StrictUpperTriangle) {
  const T m = masked_fill(T({2, 2}, {1, 2, 3, 4}), CausalMask{});
  EXPECT_EQ(m[0], 1);
  EXPECT_EQ(m[1], masked_score<double>());
  EXPECT_EQ(m[2], 3);
  EXPECT_EQ(m[3], 4);
}

TEST(MaskedFill, FirstRowAttendsOnlyToItself) {
  std::mt19937_64 rng(5);
  const T w = softmax(masked_fill(testing::random_tensor<double>({3, 3}, rng), CausalMask{}), 1);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_EQ(w[2], 0.0);
  EXPECT_EQ(w[5], 0.0);
}

TEST(MaskedFill, RejectsNonSquare) { EXPECT_THROW(masked_fill(T({2, 3}), CausalMask{}), DimensionError); }

TEST(GatherRows, ScatterAddsGradient) {
  T table({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<std::int64_t> idx = {2, 0, 2};
  GradTape<double> tape;
  TapeScope<double> scope(tape);
  const T rows = gather_rows(table, std::span<const std::int64_t>(idx));
  expect_values(rows, {5, 6, 1, 2, 5, 6});
  tape.backward(sum(rows));
  EXPECT_EQ(std::vector<double>(table.grad().begin(), table.grad().end()), std::vector<double>({1, 1, 0, 0, 2, 2}));
}

TEST(GatherRows, OutOfRangeIndex) {
  const std::vector<std::int64_t> idx = {3};
  EXPECT_THROW(gather_rows(T({3, 2}), std::span<const std::int64_t>(idx)), ContractViolation);
}

TEST(Heads, SplitThenMergeRoundTrips) {
  std::mt19937_64 rng(6);
  const std::size_t batch = 2, seq = 3, heads = 2, width = 4;
  const T x = testing::random_tensor<double>({batch * seq, heads * width}, rng);
  const T split = split_heads(x, batch, seq, heads, 0, width);
  ASSERT_EQ(split.shape(), Shape({batch * heads, seq, width}));
  // head 1 of batch 1, time 2, column 3 -> x[row 5, col 7]
  EXPECT_EQ(split[((1 * heads + 1) * seq + 2) * width + 3], x[5 * 8 + 7]);
  const T merged = merge_heads(split, batch, heads);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(merged[i], x[i]);
}

TEST(Dropout, RateZeroIsIdentityAndRateScales) {
  std::mt19937_64 rng(7);
  const T x = T::filled({1000}, 1.0);
  const T same = dropout(x, 0.0, rng);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(same[i], 1.0);
  const T dropped = dropout(x, 0.5, rng);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (dropped[i] == 0) {
      ++zeros;
    } else {
      EXPECT_EQ(dropped[i], 2.0);
    }
  }
  EXPECT_GT(zeros, 400u);
  EXPECT_LT(zeros, 600u);
}

TEST(AddBias, BroadcastsOverRows) {
  expect_values(add_bias(T({2, 2}, {1, 2, 3, 4}), T({2}, {10, 20})), {11, 22, 13, 24});
  EXPECT_THROW(add_bias(T({2, 2}), T({3})), DimensionError);
}

}  // namespace
}  // namespace nli
