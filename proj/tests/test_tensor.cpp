#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hrpose/checkpoint.hpp"
#include "hrpose/ops.hpp"
#include "hrpose/optim.hpp"
#include "support/gradcheck.hpp"

using namespace hrpose;
using hrpose::testing::conv2d_reference;
using hrpose::testing::gradcheck;
using hrpose::testing::max_abs_diff;
using hrpose::testing::random_off_zero;
using hrpose::testing::random_tensor;

namespace {

// Per-channel batch statistics computed one scalar at a time.
Tensor batch_norm_reference(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Shape s = x.shape();
  Tensor out = Tensor::zeros(s, x.dtype());
  for (int c = 0; c < s.c; ++c) {
    double mean = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) mean += x.at(n, c, h, w);
    const double count = static_cast<double>(s.n) * s.h * s.w;
    mean /= count;
    double var = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) var += (x.at(n, c, h, w) - mean) * (x.at(n, c, h, w) - mean);
    var /= count;
    for (int n = 0; n < s.n; ++n)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) {
          out.set(n, c, h, w,
                  gamma.flat(c) * (x.at(n, c, h, w) - mean) / std::sqrt(var + eps) + beta.flat(c));
        }
  }
  return out;
}

struct BnState {
  Tensor gamma, beta, mean, var;
  explicit BnState(int c, Rng& rng)
      : gamma(random_tensor({1, c, 1, 1}, rng, 0.5, 1.5)),
        beta(random_tensor({1, c, 1, 1}, rng)),
        mean(Tensor::zeros({1, c, 1, 1}, DType::kFloat64)),
        var(Tensor::full({1, c, 1, 1}, 1.0, DType::kFloat64)) {}
};

}  // namespace

TEST(Tensor, ShapeAndStorage) {
  Tensor t = Tensor::zeros({2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(t.dtype(), DType::kFloat32);
  t.set(1, 2, 3, 4, 7.5);
  EXPECT_DOUBLE_EQ(t.at(1, 2, 3, 4), 7.5);
  EXPECT_DOUBLE_EQ(t.flat(119), 7.5);
  EXPECT_THROW(Tensor::zeros({0, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(Tensor::from({1, 1, 1, 2}, std::vector<float>{1.f}), std::invalid_argument);
}

TEST(Conv2d, IdentityKernel) {
  Tensor x = Tensor::full({1, 1, 1, 1}, 5.0);
  Tensor w = Tensor::full({1, 1, 1, 1}, 1.0);
  EXPECT_DOUBLE_EQ(conv2d(x, w, Tensor()).item(), 5.0);
}

TEST(Conv2d, ZeroInputGivesZeroOutput) {
  Rng rng(1);
  Tensor x = Tensor::zeros({1, 3, 6, 6});
  Tensor w = random_tensor({4, 3, 3, 3}, rng, -1, 1, DType::kFloat32);
  Tensor y = conv2d(x, w, Tensor(), {1, 1});
  for (std::int64_t i = 0; i < y.numel(); ++i) EXPECT_EQ(y.flat(i), 0.0);
}

TEST(Conv2d, MatchesDirectLoopOracle) {
  Rng rng(2);
  Tensor x = random_tensor({1, 2, 4, 4}, rng, -1, 1, DType::kFloat32);
  Tensor w = random_tensor({3, 2, 3, 3}, rng, -1, 1, DType::kFloat32);
  Tensor y = conv2d(x, w, Tensor(), {2, 1});
  EXPECT_EQ(y.shape(), (Shape{1, 3, 2, 2}));
  EXPECT_LT(max_abs_diff(y, conv2d_reference(x, w, Tensor(), 2, 1)), 1e-6);
}

TEST(Conv2d, OracleAcrossGeometries) {
  Rng rng(3);
  struct Case {
    Shape in;
    int cout, k, stride, pad;
  };
  for (const Case& c : {Case{{2, 3, 7, 5}, 4, 3, 1, 1}, Case{{1, 5, 8, 8}, 2, 1, 1, 0},
                        Case{{2, 2, 9, 6}, 3, 3, 2, 0}, Case{{1, 4, 5, 5}, 6, 1, 2, 0},
                        Case{{3, 1, 4, 6}, 2, 5, 1, 2}}) {
    Tensor x = random_tensor(c.in, rng);
    Tensor w = random_tensor({c.cout, c.in.c, c.k, c.k}, rng);
    Tensor b = random_tensor({1, c.cout, 1, 1}, rng);
    Tensor y = conv2d(x, w, b, {c.stride, c.pad});
    EXPECT_EQ(y.shape().h, (c.in.h + 2 * c.pad - c.k) / c.stride + 1);
    EXPECT_LT(max_abs_diff(y, conv2d_reference(x, w, b, c.stride, c.pad)), 1e-12);
  }
}

TEST(Conv2d, Linearity) {
  Rng rng(4);
  Tensor x = random_tensor({2, 3, 6, 6}, rng, -1, 1, DType::kFloat32);
  Tensor y = random_tensor({2, 3, 6, 6}, rng, -1, 1, DType::kFloat32);
  Tensor w = random_tensor({4, 3, 3, 3}, rng, -1, 1, DType::kFloat32);
  const double alpha = 0.7, beta = -1.3;
  Tensor lhs = conv2d(add(scale(x, alpha), scale(y, beta)), w, Tensor(), {1, 1});
  Tensor rhs = add(scale(conv2d(x, w, Tensor(), {1, 1}), alpha),
                   scale(conv2d(y, w, Tensor(), {1, 1}), beta));
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-5);
}

TEST(Conv2d, ShapeErrorsNameTheDimension) {
  Tensor x = Tensor::zeros({1, 3, 4, 4});
  try {
    conv2d(x, Tensor::zeros({2, 4, 3, 3}), Tensor());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.dimension(), "weight.in_channels");
    EXPECT_EQ(e.expected(), 3);
    EXPECT_EQ(e.actual(), 4);
  }
  EXPECT_THROW(conv2d(x, Tensor::zeros({2, 3, 3, 3}), Tensor::zeros({1, 3, 1, 1})), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({2, 3, 7, 7}), Tensor()), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({2, 3, 3, 3}), Tensor(), {0, 0}), std::invalid_argument);
}

TEST(BatchNorm, AlreadyNormalisedInputIsUnchanged) {
  // Two samples per channel at +-1: mean 0, biased variance 1.
  Tensor x = Tensor::zeros({2, 2, 1, 1}, DType::kFloat64);
  x.set(0, 0, 0, 0, 1.0);
  x.set(1, 0, 0, 0, -1.0);
  x.set(0, 1, 0, 0, -1.0);
  x.set(1, 1, 0, 0, 1.0);
  Tensor g = Tensor::full({1, 2, 1, 1}, 1.0, DType::kFloat64);
  Tensor b = Tensor::zeros({1, 2, 1, 1}, DType::kFloat64);
  Tensor m = Tensor::zeros({1, 2, 1, 1}, DType::kFloat64);
  Tensor v = Tensor::full({1, 2, 1, 1}, 1.0, DType::kFloat64);
  Tensor y = batch_norm2d(x, g, b, m, v);
  EXPECT_LT(max_abs_diff(x, y), 1e-3);
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  Rng rng(5);
  Tensor x = random_tensor({3, 2, 4, 4}, rng);
  Tensor g = Tensor::zeros({1, 2, 1, 1}, DType::kFloat64);
  Tensor b = Tensor::from({1, 2, 1, 1}, std::vector<double>{0.25, -2.0});
  Tensor m = Tensor::zeros({1, 2, 1, 1}, DType::kFloat64);
  Tensor v = Tensor::full({1, 2, 1, 1}, 1.0, DType::kFloat64);
  Tensor y = batch_norm2d(x, g, b, m, v);
  for (int n = 0; n < 3; ++n)
    for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(y.at(n, c, 1, 2), b.flat(c));
}

TEST(BatchNorm, MatchesScalarReference) {
  Rng rng(6);
  Tensor x = random_tensor({4, 3, 5, 5}, rng, -2, 3);
  BnState s(3, rng);
  Tensor y = batch_norm2d(x, s.gamma, s.beta, s.mean, s.var);
  EXPECT_LT(max_abs_diff(y, batch_norm_reference(x, s.gamma, s.beta, 1e-5)), 1e-6);

  Tensor xf = x.to(DType::kFloat32);
  Tensor gf = s.gamma.to(DType::kFloat32), bf = s.beta.to(DType::kFloat32);
  Tensor mf = Tensor::zeros({1, 3, 1, 1}), vf = Tensor::full({1, 3, 1, 1}, 1.0);
  EXPECT_LT(max_abs_diff(batch_norm2d(xf, gf, bf, mf, vf),
                         batch_norm_reference(x, s.gamma, s.beta, 1e-5)),
            1e-5);
}

TEST(BatchNorm, RunningStatisticsUseMomentumAndUnbiasedVariance) {
  Tensor x = Tensor::from({4, 1, 1, 1}, std::vector<double>{1, 2, 3, 6});
  Tensor g = Tensor::full({1, 1, 1, 1}, 1.0, DType::kFloat64);
  Tensor b = Tensor::zeros({1, 1, 1, 1}, DType::kFloat64);
  Tensor m = Tensor::zeros({1, 1, 1, 1}, DType::kFloat64);
  Tensor v = Tensor::full({1, 1, 1, 1}, 1.0, DType::kFloat64);
  batch_norm2d(x, g, b, m, v);
  // mean 3, unbiased variance 14/3.
  EXPECT_NEAR(m.item(), 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(v.item(), 0.9 * 1.0 + 0.1 * 14.0 / 3.0, 1e-12);

  BatchNormOptions eval;
  eval.mode = BatchNormMode::kEval;
  Tensor y = batch_norm2d(x, g, b, m, v, eval);
  EXPECT_NEAR(y.flat(3), (6.0 - m.item()) / std::sqrt(v.item() + 1e-5), 1e-12);
}

TEST(BatchNorm, Errors) {
  Tensor x = Tensor::zeros({2, 3, 2, 2});
  Tensor c3 = Tensor::zeros({1, 3, 1, 1});
  Tensor c3b = Tensor::zeros({1, 3, 1, 1});
  Tensor c2 = Tensor::zeros({1, 2, 1, 1});
  Tensor c3c = Tensor::zeros({1, 3, 1, 1});
  EXPECT_THROW(batch_norm2d(x, c2, c3, c3b, c3c), ShapeError);
  BatchNormOptions bad;
  bad.eps = 0.0;
  EXPECT_THROW(batch_norm2d(x, c3, c3, c3b, c3c, bad), std::invalid_argument);
}

TEST(Relu, ForwardAndGradient) {
  Tensor x = Tensor::from({1, 1, 1, 5}, std::vector<double>{-1, 0, 2, 3, -3});
  x.set_requires_grad(true);
  Tensor y = relu(x);
  EXPECT_EQ(y.to_vector(), (std::vector<double>{0, 0, 2, 3, 0}));
  backward(sum(y));
  EXPECT_EQ(x.grad().to_vector(), (std::vector<double>{0, 0, 1, 1, 0}));
}

TEST(Upsample, ReplicationAndGradient) {
  Tensor one = Tensor::full({1, 1, 1, 1}, 7.0);
  Tensor up = upsample_nearest(one, 2);
  EXPECT_EQ(up.shape(), (Shape{1, 1, 2, 2}));
  for (std::int64_t i = 0; i < 4; ++i) EXPECT_EQ(up.flat(i), 7.0);

  Rng rng(7);
  Tensor x = random_tensor({2, 3, 3, 4}, rng);
  x.set_requires_grad(true);
  Tensor y = upsample_nearest(x, 2);
  EXPECT_NEAR(sum(y).item(), 4.0 * sum(x).item(), 1e-12);
  backward(sum(y));
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(x.grad().flat(i), 4.0);

  EXPECT_THROW(upsample_nearest(x, 1), std::invalid_argument);
}

TEST(Upsample, AveragePoolingInvertsIt) {
  Rng rng(8);
  for (int factor : {2, 4, 8}) {
    Tensor x = random_tensor({1, 2, 3, 2}, rng);
    Tensor back = avg_pool2d(upsample_nearest(x, factor), factor);
    EXPECT_EQ(back.shape(), x.shape());
    EXPECT_EQ(back.to_vector(), x.to_vector());
  }
}

TEST(MseLoss, TrivialCases) {
  Rng rng(9);
  Tensor p = random_tensor({2, 3, 4, 4}, rng);
  EXPECT_EQ(mse_loss(p, p).item(), 0.0);
  Tensor q = add(p, Tensor::full(p.shape(), 1.0, DType::kFloat64));
  EXPECT_NEAR(mse_loss(q, p).item(), 1.0, 1e-12);
  EXPECT_NEAR(mse_loss(q, p, Tensor::full({2, 3, 1, 1}, 1.0, DType::kFloat64)).item(), 1.0, 1e-12);
  EXPECT_THROW(mse_loss(p, Tensor::zeros({2, 3, 4, 5}, DType::kFloat64)), ShapeError);
}

TEST(MseLoss, MatchesScalarLoop) {
  Rng rng(10);
  Tensor p = random_tensor({2, 3, 4, 4}, rng);
  Tensor t = random_tensor({2, 3, 4, 4}, rng);
  Tensor w = random_tensor({2, 3, 1, 1}, rng, 0, 1);
  double acc = 0.0, acc_w = 0.0;
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 3; ++k)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          const double d = p.at(n, k, y, x) - t.at(n, k, y, x);
          acc += d * d;
          acc_w += w.at(n, k, 0, 0) * d * d;
        }
  EXPECT_NEAR(mse_loss(p, t).item(), acc / 96.0, 1e-9);
  EXPECT_NEAR(mse_loss(p, t, w).item(), acc_w / 96.0, 1e-9);
  EXPECT_DOUBLE_EQ(mse_loss(p, t, w).item(), mse_loss(t, p, w).item());
}

TEST(Backward, LinearGradientIsTheInput) {
  Rng rng(11);
  Tensor x = random_tensor({1, 2, 3, 3}, rng);
  Tensor w = random_tensor({1, 2, 3, 3}, rng);
  w.set_requires_grad(true);
  backward(sum(mul(w, x)));
  EXPECT_EQ(w.grad().to_vector(), x.to_vector());
}

TEST(Backward, AccumulatesAndRejectsNonScalar) {
  Tensor w = Tensor::full({1, 1, 1, 3}, 2.0, DType::kFloat64);
  w.set_requires_grad(true);
  Tensor loss = sum(mul(w, w));
  backward(loss);
  backward(loss);
  EXPECT_EQ(w.grad().to_vector(), (std::vector<double>{8, 8, 8}));
  EXPECT_THROW(backward(mul(w, w)), std::invalid_argument);
}

TEST(Backward, DisconnectedParameterHasNoGradient) {
  Tensor used = Tensor::full({1, 1, 1, 2}, 1.0, DType::kFloat64).set_requires_grad(true);
  Tensor unused = Tensor::full({1, 1, 1, 2}, 1.0, DType::kFloat64).set_requires_grad(true);
  backward(sum(used));
  EXPECT_TRUE(used.grad().defined());
  EXPECT_FALSE(unused.grad().defined());
}

TEST(Backward, NoGradGuardStopsRecording) {
  Tensor w = Tensor::full({1, 1, 1, 2}, 1.0, DType::kFloat64).set_requires_grad(true);
  Tensor y;
  {
    NoGradGuard guard;
    y = sum(mul(w, w));
  }
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, RepeatedPassesWithZeroingAreIdentical) {
  Rng rng(12);
  Tensor x = random_tensor({2, 2, 5, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng).set_requires_grad(true);
  Tensor g = random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5).set_requires_grad(true);
  Tensor b = random_tensor({1, 3, 1, 1}, rng).set_requires_grad(true);
  Tensor m = Tensor::zeros({1, 3, 1, 1}, DType::kFloat64);
  Tensor v = Tensor::full({1, 3, 1, 1}, 1.0, DType::kFloat64);
  Tensor loss = sum(relu(batch_norm2d(conv2d(x, w, Tensor(), {1, 1}), g, b, m, v)));
  backward(loss);
  const auto first = w.grad().to_vector();
  w.zero_grad();
  g.zero_grad();
  b.zero_grad();
  backward(loss);
  EXPECT_EQ(w.grad().to_vector(), first);
}

// Finite-difference checks, ten seeds per layer type.

TEST(GradCheck, Conv2d) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto f = [](const std::vector<Tensor>& xs) { return conv2d(xs[0], xs[1], xs[2], {2, 1}); };
    auto r = gradcheck(f,
                       {random_tensor({2, 2, 5, 4}, rng), random_tensor({3, 2, 3, 3}, rng),
                        random_tensor({1, 3, 1, 1}, rng)},
                       seed);
    EXPECT_FALSE(r.missing_grad);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " at " << r.worst;
  }
}

TEST(GradCheck, BatchNormTrainAndEval) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (BatchNormMode mode : {BatchNormMode::kTrain, BatchNormMode::kEval}) {
      Rng rng(seed);
      Tensor mean = random_tensor({1, 3, 1, 1}, rng);
      Tensor var = random_tensor({1, 3, 1, 1}, rng, 0.5, 2.0);
      auto f = [&](const std::vector<Tensor>& xs) {
        BatchNormOptions o;
        o.mode = mode;
        Tensor m = mean.clone(), v = var.clone();
        return batch_norm2d(xs[0], xs[1], xs[2], m, v, o);
      };
      auto r = gradcheck(f,
                         {random_tensor({3, 3, 3, 2}, rng, -2, 2),
                          random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5), random_tensor({1, 3, 1, 1}, rng)},
                         seed);
      EXPECT_FALSE(r.missing_grad);
      EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " at " << r.worst;
    }
  }
}

TEST(GradCheck, ReluUpsampleAddMulPoolFlip) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto f = [](const std::vector<Tensor>& xs) {
      Tensor a = relu(xs[0]);
      Tensor b = upsample_nearest(xs[1], 2);
      return flip_horizontal(avg_pool2d(mul(add(a, b), xs[2]), 2));
    };
    auto r = gradcheck(f,
                       {random_off_zero({2, 2, 4, 4}, rng), random_tensor({2, 2, 2, 2}, rng),
                        random_tensor({2, 2, 4, 4}, rng)},
                       seed);
    EXPECT_FALSE(r.missing_grad);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " at " << r.worst;
  }
}

TEST(GradCheck, WeightedMse) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor w = random_tensor({2, 3, 1, 1}, rng, 0, 1);
    auto f = [&](const std::vector<Tensor>& xs) { return mse_loss(xs[0], xs[1], w); };
    auto r = gradcheck(f, {random_tensor({2, 3, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)},
                       seed);
    EXPECT_FALSE(r.missing_grad);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " at " << r.worst;
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter p{"p", Tensor::full({1, 1, 1, 3}, 0.5).set_requires_grad(true)};
  backward(sum(scale(p.value, 0.0)));
  Adam adam({&p});
  adam.step();
  EXPECT_EQ(p.value.to_vector(), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(adam.state().t, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p{"p", Tensor::full({1, 1, 1, 1}, 0.0, DType::kFloat64).set_requires_grad(true)};
  backward(sum(p.value));  // gradient 1
  Adam adam({&p});
  adam.step();
  // m_hat = 1, v_hat = 1, step = lr * 1 / (1 + eps).
  EXPECT_NEAR(p.value.item(), -1e-3 / (1.0 + 1e-8), 1e-12);
  EXPECT_NEAR(std::abs(p.value.item()), 1e-3, 1e-6);
}

TEST(Adam, MinimisesAQuadratic) {
  Parameter p{"w", Tensor::full({1, 1, 1, 1}, 1.0, DType::kFloat64).set_requires_grad(true)};
  AdamOptions o;
  o.lr = 0.01;
  Adam adam({&p}, o);
  long last_t = 0;
  for (int i = 0; i < 200; ++i) {
    adam.zero_grad();
    backward(sum(mul(p.value, p.value)));
    adam.step();
    EXPECT_EQ(adam.state().t, last_t + 1);
    last_t = adam.state().t;
  }
  EXPECT_LT(std::abs(p.value.item()), 0.1);
}

TEST(LrSchedule, Presets) {
  const LrSchedule coco = LrSchedule::coco();
  EXPECT_DOUBLE_EQ(coco.lr_at(0), 1e-3);
  EXPECT_DOUBLE_EQ(coco.lr_at(169), 1e-3);
  EXPECT_DOUBLE_EQ(coco.lr_at(170), 1e-4);
  EXPECT_DOUBLE_EQ(coco.lr_at(200), 1e-5);
  EXPECT_EQ(coco.total_epochs(), 210);
  const LrSchedule pt = LrSchedule::posetrack();
  EXPECT_DOUBLE_EQ(pt.lr_at(9), 1e-4);
  EXPECT_DOUBLE_EQ(pt.lr_at(10), 1e-5);
  EXPECT_DOUBLE_EQ(pt.lr_at(15), 1e-6);
  EXPECT_EQ(pt.total_epochs(), 20);
}

TEST(LrSchedule, RejectsBadMilestones) {
  EXPECT_THROW(LrSchedule(1e-3, {{5, 1e-4}, {5, 1e-5}}, 10), std::invalid_argument);
  EXPECT_THROW(LrSchedule(1e-3, {{10, 1e-4}}, 10), std::invalid_argument);
}

TEST(Checkpoint, RoundTripPreservesBits) {
  Rng rng(13);
  std::vector<NamedTensor> tensors = {
      {"a.weight", random_tensor({2, 3, 3, 3}, rng, -1, 1, DType::kFloat32)},
      {"a.bias", random_tensor({1, 2, 1, 1}, rng)},
  };
  tensors[0].value.set_flat(0, -0.0);
  const auto stem = std::filesystem::temp_directory_path() / "hrpose_ckpt_test";
  save_checkpoint(stem, tensors);
  auto loaded = load_checkpoint(stem);
  ASSERT_EQ(loaded.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(loaded[i].name, tensors[i].name);
    EXPECT_EQ(loaded[i].value.shape(), tensors[i].value.shape());
    EXPECT_EQ(loaded[i].value.dtype(), tensors[i].value.dtype());
    EXPECT_EQ(loaded[i].value.to_vector(), tensors[i].value.to_vector());
  }
  EXPECT_TRUE(std::signbit(loaded[0].value.flat(0)));
}

TEST(Rng, SubstreamsAreIndependentAndStable) {
  Rng a = Rng::substream(7, "init");
  Rng b = Rng::substream(7, "init");
  Rng c = Rng::substream(7, "data");
  const auto x = a.next();
  EXPECT_EQ(x, b.next());
  EXPECT_NE(x, c.next());
  Rng d(3);
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double z = d.normal();
    mean += z;
    sq += z * z;
  }
  EXPECT_NEAR(mean / 20000, 0.0, 0.03);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
}
