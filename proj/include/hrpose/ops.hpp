#pragma once

#include "hrpose/tensor.hpp"

namespace hrpose {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
};

// Cross-correlation over NCHW input with weight [Cout, Cin, kh, kw].
// `bias` may be undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

enum class BatchNormMode { kTrain, kEval };

struct BatchNormOptions {
  BatchNormMode mode = BatchNormMode::kTrain;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-channel normalisation. In train mode the batch statistics are used and
// `running_mean` / `running_var` are updated in place with the unbiased
// variance; eval mode reads them. gamma, beta, running stats: [1, C, 1, 1].
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, BatchNormOptions options = {});

// max(0, x). The subgradient at exactly 0 is 0.
Tensor relu(const Tensor& input);

// Replicates each pixel factor x factor times.
Tensor upsample_nearest(const Tensor& input, int factor);

// Non-overlapping mean pooling with window and stride `factor`.
Tensor avg_pool2d(const Tensor& input, int factor);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);

// mean over all elements of weight[n, k] * (pred - target)^2.
// `weight` is either undefined or shaped [N, K, 1, 1].
Tensor mse_loss(const Tensor& pred, const Tensor& target, const Tensor& weight = Tensor());

// Mirrors the W axis.
Tensor flip_horizontal(const Tensor& input);

// Row-major contraction driving conv2d; exposed for tests.
namespace kernels {
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c);
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c);
template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c);
}  // namespace kernels

}  // namespace hrpose
