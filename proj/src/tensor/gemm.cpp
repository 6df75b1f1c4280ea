#include <algorithm>
#include <cstdint>

#include "hrpose/ops.hpp"

#ifdef HRPOSE_USE_CBLAS
#include <cblas.h>
#endif

namespace hrpose::kernels {

namespace {

#ifdef HRPOSE_USE_CBLAS

void blas(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, const float* a, int lda, const float* b,
          int ldb, float* c) {
  cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, 1.0f, a, lda, b, ldb, 1.0f, c, n);
}

void blas(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, const double* a, int lda, const double* b,
          int ldb, double* c) {
  cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, 1.0, a, lda, b, ldb, 1.0, c, n);
}

}  // namespace

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  blas(CblasNoTrans, CblasNoTrans, m, n, k, a, k, b, n, c);
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  blas(CblasTrans, CblasNoTrans, m, n, k, a, m, b, n, c);
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  blas(CblasNoTrans, CblasTrans, m, n, k, a, k, b, k, c);
}

#else

constexpr int kColBlock = 256;

// C[m x n] += A * B where A(i, p) = a[i * rs + p * cs] and B is k x n row-major.
template <typename T>
void gemm_rows(int m, int n, int k, const T* a, std::int64_t rs, std::int64_t cs, const T* b,
               T* c) {
  for (int j0 = 0; j0 < n; j0 += kColBlock) {
    const int j1 = std::min(n, j0 + kColBlock);
    int i = 0;
    for (; i + 4 <= m; i += 4) {
      T* c0 = c + std::int64_t{i} * n;
      T* c1 = c0 + n;
      T* c2 = c1 + n;
      T* c3 = c2 + n;
      for (int p = 0; p < k; ++p) {
        const T a0 = a[i * rs + p * cs];
        const T a1 = a[(i + 1) * rs + p * cs];
        const T a2 = a[(i + 2) * rs + p * cs];
        const T a3 = a[(i + 3) * rs + p * cs];
        const T* brow = b + std::int64_t{p} * n;
#pragma omp simd
        for (int j = j0; j < j1; ++j) {
          const T bv = brow[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    }
    for (; i < m; ++i) {
      T* c0 = c + std::int64_t{i} * n;
      for (int p = 0; p < k; ++p) {
        const T a0 = a[i * rs + p * cs];
        const T* brow = b + std::int64_t{p} * n;
#pragma omp simd
        for (int j = j0; j < j1; ++j) c0[j] += a0 * brow[j];
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  gemm_rows(m, n, k, a, k, 1, b, c);
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  gemm_rows(m, n, k, a, 1, m, b, c);
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + std::int64_t{i} * k;
    T* crow = c + std::int64_t{i} * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const T* b0 = b + std::int64_t{j} * k;
      const T* b1 = b0 + k;
      const T* b2 = b1 + k;
      const T* b3 = b2 + k;
      T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (int p = 0; p < k; ++p) {
        const T av = arow[p];
        s0 += av * b0[p];
        s1 += av * b1[p];
        s2 += av * b2[p];
        s3 += av * b3[p];
      }
      crow[j] += s0;
      crow[j + 1] += s1;
      crow[j + 2] += s2;
      crow[j + 3] += s3;
    }
    for (; j < n; ++j) {
      const T* b0 = b + std::int64_t{j} * k;
      T s0 = 0;
#pragma omp simd reduction(+ : s0)
      for (int p = 0; p < k; ++p) s0 += arow[p] * b0[p];
      crow[j] += s0;
    }
  }
}

#endif

template void gemm_nn<float>(int, int, int, const float*, const float*, float*);
template void gemm_nn<double>(int, int, int, const double*, const double*, double*);
template void gemm_tn<float>(int, int, int, const float*, const float*, float*);
template void gemm_tn<double>(int, int, int, const double*, const double*, double*);
template void gemm_nt<float>(int, int, int, const float*, const float*, float*);
template void gemm_nt<double>(int, int, int, const double*, const double*, double*);

}  // namespace hrpose::kernels
