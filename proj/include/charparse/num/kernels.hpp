#pragma once

// Dense kernels behind the tensor ops. Two implementations share one
// signature set: a plain serial reference (kernels_serial.cpp) and an
// OpenMP version (kernels_omp.cpp). The OpenMP kernels compute every
// output element within a single thread in a fixed summation order, so
// results do not depend on the thread count; they may differ from the
// serial reference in final bits because the inner loops are unrolled.
//
// All matrices are row-major, dense, non-aliased.

namespace charparse::kern {

enum class Backend { serial, openmp };

Backend backend();
void set_backend(Backend b);

// c[m,n] (+)= a[m,k] * b[k,n]
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc);

// c[m,n] (+)= a[k,m]^T * b[k,n]
template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool acc);

// c[m,n] (+)= a[m,k] * b[n,k]^T
template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool acc);

// y[m] (+)= a[m,k] * x[k]
template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc);

// y[k] (+)= a[m,k]^T * x[m]
template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc);

// a[m,k] += y[m] * x[k]^T  (rank-1 update)
template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k);

namespace serial {
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc);
template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc);
template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k);
}  // namespace serial

namespace omp {
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc);
template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc);
template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k);
}  // namespace omp

}  // namespace charparse::kern
