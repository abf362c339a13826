// OpenMP kernels. Parallel loops split output elements across threads;
// each element is accumulated by one thread in a fixed order, so output
// bits do not depend on the thread count. Dot products use four
// accumulators combined as (s0+s1)+(s2+s3).

#include "charparse/num/kernels.hpp"

namespace charparse::kern::omp {

namespace {

template <typename T>
inline T dot4(const T* a, const T* b, int k) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int p = 0;
  for (; p + 4 <= k; p += 4) {
    s0 += a[p] * b[p];
    s1 += a[p + 1] * b[p + 1];
    s2 += a[p + 2] * b[p + 2];
    s3 += a[p + 3] * b[p + 3];
  }
  for (; p < k; ++p) s0 += a[p] * b[p];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<long>(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + static_cast<long>(i) * k;
    for (int p = 0; p < k; ++p) {
      T av = ai[p];
      const T* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<long>(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) ci[j] = T(0);
    for (int p = 0; p < k; ++p) {
      T av = a[static_cast<long>(p) * m + i];
      const T* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * k;
    T* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      T s = dot4(ai, b + static_cast<long>(j) * k, k);
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T s = dot4(a + static_cast<long>(i) * k, x, k);
    y[i] = acc ? y[i] + s : s;
  }
}

template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc) {
  // parallel over output chunks; each chunk scans all rows in order
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int j0 = 0; j0 < k; j0 += 256) {
      int j1 = j0 + 256 < k ? j0 + 256 : k;
      if (!acc)
        for (int j = j0; j < j1; ++j) y[j] = T(0);
      for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<long>(i) * k;
        T xv = x[i];
        for (int j = j0; j < j1; ++j) y[j] += xv * ai[j];
      }
    }
  }
}

template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* ai = a + static_cast<long>(i) * k;
    T yv = y[i];
    for (int j = 0; j < k; ++j) ai[j] += yv * x[j];
  }
}

template void gemm<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm<double>(const double*, const double*, double*, int, int, int, bool);
template void gemm_at<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_at<double>(const double*, const double*, double*, int, int, int, bool);
template void gemm_bt<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_bt<double>(const double*, const double*, double*, int, int, int, bool);
template void gemv<float>(const float*, const float*, float*, int, int, bool);
template void gemv<double>(const double*, const double*, double*, int, int, bool);
template void gemv_t<float>(const float*, const float*, float*, int, int, bool);
template void gemv_t<double>(const double*, const double*, double*, int, int, bool);
template void ger<float>(const float*, const float*, float*, int, int);
template void ger<double>(const double*, const double*, double*, int, int);

}  // namespace charparse::kern::omp
