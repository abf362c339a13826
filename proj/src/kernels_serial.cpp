// Reference kernels: textbook loops, no unrolling, no pragmas. These are
// the ground truth the OpenMP kernels are tested against.

#include "charparse/num/kernels.hpp"

namespace charparse::kern::serial {

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
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
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * k;
    T* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<long>(j) * k;
      T s = acc ? ci[j] : T(0);
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * k;
    T s = acc ? y[i] : T(0);
    for (int p = 0; p < k; ++p) s += ai[p] * x[p];
    y[i] = s;
  }
}

template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc) {
  if (!acc)
    for (int j = 0; j < k; ++j) y[j] = T(0);
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * k;
    T xv = x[i];
    for (int j = 0; j < k; ++j) y[j] += xv * ai[j];
  }
}

template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k) {
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

}  // namespace charparse::kern::serial
