#include "charparse/num/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace charparse::kern {

namespace {

Backend initial_backend() {
  const char* env = std::getenv("CHARPARSE_KERNELS");
  if (env && std::strcmp(env, "serial") == 0) return Backend::serial;
  return Backend::openmp;
}

std::atomic<Backend> g_backend{initial_backend()};

}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  if (backend() == Backend::serial)
    serial::gemm(a, b, c, m, k, n, acc);
  else
    omp::gemm(a, b, c, m, k, n, acc);
}

template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  if (backend() == Backend::serial)
    serial::gemm_at(a, b, c, m, k, n, acc);
  else
    omp::gemm_at(a, b, c, m, k, n, acc);
}

template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  if (backend() == Backend::serial)
    serial::gemm_bt(a, b, c, m, k, n, acc);
  else
    omp::gemm_bt(a, b, c, m, k, n, acc);
}

template <typename T>
void gemv(const T* a, const T* x, T* y, int m, int k, bool acc) {
  if (backend() == Backend::serial)
    serial::gemv(a, x, y, m, k, acc);
  else
    omp::gemv(a, x, y, m, k, acc);
}

template <typename T>
void gemv_t(const T* a, const T* x, T* y, int m, int k, bool acc) {
  if (backend() == Backend::serial)
    serial::gemv_t(a, x, y, m, k, acc);
  else
    omp::gemv_t(a, x, y, m, k, acc);
}

template <typename T>
void ger(const T* y, const T* x, T* a, int m, int k) {
  if (backend() == Backend::serial)
    serial::ger(y, x, a, m, k);
  else
    omp::ger(y, x, a, m, k);
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

}  // namespace charparse::kern
