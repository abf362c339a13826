// Times the serial reference kernels against the OpenMP kernels and cross
// checks their outputs. Usage: bench_kernels [size] [reps] [threads].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "charparse/num/kernels.hpp"
#include "charparse/util/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace charparse;

namespace {

using clk = std::chrono::steady_clock;

template <typename F>
double time_best(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clk::now();
    f();
    auto t1 = clk::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

template <typename T>
void fill(std::vector<T>& v, Rng& rng) {
  for (T& x : v) x = static_cast<T>(rng.uniform(-1, 1));
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <typename T>
void bench(const char* prec, int n, int reps) {
  Rng rng(42);
  std::vector<T> a(static_cast<size_t>(n) * n), b(static_cast<size_t>(n) * n);
  std::vector<T> c_ser(static_cast<size_t>(n) * n), c_omp(static_cast<size_t>(n) * n);
  std::vector<T> x(static_cast<size_t>(n)), y_ser(static_cast<size_t>(n)),
      y_omp(static_cast<size_t>(n));
  fill(a, rng);
  fill(b, rng);
  fill(x, rng);

  double flops_mm = 2.0 * n * n * n;
  double flops_mv = 2.0 * n * n;

  double ts = time_best(reps, [&] { kern::serial::gemm(a.data(), b.data(), c_ser.data(), n, n, n, false); });
  double to = time_best(reps, [&] { kern::omp::gemm(a.data(), b.data(), c_omp.data(), n, n, n, false); });
  std::printf("%s gemm   %4d  serial %7.2f GF/s  openmp %7.2f GF/s  speedup %.2fx  maxdiff %.2e\n",
              prec, n, flops_mm / ts / 1e9, flops_mm / to / 1e9, ts / to,
              max_abs_diff(c_ser, c_omp));

  ts = time_best(reps, [&] { kern::serial::gemv(a.data(), x.data(), y_ser.data(), n, n, false); });
  to = time_best(reps, [&] { kern::omp::gemv(a.data(), x.data(), y_omp.data(), n, n, false); });
  std::printf("%s gemv   %4d  serial %7.2f GF/s  openmp %7.2f GF/s  speedup %.2fx  maxdiff %.2e\n",
              prec, n, flops_mv / ts / 1e9, flops_mv / to / 1e9, ts / to,
              max_abs_diff(y_ser, y_omp));

  ts = time_best(reps, [&] { kern::serial::gemv_t(a.data(), x.data(), y_ser.data(), n, n, false); });
  to = time_best(reps, [&] { kern::omp::gemv_t(a.data(), x.data(), y_omp.data(), n, n, false); });
  std::printf("%s gemv_t %4d  serial %7.2f GF/s  openmp %7.2f GF/s  speedup %.2fx  maxdiff %.2e\n",
              prec, n, flops_mv / ts / 1e9, flops_mv / to / 1e9, ts / to,
              max_abs_diff(y_ser, y_omp));
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 512;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  if (n < 8 || reps < 1) {
    std::fprintf(stderr, "usage: bench_kernels [size>=8] [reps>=1] [threads]\n");
    return 2;
  }
#ifdef _OPENMP
  if (argc > 3) omp_set_num_threads(std::atoi(argv[3]));
  std::printf("openmp max threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without openmp\n");
#endif
  bench<float>("f32", n, reps);
  bench<double>("f64", n, reps);
  return 0;
}
