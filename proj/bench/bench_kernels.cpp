// Timing comparison between the serial reference kernels and the OpenMP
// ones, over shapes resembling desk-scale and full-vocabulary training.
// Run manually: build/bench/bench_kernels [repeats]

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "typelabel/kernels.hpp"

namespace {

struct Shape {
  int n, d, h;
};

double time_once(const std::function<void()>& fn) {
  double start = omp_get_wtime();
  fn();
  return omp_get_wtime() - start;
}

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e30;
  for (int r = 0; r < repeats; ++r) best = std::min(best, time_once(fn));
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::vector<Shape> shapes = {{64, 50, 64}, {64, 1024, 128}, {32, 10331, 256}};

  std::printf("threads available: %d\n", omp_get_max_threads());
  std::printf("%-24s %-10s %12s %12s %8s\n", "kernel", "n x d x h", "serial_ms", "omp_ms",
              "speedup");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (const Shape& s : shapes) {
    std::vector<double> W(static_cast<std::size_t>(s.d) * s.h);
    std::vector<double> U(static_cast<std::size_t>(s.n) * s.h);
    std::vector<double> G(static_cast<std::size_t>(s.n) * s.d);
    std::vector<double> P(static_cast<std::size_t>(s.n) * s.d);
    std::vector<double> gradW(W.size());
    std::vector<double> GU(U.size());
    for (auto* v : {&W, &U, &G})
      for (double& x : *v) x = dist(rng);

    char dims[32];
    std::snprintf(dims, sizeof(dims), "%dx%dx%d", s.n, s.d, s.h);

    double t_ser = best_of(repeats, [&] {
      typelabel::kernels::ref::batch_linear_sigmoid(W.data(), s.d, s.h, U.data(), s.n, P.data());
    });
    double t_omp = best_of(repeats, [&] {
      typelabel::kernels::batch_linear_sigmoid(W.data(), s.d, s.h, U.data(), s.n, P.data());
    });
    std::printf("%-24s %-10s %12.3f %12.3f %7.2fx\n", "linear_sigmoid", dims, t_ser * 1e3,
                t_omp * 1e3, t_ser / t_omp);

    t_ser = best_of(repeats, [&] {
      typelabel::kernels::ref::batch_classifier_grad(G.data(), U.data(), s.n, s.d, s.h,
                                                     gradW.data());
    });
    t_omp = best_of(repeats, [&] {
      typelabel::kernels::batch_classifier_grad(G.data(), U.data(), s.n, s.d, s.h,
                                                gradW.data());
    });
    std::printf("%-24s %-10s %12.3f %12.3f %7.2fx\n", "classifier_grad", dims, t_ser * 1e3,
                t_omp * 1e3, t_ser / t_omp);

    t_ser = best_of(repeats, [&] {
      typelabel::kernels::ref::batch_input_grad(W.data(), s.d, s.h, G.data(), s.n, GU.data());
    });
    t_omp = best_of(repeats, [&] {
      typelabel::kernels::batch_input_grad(W.data(), s.d, s.h, G.data(), s.n, GU.data());
    });
    std::printf("%-24s %-10s %12.3f %12.3f %7.2fx\n", "input_grad", dims, t_ser * 1e3,
                t_omp * 1e3, t_ser / t_omp);
  }
  return 0;
}
