#include "typelabel/kernels.hpp"

#include <cmath>

namespace typelabel::kernels {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void batch_linear_sigmoid(const double* W, int d, int h, const double* U, int n, double* P) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* u = U + static_cast<std::size_t>(i) * h;
    double* p = P + static_cast<std::size_t>(i) * d;
    for (int t = 0; t < d; ++t) {
      const double* w = W + static_cast<std::size_t>(t) * h;
      double z = 0.0;
      for (int j = 0; j < h; ++j) z += w[j] * u[j];
      p[t] = sigmoid(z);
    }
  }
}

void batch_classifier_grad(const double* G, const double* U, int n, int d, int h,
                           double* grad_W) {
  // Each thread owns whole rows of grad_W; the sample loop stays in order.
#pragma omp parallel for schedule(static)
  for (int t = 0; t < d; ++t) {
    double* row = grad_W + static_cast<std::size_t>(t) * h;
    for (int j = 0; j < h; ++j) row[j] = 0.0;
    for (int i = 0; i < n; ++i) {
      double g = G[static_cast<std::size_t>(i) * d + t];
      if (g == 0.0) continue;
      const double* u = U + static_cast<std::size_t>(i) * h;
      for (int j = 0; j < h; ++j) row[j] += g * u[j];
    }
  }
}

void batch_input_grad(const double* W, int d, int h, const double* G, int n, double* GU) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* g = G + static_cast<std::size_t>(i) * d;
    double* gu = GU + static_cast<std::size_t>(i) * h;
    for (int j = 0; j < h; ++j) gu[j] = 0.0;
    for (int t = 0; t < d; ++t) {
      if (g[t] == 0.0) continue;
      const double* w = W + static_cast<std::size_t>(t) * h;
      for (int j = 0; j < h; ++j) gu[j] += g[t] * w[j];
    }
  }
}

double sum(std::span<const double> values) { return ref::sum(values); }

namespace ref {

void batch_linear_sigmoid(const double* W, int d, int h, const double* U, int n, double* P) {
  for (int i = 0; i < n; ++i) {
    const double* u = U + static_cast<std::size_t>(i) * h;
    double* p = P + static_cast<std::size_t>(i) * d;
    for (int t = 0; t < d; ++t) {
      const double* w = W + static_cast<std::size_t>(t) * h;
      double z = 0.0;
      for (int j = 0; j < h; ++j) z += w[j] * u[j];
      p[t] = sigmoid(z);
    }
  }
}

void batch_classifier_grad(const double* G, const double* U, int n, int d, int h,
                           double* grad_W) {
  for (int t = 0; t < d; ++t) {
    double* row = grad_W + static_cast<std::size_t>(t) * h;
    for (int j = 0; j < h; ++j) row[j] = 0.0;
    for (int i = 0; i < n; ++i) {
      double g = G[static_cast<std::size_t>(i) * d + t];
      if (g == 0.0) continue;
      const double* u = U + static_cast<std::size_t>(i) * h;
      for (int j = 0; j < h; ++j) row[j] += g * u[j];
    }
  }
}

void batch_input_grad(const double* W, int d, int h, const double* G, int n, double* GU) {
  for (int i = 0; i < n; ++i) {
    const double* g = G + static_cast<std::size_t>(i) * d;
    double* gu = GU + static_cast<std::size_t>(i) * h;
    for (int j = 0; j < h; ++j) gu[j] = 0.0;
    for (int t = 0; t < d; ++t) {
      if (g[t] == 0.0) continue;
      const double* w = W + static_cast<std::size_t>(t) * h;
      for (int j = 0; j < h; ++j) gu[j] += g[t] * w[j];
    }
  }
}

double sum(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

}  // namespace ref

}  // namespace typelabel::kernels
