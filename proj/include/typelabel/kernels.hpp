#pragma once

#include <cstddef>
#include <span>

namespace typelabel::kernels {

// Batched numeric cores for the typing model. All matrices are row-major:
// W is [d x h], U is [n x h], P and G are [n x d], GU is [n x h].
//
// The OpenMP variants parallelize over independent rows and keep every
// accumulation in a fixed order, so their results are bit-identical to the
// serial reference in kernels::ref for any thread count.

double sigmoid(double z);

// P[i] = sigmoid(W * U[i]) for each sample row i.
void batch_linear_sigmoid(const double* W, int d, int h, const double* U, int n, double* P);

// grad_W[t*h+j] = sum_i G[i*d+t] * U[i*h+j]; grad_W is overwritten.
void batch_classifier_grad(const double* G, const double* U, int n, int d, int h,
                           double* grad_W);

// GU[i] = W^T * G[i] for each sample row i.
void batch_input_grad(const double* W, int d, int h, const double* G, int n, double* GU);

// Fixed-order sum of per-sample values.
double sum(std::span<const double> values);

namespace ref {

void batch_linear_sigmoid(const double* W, int d, int h, const double* U, int n, double* P);
void batch_classifier_grad(const double* G, const double* U, int n, int d, int h,
                           double* grad_W);
void batch_input_grad(const double* W, int d, int h, const double* G, int n, double* GU);
double sum(std::span<const double> values);

}  // namespace ref

}  // namespace typelabel::kernels
