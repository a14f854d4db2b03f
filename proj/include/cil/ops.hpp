#pragma once

#include <functional>

#include "cil/tensor.hpp"

namespace cil {

// Shift-invariant softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

// -log(probs[target]); probs[target] clamped to >= 1e-300 before the log.
double cross_entropy(const Tensor& probs, int target);

// y = x^T W + b with x len D, W D x M (row-major), b len M.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Central-difference gradient oracle used by the test suites.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h = 1e-4);

// argmax with ties broken by the smallest index
int argmax(const Tensor& v);

} // namespace cil
