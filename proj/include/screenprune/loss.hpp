#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "screenprune/tensor.hpp"

namespace screenprune {

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;  // (softmax - onehot) / k
};

/// Mean cross-entropy over the batch, with the gradient w.r.t. logits.
inline LossResult cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw std::invalid_argument("cross_entropy_loss: logits must be 2-d");
  const std::size_t k = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != k)
    throw std::invalid_argument("cross_entropy_loss: label count does not match batch");
  LossResult res;
  res.dlogits = Tensor({k, classes});
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("cross_entropy_loss: label out of range");
    const float* row = logits.data() + s * classes;
    double max_logit = row[0];
    for (std::size_t c = 1; c < classes; ++c) max_logit = std::max<double>(max_logit, row[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(double(row[c]) - max_logit);
    total += std::log(denom) - (double(row[y]) - max_logit);
    float* d = res.dlogits.data() + s * classes;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(double(row[c]) - max_logit) / denom;
      d[c] = static_cast<float>((p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / double(k));
    }
  }
  res.loss = total / double(k);
  return res;
}

/// Index of the largest logit per row; ties resolve to the lower class index.
inline std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t k = logits.dim(0), classes = logits.dim(1);
  std::vector<int> out(k);
  for (std::size_t s = 0; s < k; ++s) {
    const float* row = logits.data() + s * classes;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (row[c] > row[best]) best = c;
    out[s] = static_cast<int>(best);
  }
  return out;
}

}  // namespace screenprune
