#pragma once

// Max-margin linear classifier for the embedding baseline. Full-batch
// subgradient descent on the L2-regularized hinge loss (lambda = 1/(C n),
// step 1/(lambda t)): deterministic, no sampling, adequate for the few
// hundred low-dimensional vectors this pipeline produces.

#include <cstddef>
#include <string>
#include <vector>

#include "adprompt/types.hpp"

namespace adprompt {

struct LinearSvmConfig {
  double c = 1.0;        // inverse regularization strength
  int iterations = 400;  // full-batch subgradient steps
};

class LinearSvm {
 public:
  explicit LinearSvm(LinearSvmConfig config = {}) : config_(config) {}

  // Labels use the canonical class indexing: 0 = AD (side +1),
  // 1 = NonAD (side -1).
  void fit(const std::vector<std::vector<double>>& x,
           const std::vector<int>& y) {
    if (x.empty() || x.size() != y.size())
      throw Error("svm: training set empty or label count mismatch");
    bool has0 = false, has1 = false;
    for (int label : y) {
      if (label != 0 && label != 1)
        throw Error("svm: labels must be class indices 0 or 1");
      (label == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1)
      throw Error("svm: training labels are single-class");

    const std::size_t dim = x[0].size();
    for (const auto& row : x)
      if (row.size() != dim) throw Error("svm: inconsistent feature width");

    const std::size_t n = x.size();
    const double lambda = 1.0 / (config_.c * static_cast<double>(n));
    w_.assign(dim, 0.0);
    b_ = 0.0;
    for (int t = 1; t <= config_.iterations; ++t) {
      double eta = 1.0 / (lambda * t);
      std::vector<double> grad(dim, 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double side = y[i] == 0 ? 1.0 : -1.0;
        if (side * score(x[i]) < 1.0) {
          for (std::size_t d = 0; d < dim; ++d) grad[d] -= side * x[i][d];
          grad_b -= side;
        }
      }
      double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t d = 0; d < dim; ++d)
        w_[d] -= eta * (lambda * w_[d] + grad[d] * inv_n);
      b_ -= eta * grad_b * inv_n;
    }
    fitted_ = true;
  }

  double score(const std::vector<double>& features) const {
    if (features.size() != w_.size())
      throw Error("svm: feature width " + std::to_string(features.size()) +
                  " does not match model width " + std::to_string(w_.size()));
    double s = b_;
    for (std::size_t d = 0; d < w_.size(); ++d) s += w_[d] * features[d];
    return s;
  }

  // Class index; the tie score 0 resolves to the positive class.
  int predict(const std::vector<double>& features) const {
    if (!fitted_) throw Error("svm: predict before fit");
    return score(features) >= 0.0 ? 0 : 1;
  }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  LinearSvmConfig config_;
  std::vector<double> w_;
  double b_ = 0.0;
  bool fitted_ = false;
};

}  // namespace adprompt
