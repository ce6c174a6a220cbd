#pragma once

// Adam with decoupled weight decay. Decay multiplies the parameter by
// (1 - lr*wd) before the gradient step, and is applied only to parameter
// groups the caller opts in; the default configuration decays the
// layer-normalization group and nothing else.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adprompt/types.hpp"

namespace adprompt {

struct AdamWConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  struct GroupRef {
    std::string name;
    std::span<double> params;
    std::span<const double> grads;
    bool apply_decay = false;
  };

  // One optimizer step over all groups; bias correction shares the
  // global step count.
  void step(const std::vector<GroupRef>& groups) {
    ++t_;
    double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (const GroupRef& g : groups) {
      if (g.params.size() != g.grads.size())
        throw Error("adamw: group '" + g.name + "' size mismatch");
      Slot& slot = slots_[g.name];
      if (slot.m.size() != g.params.size()) {
        slot.m.assign(g.params.size(), 0.0);
        slot.v.assign(g.params.size(), 0.0);
      }
      for (std::size_t i = 0; i < g.params.size(); ++i) {
        double grad = g.grads[i];
        if (!std::isfinite(grad))
          throw Error("adamw: non-finite gradient in parameter group '" +
                      g.name + "'");
        if (g.apply_decay)
          g.params[i] *= 1.0 - config_.lr * config_.weight_decay;
        slot.m[i] = config_.beta1 * slot.m[i] + (1.0 - config_.beta1) * grad;
        slot.v[i] =
            config_.beta2 * slot.v[i] + (1.0 - config_.beta2) * grad * grad;
        double m_hat = slot.m[i] / bc1;
        double v_hat = slot.v[i] / bc2;
        g.params[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      }
    }
  }

  const AdamWConfig& config() const { return config_; }
  std::int64_t step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  AdamWConfig config_;
  std::map<std::string, Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace adprompt
