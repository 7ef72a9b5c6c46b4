#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "screenprune/network.hpp"

namespace screenprune {

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  bool nesterov = true;
  double dampening = 0.0;
  double weight_decay = 1e-4;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("SgdConfig: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("SgdConfig: momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("SgdConfig: weight_decay must be >= 0");
  }
};

/// Momentum buffers, same slot layout as NetGrads. Empty until first step.
struct SgdState {
  std::vector<std::vector<Tensor>> velocity;
};

/// One SGD update: weight decay, then (Nesterov) momentum. Parameters at
/// masked positions stay exactly zero (their gradients arrive zeroed and the
/// masks are re-applied afterwards).
inline void sgd_step(Network& net, const NetGrads& grads, const SgdConfig& cfg, double lr,
                     SgdState& state) {
  if (grads.layers.size() != net.layer_count())
    throw std::invalid_argument("sgd_step: gradient structure does not match network");
  if (state.velocity.empty()) state.velocity.resize(net.layer_count());
  const float mu = static_cast<float>(cfg.momentum);
  const float wd = static_cast<float>(cfg.weight_decay);
  const float damp = static_cast<float>(1.0 - cfg.dampening);
  const float step_lr = static_cast<float>(lr);
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    auto params = net.param_slots(li);
    if (params.empty()) continue;
    if (grads.layers[li].size() != params.size())
      throw std::invalid_argument("sgd_step: gradient slots do not match layer parameters");
    auto& vel = state.velocity[li];
    if (vel.empty())
      for (auto* p : params) vel.emplace_back(p->shape());
    for (std::size_t slot = 0; slot < params.size(); ++slot) {
      Tensor& w = *params[slot];
      const Tensor& g = grads.layers[li][slot];
      Tensor& v = vel[slot];
      if (!g.same_shape(w)) throw std::invalid_argument("sgd_step: gradient shape mismatch");
      float* wp = w.data();
      const float* gp = g.data();
      float* vp = v.data();
      const std::size_t n = w.size();
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const float gi = gp[i] + wd * wp[i];
        vp[i] = mu * vp[i] + damp * gi;
        const float step = cfg.nesterov ? gi + mu * vp[i] : vp[i];
        wp[i] -= step_lr * step;
      }
    }
  }
  net.apply_masks();
}

struct LrSchedule {
  enum class Kind { halve_every_n, step_at_fractions };
  Kind kind = Kind::halve_every_n;
  double initial_lr = 0.1;
  std::size_t period = 10;               // halve_every_n
  std::vector<double> fractions;         // step_at_fractions
  double divisor = 2.0;
  std::size_t total_epochs = 0;          // step_at_fractions

  static LrSchedule halve_every_n(double initial, std::size_t period, double divisor = 2.0) {
    LrSchedule s;
    s.kind = Kind::halve_every_n;
    s.initial_lr = initial;
    s.period = period;
    s.divisor = divisor;
    return s;
  }

  static LrSchedule step_at_fractions(double initial, std::vector<double> fractions,
                                      double divisor, std::size_t total_epochs) {
    LrSchedule s;
    s.kind = Kind::step_at_fractions;
    s.initial_lr = initial;
    s.fractions = std::move(fractions);
    s.divisor = divisor;
    s.total_epochs = total_epochs;
    return s;
  }

  static LrSchedule constant(double lr) {
    LrSchedule s;
    s.kind = Kind::halve_every_n;
    s.initial_lr = lr;
    s.period = 0;  // never drops
    return s;
  }

  void validate() const {
    if (!(initial_lr > 0.0)) throw std::invalid_argument("LrSchedule: initial_lr must be > 0");
    if (divisor < 1.0) throw std::invalid_argument("LrSchedule: divisor must be >= 1");
    if (kind == Kind::step_at_fractions) {
      if (total_epochs == 0)
        throw std::invalid_argument("LrSchedule: step_at_fractions needs total_epochs");
      for (double f : fractions)
        if (f <= 0.0 || f >= 1.0)
          throw std::invalid_argument("LrSchedule: fractions must be in (0, 1)");
    }
  }
};

/// Learning rate for a (0-based) epoch; positive and non-increasing in epoch.
inline double lr_at(const LrSchedule& schedule, std::size_t epoch) {
  switch (schedule.kind) {
    case LrSchedule::Kind::halve_every_n: {
      if (schedule.period == 0) return schedule.initial_lr;
      const std::size_t drops = epoch / schedule.period;
      return schedule.initial_lr / std::pow(schedule.divisor, double(drops));
    }
    case LrSchedule::Kind::step_at_fractions: {
      std::size_t drops = 0;
      for (double f : schedule.fractions)
        if (double(epoch) >= f * double(schedule.total_epochs)) ++drops;
      return schedule.initial_lr / std::pow(schedule.divisor, double(drops));
    }
  }
  return schedule.initial_lr;
}

}  // namespace screenprune
