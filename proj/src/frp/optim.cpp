#include "frp/optim.hpp"

#include <cmath>

#include "frp/errors.hpp"

namespace frp {

void AdamHyper::validate() const {
  if (!(lr > 0.0)) throw ValidationError("adam: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("adam: beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("adam: epsilon must be > 0");
}

namespace {

// x * 0 is a signed zero for finite x and NaN otherwise; independent lanes
// let the loop vectorize.
bool all_finite(std::span<const double> v) {
  constexpr std::size_t kLanes = 8;
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= v.size(); i += kLanes)
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += v[i + l] * 0.0;
  for (; i < v.size(); ++i) acc[0] += v[i] * 0.0;
  double total = 0.0;
  for (double a : acc) total += a;
  return total == 0.0;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

double lr_at(const LrSchedule& schedule, std::uint64_t t) {
  return std::visit(
      overloaded{
          [](const ConstantLr& s) { return s.lr; },
          [t](const StepDropLr& s) { return t < s.drop_at ? s.lr0 : s.lr1; },
          [t](const ExpDecayLr& s) {
            if (t >= s.total_iters) return s.lr_end;
            const double frac = static_cast<double>(t) / static_cast<double>(s.total_iters);
            return s.lr0 * std::pow(s.lr_end / s.lr0, frac);
          },
      },
      schedule);
}

void validate_schedule(const LrSchedule& schedule, std::uint64_t horizon) {
  std::visit(overloaded{
                 [](const ConstantLr& s) {
                   if (!(s.lr > 0.0)) throw ValidationError("schedule: lr must be > 0");
                 },
                 [horizon](const StepDropLr& s) {
                   if (!(s.lr0 > 0.0) || !(s.lr1 > 0.0)) {
                     throw ValidationError("schedule: step_drop rates must be > 0");
                   }
                   if (s.drop_at > horizon) {
                     throw ValidationError("schedule: drop_at " + std::to_string(s.drop_at) +
                                           " lies beyond the " + std::to_string(horizon) +
                                           "-iteration horizon");
                   }
                 },
                 [](const ExpDecayLr& s) {
                   if (!(s.lr0 > 0.0) || !(s.lr_end > 0.0)) {
                     throw ValidationError("schedule: exp_decay rates must be > 0");
                   }
                   if (s.total_iters < 1) {
                     throw ValidationError("schedule: exp_decay total_iters must be >= 1");
                   }
                 },
             },
             schedule);
}

void adam_step(std::span<const ParamBlock> params, std::span<const std::span<const double>> grads,
               AdamState& state, const AdamHyper& hyper) {
  hyper.validate();
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameter blocks but " +
                     std::to_string(grads.size()) + " gradient blocks");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.size() != grads[b].size()) {
      throw ShapeError("adam: gradient for " + params[b].name + " has " +
                       std::to_string(grads[b].size()) + " entries, parameter has " +
                       std::to_string(params[b].values.size()));
    }
    if (!all_finite(grads[b])) throw NumericError("adam: non-finite gradient in " + params[b].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0);
      state.v.emplace_back(p.values.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: state does not match parameters");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (state.m[b].size() != params[b].values.size()) {
      throw ShapeError("adam: state for " + params[b].name + " has the wrong size");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  const double inv_bc1 = 1.0 / (1.0 - std::pow(b1, t));
  const double inv_bc2 = 1.0 / (1.0 - std::pow(b2, t));
  const double lr = hyper.lr, eps = hyper.epsilon;
  for (std::size_t b = 0; b < params.size(); ++b) {
    double* __restrict theta = params[b].values.data();
    const double* __restrict g = grads[b].data();
    double* __restrict m = state.m[b].data();
    double* __restrict v = state.v[b].data();
    const std::size_t n = params[b].values.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] * inv_bc1;
      const double v_hat = v[i] * inv_bc2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

void adam_step(Network& net, const GradientSet& grads, AdamState& state, const AdamHyper& hyper) {
  const std::vector<std::span<const double>> g = gradient_blocks(net, grads);
  const std::vector<ParamBlock> p = trainable_blocks(net);
  adam_step(p, g, state, hyper);
  net.touch();
}

}  // namespace frp
