#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "frp/network.hpp"

namespace frp {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Moment accumulators, one vector per parameter block. Empty until the
/// first step sizes them.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

struct ConstantLr {
  double lr = 1e-3;
  friend bool operator==(const ConstantLr&, const ConstantLr&) = default;
};
struct StepDropLr {
  double lr0 = 1e-4;
  std::uint64_t drop_at = 3000;
  double lr1 = 1e-5;
  friend bool operator==(const StepDropLr&, const StepDropLr&) = default;
};
/// lr0 * (lr_end / lr0)^(t / total_iters), held at lr_end past total_iters.
struct ExpDecayLr {
  double lr0 = 5e-3;
  double lr_end = 5e-4;
  std::uint64_t total_iters = 1000;
  friend bool operator==(const ExpDecayLr&, const ExpDecayLr&) = default;
};

using LrSchedule = std::variant<ConstantLr, StepDropLr, ExpDecayLr>;

double lr_at(const LrSchedule& schedule, std::uint64_t t);
/// Rates positive; a StepDrop point must lie within [0, horizon].
void validate_schedule(const LrSchedule& schedule, std::uint64_t horizon);

/// One Adam update with bias correction over aligned parameter/gradient
/// blocks. All gradients are checked before anything is written, so a
/// non-finite entry leaves parameters and state untouched.
void adam_step(std::span<const ParamBlock> params, std::span<const std::span<const double>> grads,
               AdamState& state, const AdamHyper& hyper);
void adam_step(Network& net, const GradientSet& grads, AdamState& state, const AdamHyper& hyper);

}  // namespace frp
