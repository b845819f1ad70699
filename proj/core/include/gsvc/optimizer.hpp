// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"
#include "gsvc/quant.hpp"
#include "gsvc/rasterizer.hpp"

namespace gsvc {

/// Base learning rates per parameter group. Position steps are in
/// frame-normalized units (x / width); Cholesky steps act on the unconstrained
/// softplus coordinates of l1 and l3 and directly on l2.
struct LearningRates {
  double mu = 5e-3;
  double chol = 2e-3;
  double color = 5e-3;
};

enum class ScheduleKind : std::uint8_t { kConstant = 0, kStepDecay = 1 };

struct FitConfig {
  int max_iters = 1000;
  std::optional<double> target_psnr;
  LearningRates lr;
  ScheduleKind schedule = ScheduleKind::kStepDecay;
  /// Step decay multiplies the base rates by `decay` at each milestone
  /// (fractions of max_iters).
  double decay = 0.5;
  double first_milestone = 0.60;
  double second_milestone = 0.85;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  /// Quantization-aware fitting: render from quantize-dequantized parameters
  /// and pass gradients straight through the rounding.
  bool quant_in_loop = false;
  /// Fraction of max_iters run on float parameters before quantization
  /// enters the loop.
  double quant_start = 0.0;
  /// Spec used in the loop. When absent or uncalibrated the ranges are
  /// recalibrated from the current parameters at every step.
  std::optional<QuantSpec> quant_spec;

  /// When set, only these Gaussian IDs are updated.
  std::optional<std::vector<std::uint32_t>> active_set;

  int checkpoint_every = 50;

  /// Throws InvalidParameter on max_iters < 1, non-positive rates or an
  /// active set with IDs >= set_size.
  void validate(std::size_t set_size) const;
  /// Canonical text form, used for the stream's config digest.
  std::string canonical() const;
};

/// FitConfig presets: fast = 1000 iterations, slow = 10000 iterations.
FitConfig preset_config(std::string_view name);

struct FitCheckpoint {
  int iteration = 0;
  double psnr = 0.0;
  double loss = 0.0;
  /// Mean loss over the iterations since the previous checkpoint.
  double window_loss = 0.0;
};

struct FitReport {
  int iterations = 0;
  std::vector<FitCheckpoint> trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double final_psnr = 0.0;
  double seconds = 0.0;
  bool early_stopped = false;
  /// The quantization spec the returned set was fitted against (QAT only).
  std::optional<QuantSpec> quant_spec;
};

struct FitResult {
  GaussianSet set;
  FitReport report;
};

/// Per-group learning rates at `iter`.
LearningRates lr_schedule(int iter, const FitConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<ParamVec> grads;
  Image render;  // unclamped render the loss was computed on
};

/// Mean squared error over ROI pixels (all three channels) of the unclamped
/// render against `target`, and its gradient with respect to every
/// parameter. With `quant_spec`, the render uses fake-quantized parameters
/// and the gradient is passed straight through. Throws InvalidParameter on an
/// empty mask.
LossAndGrad loss_and_grad(const Rasterizer& raster, const GaussianSet& set, const Image& target,
                          const RoiMask& mask, const QuantSpec* quant_spec = nullptr);

/// Fits `init` to `target` with Adam. Parameters outside the active set are
/// returned bit-identical. Throws FitDivergence on a non-finite loss.
FitResult fit(const Rasterizer& raster, const GaussianSet& init, const Image& target,
              const RoiMask& mask, const FitConfig& cfg);

}  // namespace gsvc
