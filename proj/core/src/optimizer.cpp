// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

namespace {

struct MaskedLoss {
  double loss = 0.0;
  Image grad;
};

std::size_t roi_pixels(const RoiMask& mask, FrameDims dims) {
  if (mask.dims() != dims) throw InvalidParameter("fit: mask dimensions differ from target");
  const std::size_t n = mask.count();
  if (n == 0) throw InvalidParameter("fit: mask selects no pixels");
  return n;
}

// MSE over ROI pixels and channels, plus dLoss/dC.
MaskedLoss masked_mse(const Image& render, const Image& target, const RoiMask& mask,
                      std::size_t roi_count) {
  MaskedLoss out{0.0, Image(render.dims(), 0.0)};
  const double scale = 1.0 / (3.0 * static_cast<double>(roi_count));
  const auto& r = render.data();
  const auto& t = target.data();
  auto& g = out.grad.data();
  const auto& bits = mask.bits();
  double sum = 0.0;
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (!bits[p]) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = r[p * 3 + c] - t[p * 3 + c];
      sum += d * d;
      g[p * 3 + c] = 2.0 * d * scale;
    }
  }
  out.loss = sum * scale;
  return out;
}

double clamped_psnr(const Image& unclamped, const Image& target, const RoiMask& mask,
                    std::size_t roi_count) {
  const auto& r = unclamped.data();
  const auto& t = target.data();
  const auto& bits = mask.bits();
  double sum = 0.0;
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (!bits[p]) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = std::clamp(r[p * 3 + c], 0.0, 1.0) - t[p * 3 + c];
      sum += d * d;
    }
  }
  return psnr_from_mse(sum / (3.0 * static_cast<double>(roi_count)));
}

// Unconstrained optimizer coordinates: normalized position, softplus^-1 of
// the Cholesky diagonal, raw l2 and color.
ParamVec to_raw(const Gaussian2D& g, FrameDims dims) {
  return {g.mu.x / dims.width, g.mu.y / dims.height, softplus_inverse(g.chol.l1), g.chol.l2,
          softplus_inverse(g.chol.l3), g.color.r, g.color.g, g.color.b};
}

Gaussian2D from_raw(const ParamVec& raw, FrameDims dims) {
  return Gaussian2D{{raw[0] * dims.width, raw[1] * dims.height},
                    {softplus(raw[2]), raw[3], softplus(raw[4])},
                    {raw[5], raw[6], raw[7]}};
}

ParamVec raw_gradient(const ParamVec& grad, const ParamVec& raw, FrameDims dims) {
  ParamVec g = grad;
  g[0] *= dims.width;
  g[1] *= dims.height;
  g[2] *= softplus_derivative(raw[2]);
  g[4] *= softplus_derivative(raw[4]);
  return g;
}

double group_rate(const LearningRates& lr, std::size_t k) {
  if (k < 2) return lr.mu;
  if (k < 5) return lr.chol;
  return lr.color;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void FitConfig::validate(std::size_t set_size) const {
  if (max_iters < 1) throw InvalidParameter("FitConfig: max_iters must be >= 1");
  if (!(lr.mu > 0.0) || !(lr.chol > 0.0) || !(lr.color > 0.0)) {
    throw InvalidParameter("FitConfig: learning rates must be positive");
  }
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidParameter("FitConfig: decay must be in (0,1]");
  if (checkpoint_every < 1) throw InvalidParameter("FitConfig: checkpoint_every must be >= 1");
  if (!(quant_start >= 0.0 && quant_start < 1.0)) {
    throw InvalidParameter("FitConfig: quant_start must be in [0,1)");
  }
  if (active_set) {
    for (auto id : *active_set) {
      if (id >= set_size) {
        throw InvalidParameter("FitConfig: active-set ID " + std::to_string(id) +
                               " out of range");
      }
    }
  }
}

std::string FitConfig::canonical() const {
  std::string s;
  s += "max_iters=" + std::to_string(max_iters);
  s += ";target_psnr=" + (target_psnr ? format_double(*target_psnr) : std::string("none"));
  s += ";lr_mu=" + format_double(lr.mu);
  s += ";lr_chol=" + format_double(lr.chol);
  s += ";lr_color=" + format_double(lr.color);
  s += ";schedule=" + std::to_string(static_cast<int>(schedule));
  s += ";decay=" + format_double(decay);
  s += ";milestones=" + format_double(first_milestone) + "," + format_double(second_milestone);
  s += ";adam=" + format_double(beta1) + "," + format_double(beta2) + "," +
       format_double(adam_eps);
  s += ";quant_in_loop=" + std::to_string(quant_in_loop ? 1 : 0);
  s += ";quant_start=" + format_double(quant_start);
  return s;
}

FitConfig preset_config(std::string_view name) {
  FitConfig cfg;
  if (name == "fast") {
    cfg.max_iters = 1000;
  } else if (name == "slow") {
    cfg.max_iters = 10000;
  } else {
    throw InvalidParameter("unknown preset '" + std::string(name) + "' (expected fast|slow)");
  }
  return cfg;
}

LearningRates lr_schedule(int iter, const FitConfig& cfg) {
  if (cfg.schedule == ScheduleKind::kConstant) return cfg.lr;
  const auto milestone = [&](double fraction) {
    return static_cast<int>(std::floor(fraction * cfg.max_iters));
  };
  double factor = 1.0;
  if (iter >= milestone(cfg.first_milestone)) factor *= cfg.decay;
  if (iter >= milestone(cfg.second_milestone)) factor *= cfg.decay;
  return {cfg.lr.mu * factor, cfg.lr.chol * factor, cfg.lr.color * factor};
}

LossAndGrad loss_and_grad(const Rasterizer& raster, const GaussianSet& set, const Image& target,
                          const RoiMask& mask, const QuantSpec* quant_spec) {
  if (target.dims() != set.dims()) throw InvalidParameter("loss_and_grad: dimension mismatch");
  const std::size_t roi = roi_pixels(mask, set.dims());
  const GaussianSet eval = quant_spec ? fake_quantize(set, *quant_spec) : set;
  const PreparedScene scene = raster.prepare(eval);
  Image render = raster.render_unclamped(scene);
  MaskedLoss l = masked_mse(render, target, mask, roi);
  return {l.loss, raster.backward(scene, l.grad), std::move(render)};
}

FitResult fit(const Rasterizer& raster, const GaussianSet& init, const Image& target,
              const RoiMask& mask, const FitConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate(init.size());
  const FrameDims dims = init.dims();
  if (target.dims() != dims) throw InvalidParameter("fit: target dimensions differ from set");
  const std::size_t roi = roi_pixels(mask, dims);
  const std::size_t n = init.size();

  std::vector<std::uint8_t> active(n, cfg.active_set ? 0 : 1);
  if (cfg.active_set) {
    for (auto id : *cfg.active_set) active[id] = 1;
  }
  const bool any_active = std::find(active.begin(), active.end(), 1) != active.end();

  const bool refine_spec = cfg.quant_in_loop && (!cfg.quant_spec || !cfg.quant_spec->calibrated);
  const int quant_from = static_cast<int>(cfg.quant_start * cfg.max_iters);
  int iteration = 0;
  auto spec_for = [&](const GaussianSet& s) -> std::optional<QuantSpec> {
    if (!cfg.quant_in_loop || iteration < quant_from) return std::nullopt;
    if (!refine_spec) return cfg.quant_spec;
    const QuantSpec base = cfg.quant_spec.value_or(QuantSpec{});
    return calibrate_ptq(std::span<const GaussianSet>(&s, 1), base);
  };
  struct Evaluation {
    PreparedScene scene;
    Image render;
    MaskedLoss loss;
    std::optional<QuantSpec> spec;
  };
  auto evaluate = [&](const GaussianSet& s) {
    Evaluation e;
    e.spec = spec_for(s);
    e.scene = raster.prepare(e.spec ? fake_quantize(s, *e.spec) : s);
    e.render = raster.render_unclamped(e.scene);
    e.loss = masked_mse(e.render, target, mask, roi);
    return e;
  };

  FitResult result{init, {}};
  FitReport& report = result.report;
  GaussianSet& current = result.set;

  std::vector<ParamVec> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) raw[i] = to_raw(init[i], dims);
  }
  OptimizerState state;
  state.first_moment.assign(n, ParamVec{});
  state.second_moment.assign(n, ParamVec{});

  double window_sum = 0.0;
  int window_count = 0;
  const int iters = any_active ? cfg.max_iters : 0;
  for (int it = 0; it < iters; ++it) {
    iteration = it;
    Evaluation e = evaluate(current);
    const double loss = e.loss.loss;
    if (!std::isfinite(loss)) {
      throw FitDivergence(it, "fit: non-finite loss at iteration " + std::to_string(it));
    }
    if (it == 0) report.initial_loss = loss;
    window_sum += loss;
    ++window_count;

    const bool checkpoint = it % cfg.checkpoint_every == 0;
    if (checkpoint || cfg.target_psnr) {
      const double p = clamped_psnr(e.render, target, mask, roi);
      if (checkpoint) {
        report.trace.push_back({it, p, loss, window_sum / window_count});
        window_sum = 0.0;
        window_count = 0;
      }
      if (cfg.target_psnr && p >= *cfg.target_psnr) {
        report.early_stopped = true;
        break;
      }
    }

    const std::vector<ParamVec> grads = raster.backward(e.scene, e.loss.grad);
    const LearningRates lr = lr_schedule(it, cfg);
    ++state.step;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    auto gaussians = current.mutable_gaussians();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const ParamVec g = raw_gradient(grads[i], raw[i], dims);
      ParamVec& m = state.first_moment[i];
      ParamVec& v = state.second_moment[i];
      bool moved = false;
      for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
        const double step = (m[k] / bias1) / (std::sqrt(v[k] / bias2) + cfg.adam_eps);
        const double next = raw[i][k] - group_rate(lr, k) * step;
        moved = moved || next != raw[i][k];
        raw[i][k] = next;
      }
      // The raw round trip is not bit-exact; leave untouched Gaussians alone
      // so that ulp noise is not fed back into the adaptive step.
      if (moved) gaussians[i] = from_raw(raw[i], dims);
    }
    report.iterations = it + 1;
  }

  iteration = std::max(quant_from, report.iterations);
  const Evaluation last = evaluate(current);
  if (!std::isfinite(last.loss.loss)) {
    throw FitDivergence(report.iterations, "fit: non-finite loss after iteration " +
                                               std::to_string(report.iterations));
  }
  if (report.iterations == 0 && report.trace.empty()) report.initial_loss = last.loss.loss;
  report.final_loss = last.loss.loss;
  report.final_psnr = clamped_psnr(last.render, target, mask, roi);
  if (report.trace.empty() || report.trace.back().iteration != report.iterations) {
    report.trace.push_back({report.iterations, report.final_psnr, report.final_loss,
                            window_count ? window_sum / window_count : report.final_loss});
  }
  report.quant_spec = last.spec;
  if (any_active) current.set_optimizer_state(std::move(state));
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gsvc
