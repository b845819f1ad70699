// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

// gsvc command line: encode, decode, report, inspect.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gsvc/bitsback.hpp"
#include "gsvc/error.hpp"
#include "gsvc/io.hpp"
#include "gsvc/pipeline.hpp"

namespace {

using namespace gsvc;

struct EncodeArgs {
  std::string input;
  std::string output;
  std::string mask_dir;
  std::string metrics;
  std::string preset = "fast";
  std::optional<int> iters;
  std::optional<double> target_psnr;
  std::optional<double> lr_mu, lr_chol, lr_color;
  std::string init = "superpixel";
  std::string quant = "ptq";
  std::vector<int> background;
  bool no_dilate = false;
  bool quiet = false;
  EncodeOptions options;
};

struct DecodeArgs {
  std::string input;
  std::string output;
  unsigned threads = 0;
};

struct ReportArgs {
  std::vector<std::string> streams;
  std::string reference;
  std::string csv;
  bool bitsback = false;
  unsigned threads = 0;
};

void add_encode(CLI::App& app, EncodeArgs& a) {
  EncodeOptions& o = a.options;
  app.add_option("-i,--input", a.input, "Frame directory, .y4m file or single image")->required();
  app.add_option("-o,--output", a.output, "Output stream path")->required();
  app.add_option("--mask-dir", a.mask_dir, "ROI masks: directory (one per frame or one total) or file");
  app.add_option("--metrics", a.metrics, "Write per-frame metrics CSV here");
  app.add_option("--preset", a.preset, "Iteration preset")->check(CLI::IsMember({"fast", "slow"}));
  app.add_option("--iters", a.iters, "Fit iterations per I-frame (overrides preset)");
  app.add_option("--pframe-iters", o.pframe_iters, "Fit iterations per P-frame (0: same as I)");
  app.add_option("--target-psnr", a.target_psnr, "Stop a fit early at this ROI PSNR (dB)");
  app.add_option("--lr-mu", a.lr_mu, "Position learning rate");
  app.add_option("--lr-chol", a.lr_chol, "Cholesky learning rate");
  app.add_option("--lr-color", a.lr_color, "Color learning rate");
  app.add_option("-n,--n-gaussians", o.n_gaussians, "Gaussians per I-frame")->capture_default_str();
  app.add_option("--compactness", o.compactness, "Superpixel compactness")->capture_default_str();
  app.add_option("--init", a.init, "I-frame initialization")
      ->check(CLI::IsMember({"superpixel", "random"}));
  app.add_option("--gop", o.gop, "GoP length K")->capture_default_str();
  app.add_option("--change-threshold", o.tau, "P-frame change threshold in [0,1]")
      ->capture_default_str();
  app.add_flag("--no-dilate", a.no_dilate, "Do not dilate the change map");
  app.add_option("--influence-eps", o.influence_eps, "Pixel index influence threshold")
      ->capture_default_str();
  app.add_option("--quant", a.quant, "Quantization mode")
      ->check(CLI::IsMember({"ptq", "qat", "none"}));
  app.add_option("--bits-mu", o.bits_mu, "Position bits")->capture_default_str();
  app.add_option("--bits-chol", o.bits_chol, "Cholesky bits")->capture_default_str();
  app.add_option("--bits-color", o.bits_color, "Color bits")->capture_default_str();
  app.add_option("--qat-warmup", o.qat_warmup, "QAT: float fraction of each fit")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--background", a.background, "Non-ROI fill R G B (0-255)")->expected(3);
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app.add_flag("-q,--quiet", a.quiet, "No per-frame progress");
}

int run_encode(EncodeArgs& a) {
  EncodeOptions& o = a.options;
  const int pframe_iters = o.pframe_iters;
  FitConfig fit = preset_config(a.preset);
  if (a.iters) fit.max_iters = *a.iters;
  fit.target_psnr = a.target_psnr;
  if (a.lr_mu) fit.lr.mu = *a.lr_mu;
  if (a.lr_chol) fit.lr.chol = *a.lr_chol;
  if (a.lr_color) fit.lr.color = *a.lr_color;
  o.fit = fit;
  o.pframe_iters = pframe_iters;
  o.init = parse_init_kind(a.init);
  o.quant = parse_quant_mode(a.quant);
  o.dilate = !a.no_dilate;
  if (!a.background.empty()) {
    std::array<std::uint8_t, 3> bg{};
    for (int c = 0; c < 3; ++c) {
      if (a.background[c] < 0 || a.background[c] > 255) {
        throw InvalidParameter("--background values must be in [0,255]");
      }
      bg[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(a.background[c]);
    }
    o.background = bg;
  }

  const VideoInput input = load_video(
      a.input, a.mask_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(a.mask_dir));
  if (!a.quiet) {
    std::fprintf(stderr, "encoding %zu frames of %dx%d, N=%d, K=%u, %d iterations, %s\n",
                 input.frames.size(), input.frames[0].width(), input.frames[0].height(),
                 o.n_gaussians, o.gop, o.fit.max_iters, std::string(to_string(o.quant)).c_str());
  }
  const EncodeResult r = encode_video(input, o, [&](const FrameMetrics& m) {
    if (a.quiet) return;
    std::fprintf(stderr, "frame %4u %s  coded %5zu  bits %9llu  psnr roi %6.2f dB  full %6.2f dB  %.1fs\n",
                 m.frame, m.type == FrameType::kIntra ? "I" : "P", m.coded_gaussians,
                 static_cast<unsigned long long>(m.bits), m.psnr_roi, m.psnr_full,
                 m.encode_seconds.value_or(0.0));
  });
  write_file(a.output, r.bytes);
  if (!a.metrics.empty()) {
    std::ofstream csv(a.metrics);
    if (!csv) throw IoError("cannot create " + a.metrics);
    MetricsReport m = r.metrics;
    m.stream = std::filesystem::path(a.output).filename().string();
    write_csv(csv, std::span<const MetricsReport>(&m, 1));
  }
  if (!a.quiet) {
    std::fprintf(stderr, "wrote %s: %zu bytes, %.4f bpp, mean psnr roi %.2f dB\n",
                 a.output.c_str(), r.bytes.size(), r.metrics.bpp(), r.metrics.mean_psnr_roi());
  }
  return 0;
}

int run_decode(const DecodeArgs& a) {
  const auto bytes = read_file(a.input);
  const DecodedVideo d = decode_video(bytes, a.threads);
  const std::filesystem::path out(a.output);
  if (out.extension() == ".y4m") {
    Y4mWriter w(out, {d.header.dims, d.header.fps_num, d.header.fps_den});
    for (const auto& f : d.frames) w.write(f);
  } else {
    std::filesystem::create_directories(out);
    for (std::size_t f = 0; f < d.frames.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05zu.png", f);
      write_image(d.frames[f], out / name);
    }
  }
  std::fprintf(stderr, "decoded %zu frames in %.3fs (%.1f fps)\n", d.frames.size(), d.seconds,
               d.seconds > 0 ? static_cast<double>(d.frames.size()) / d.seconds : 0.0);
  return 0;
}

int run_report(const ReportArgs& a) {
  const VideoInput ref = load_video(a.reference);
  std::vector<MetricsReport> reports;
  std::vector<std::uint32_t> gops;
  for (const auto& spec : a.streams) {
    // name=path or just path.
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const std::string name =
        eq == std::string::npos ? std::filesystem::path(spec).filename().string() : spec.substr(0, eq);
    const auto bytes = read_file(path);
    reports.push_back(report(bytes, ref.frames, name, a.threads));
    gops.push_back(deserialize(bytes).header.gop);
  }
  if (a.csv.empty()) {
    write_csv(std::cout, reports);
  } else {
    std::ofstream out(a.csv);
    if (!out) throw IoError("cannot create " + a.csv);
    write_csv(out, reports);
  }
  if (!a.bitsback) return 0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const MetricsReport& r = reports[k];
    double i_bits = 0.0, p_bits = 0.0, p_gaussians = 0.0;
    std::uint64_t p_frames = 0;
    for (const auto& f : r.frames) {
      if (f.type == FrameType::kIntra) {
        i_bits += static_cast<double>(f.bits);
      } else {
        p_bits += static_cast<double>(f.bits);
        p_gaussians += static_cast<double>(f.coded_gaussians);
        ++p_frames;
      }
    }
    // m is the mean number of Gaussians carried per P-frame.
    const auto m = static_cast<std::uint64_t>(
        std::max(1.0, p_frames ? std::round(p_gaussians / static_cast<double>(p_frames)) : 1.0));
    const SavingsReport s =
        with_stream_bits(bitsback_savings(m, r.frames.size(), gops[k]), i_bits, p_bits);
    std::fprintf(stderr,
                 "%s: bits-back estimate m=%llu S_P=%.2f bits x %llu P-frames = %.1f bits; "
                 "total %.0f -> %.0f bits\n",
                 r.stream.c_str(), static_cast<unsigned long long>(m), s.per_pframe_bits,
                 static_cast<unsigned long long>(s.pframes), s.total_bits, s.bits_without,
                 s.bits_with);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsvc: Gaussian splatting video codec"};
  app.set_config("--config", "", "INI/TOML file with option values ([encode], [decode], ... sections)");
  app.require_subcommand(1);

  EncodeArgs enc;
  DecodeArgs dec;
  ReportArgs rep;
  std::string inspect_path;

  add_encode(*app.add_subcommand("encode", "Encode a frame sequence into a stream"), enc);

  CLI::App* d = app.add_subcommand("decode", "Decode a stream to PNG frames or a .y4m file");
  d->add_option("-i,--input", dec.input, "Stream path")->required();
  d->add_option("-o,--output", dec.output, "Output directory or .y4m file")->required();
  d->add_option("--threads", dec.threads, "Worker threads (0: all cores)");

  CLI::App* r = app.add_subcommand("report", "Per-frame PSNR / bits of streams against a reference");
  r->add_option("-s,--stream", rep.streams, "Stream path or name=path (repeatable)")->required();
  r->add_option("-r,--reference", rep.reference, "Reference frames (directory, .y4m or image)")
      ->required();
  r->add_option("--csv", rep.csv, "CSV output path (default: stdout)");
  r->add_flag("--bitsback", rep.bitsback, "Also print the bits-back savings estimate");
  r->add_option("--threads", rep.threads, "Worker threads (0: all cores)");

  CLI::App* in = app.add_subcommand("inspect", "Print the stream header and frame sizes");
  in->add_option("stream", inspect_path, "Stream path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("encode")) return run_encode(enc);
    if (app.got_subcommand("decode")) return run_decode(dec);
    if (app.got_subcommand("report")) return run_report(rep);
    if (app.got_subcommand("inspect")) {
      std::cout << inspect(read_file(inspect_path));
      return 0;
    }
  } catch (const FrameError& e) {
    std::fprintf(stderr, "error (frame %ld): %s\n", e.frame(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
