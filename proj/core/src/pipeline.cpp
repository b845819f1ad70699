// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "gsvc/error.hpp"
#include "gsvc/initializer.hpp"
#include "gsvc/io.hpp"
#include "gsvc/rasterizer.hpp"

namespace gsvc {

namespace {

using Clock = std::chrono::steady_clock;

// Decoders refuse frames larger than this many pixels.
constexpr std::size_t kMaxDecodePixels = std::size_t{1} << 26;
// Fixed framing of each frame record: u8 type + u32 length.
constexpr std::size_t kRecordOverhead = 5;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

Rgb fill_color(const std::array<std::uint8_t, 3>& bg) {
  return {bg[0] / 255.0, bg[1] / 255.0, bg[2] / 255.0};
}

QuantizedGaussian to_symbols(const Gaussian2D& g, const StreamHeader& h) {
  return h.quant_mode == QuantMode::kNone ? float_bits(g) : quantize_one(g, h.quant_spec, h.dims);
}

Gaussian2D from_symbols(const QuantizedGaussian& q, const StreamHeader& h) {
  return h.quant_mode == QuantMode::kNone ? from_float_bits(q)
                                          : dequantize_one(q, h.quant_spec, h.dims);
}

bool renderable(const Gaussian2D& g) {
  const ParamVec p = g.params();
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); }) &&
         g.chol.l1 > 0.0 && g.chol.l3 > 0.0;
}

Image finish_frame(const Image& render, const RoiMask& mask, const StreamHeader& h) {
  if (!(h.flags & kFlagRoiMasks)) return render;
  return composite_background(render, mask, fill_color(h.background));
}

const char* type_name(FrameType t) { return t == FrameType::kIntra ? "I" : "P"; }

}  // namespace

InitKind parse_init_kind(std::string_view text) {
  if (text == "superpixel") return InitKind::kSuperpixel;
  if (text == "random") return InitKind::kRandom;
  throw InvalidParameter("unknown init '" + std::string(text) + "' (expected superpixel|random)");
}

std::string_view to_string(InitKind kind) {
  return kind == InitKind::kSuperpixel ? "superpixel" : "random";
}

void EncodeOptions::validate() const {
  fit.validate(0);
  if (pframe_iters < 0) throw InvalidParameter("pframe_iters must be >= 0");
  if (n_gaussians < 1) throw InvalidParameter("n_gaussians must be >= 1");
  if (!(compactness > 0.0)) throw InvalidParameter("compactness must be positive");
  if (gop < 1) throw InvalidParameter("gop must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("change threshold must be in [0,1]");
  if (!(influence_eps > 0.0 && influence_eps < 1.0)) {
    throw InvalidParameter("influence_eps must be in (0,1)");
  }
  if (!(qat_warmup >= 0.0 && qat_warmup < 1.0)) throw InvalidParameter("qat_warmup must be in [0,1)");
  QuantSpec spec;
  spec.bits_mu = bits_mu;
  spec.bits_chol = bits_chol;
  spec.bits_color = bits_color;
  spec.validate();
}

std::string EncodeOptions::canonical() const {
  std::ostringstream s;
  s << fit.canonical() << ";pframe_iters=" << pframe_iters << ";n=" << n_gaussians
    << ";compactness=" << fmt("%.17g", compactness) << ";init=" << to_string(init)
    << ";gop=" << gop << ";tau=" << fmt("%.17g", tau) << ";dilate=" << (dilate ? 1 : 0)
    << ";eps=" << fmt("%.17g", influence_eps) << ";quant=" << to_string(quant)
    << ";bits=" << bits_mu << "," << bits_chol << "," << bits_color
    << ";qat_warmup=" << fmt("%.17g", qat_warmup) << ";seed=" << seed;
  if (background) {
    s << ";background=" << int((*background)[0]) << "," << int((*background)[1]) << ","
      << int((*background)[2]);
  }
  return s.str();
}

const RoiMask* VideoInput::mask_for(std::size_t frame) const {
  if (masks.empty()) return nullptr;
  return masks.size() == 1 ? &masks[0] : &masks[frame];
}

VideoInput load_video(const std::filesystem::path& input,
                      const std::optional<std::filesystem::path>& mask_dir) {
  VideoInput v;
  if (std::filesystem::is_directory(input)) {
    const auto paths = list_frames(input);
    if (paths.empty()) throw IoError("no image frames in " + input.string());
    for (const auto& p : paths) v.frames.push_back(read_image(p));
  } else if (input.extension() == ".y4m") {
    VideoInfo info;
    v.frames = read_y4m(input, &info);
    v.fps_num = info.fps_num;
    v.fps_den = info.fps_den;
  } else if (is_image_path(input)) {
    v.frames.push_back(read_image(input));
  } else {
    throw IoError("unsupported input " + input.string() +
                  " (expected an image directory, .y4m or image file)");
  }
  if (v.frames.empty()) throw IoError("input " + input.string() + " holds no frames");
  const FrameDims dims = v.frames[0].dims();
  for (std::size_t f = 1; f < v.frames.size(); ++f) {
    if (v.frames[f].dims() != dims) {
      throw FrameError(static_cast<long>(f),
                       "frame " + std::to_string(f) + " is " +
                           std::to_string(v.frames[f].width()) + "x" +
                           std::to_string(v.frames[f].height()) + ", expected " +
                           std::to_string(dims.width) + "x" + std::to_string(dims.height));
    }
  }
  if (mask_dir) {
    const auto paths = std::filesystem::is_directory(*mask_dir)
                           ? list_frames(*mask_dir)
                           : std::vector<std::filesystem::path>{*mask_dir};
    if (paths.size() != 1 && paths.size() != v.frames.size()) {
      throw InvalidParameter("found " + std::to_string(paths.size()) + " masks for " +
                             std::to_string(v.frames.size()) + " frames");
    }
    for (const auto& p : paths) v.masks.push_back(read_mask(p, dims));
  }
  return v;
}

std::uint64_t MetricsReport::total_bits() const {
  std::uint64_t s = 0;
  for (const auto& f : frames) s += f.bits;
  return s;
}

double MetricsReport::bpp() const {
  if (frames.empty()) return 0.0;
  return static_cast<double>(total_bits()) /
         (static_cast<double>(dims.pixel_count()) * static_cast<double>(frames.size()));
}

double MetricsReport::mean_psnr_roi() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.psnr_roi;
  return frames.empty() ? 0.0 : s / static_cast<double>(frames.size());
}

double MetricsReport::mean_psnr_full() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.psnr_full;
  return frames.empty() ? 0.0 : s / static_cast<double>(frames.size());
}

void write_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "stream,frame,type,gaussians,coded_gaussians,bits,bpp,psnr_roi_db,psnr_full_db,"
         "encode_seconds,decode_fps\n";
  for (const auto& r : reports) {
    const double px = static_cast<double>(r.dims.pixel_count());
    double enc_sum = 0.0;
    bool enc_known = !r.frames.empty();
    double gaussians = 0.0, coded = 0.0;
    for (const auto& f : r.frames) {
      out << r.stream << ',' << f.frame << ',' << type_name(f.type) << ',' << f.gaussians << ','
          << f.coded_gaussians << ',' << f.bits << ','
          << fmt("%.6f", static_cast<double>(f.bits) / px) << ',' << fmt("%.4f", f.psnr_roi)
          << ',' << fmt("%.4f", f.psnr_full) << ','
          << (f.encode_seconds ? fmt("%.4f", *f.encode_seconds) : "") << ",\n";
      enc_known = enc_known && f.encode_seconds.has_value();
      if (f.encode_seconds) enc_sum += *f.encode_seconds;
      gaussians += static_cast<double>(f.gaussians);
      coded += static_cast<double>(f.coded_gaussians);
    }
    const double n = std::max<double>(1.0, static_cast<double>(r.frames.size()));
    out << r.stream << ",all,-," << fmt("%.2f", gaussians / n) << ',' << fmt("%.2f", coded / n)
        << ',' << r.total_bits() << ',' << fmt("%.6f", r.bpp()) << ','
        << fmt("%.4f", r.mean_psnr_roi()) << ',' << fmt("%.4f", r.mean_psnr_full()) << ','
        << (enc_known ? fmt("%.4f", enc_sum / n) : "") << ','
        << (r.decode_fps ? fmt("%.2f", *r.decode_fps) : "") << '\n';
  }
}

EncodeResult encode_video(const VideoInput& input, const EncodeOptions& options,
                          const FrameCallback& on_frame) {
  options.validate();
  if (input.frames.empty()) throw InvalidParameter("encode_video: no frames");
  const FrameDims dims = input.frames[0].dims();
  if (!input.masks.empty() && input.masks.size() != 1 &&
      input.masks.size() != input.frames.size()) {
    throw InvalidParameter("encode_video: mask count must be 0, 1 or the frame count");
  }
  for (std::size_t f = 0; f < input.frames.size(); ++f) {
    const RoiMask* m = input.mask_for(f);
    if (input.frames[f].dims() != dims || (m && m->dims() != dims)) {
      throw FrameError(static_cast<long>(f),
                       "frame " + std::to_string(f) + ": dimensions differ from frame 0");
    }
    if (m && m->count() == 0) {
      throw FrameError(static_cast<long>(f), "frame " + std::to_string(f) + ": empty ROI mask");
    }
  }
  if (dims.width > 65535 || dims.height > 65535) {
    throw InvalidParameter("encode_video: frames wider or taller than 65535 pixels");
  }

  const Rasterizer raster(RasterOptions{16, kDefaultCutoff, options.threads});
  const bool roi = !input.masks.empty();
  const RoiMask full = RoiMask::full(dims);

  EncodeResult result;
  Bitstream& stream = result.stream;
  StreamHeader& h = stream.header;
  h.dims = dims;
  h.fps_num = input.fps_num;
  h.fps_den = input.fps_den;
  h.gop = options.gop;
  h.n_gaussians = static_cast<std::uint32_t>(options.n_gaussians);
  h.frame_count = static_cast<std::uint32_t>(input.frames.size());
  h.quant_mode = options.quant;
  h.flags = static_cast<std::uint8_t>((roi ? kFlagRoiMasks : 0) | (options.dilate ? kFlagDilate : 0));
  h.tau = options.tau;
  h.influence_eps = options.influence_eps;
  const std::string canonical = options.canonical();
  h.config_digest = fnv1a({reinterpret_cast<const std::uint8_t*>(canonical.data()), canonical.size()});
  h.quant_spec.bits_mu = options.bits_mu;
  h.quant_spec.bits_chol = options.bits_chol;
  h.quant_spec.bits_color = options.bits_color;
  if (options.background) {
    h.background = *options.background;
  } else if (roi) {
    const Rgb mean = mean_outside(input.frames[0], *input.mask_for(0));
    h.background = {to_u8(mean.r), to_u8(mean.g), to_u8(mean.b)};
  }
  const QuantSpec base_spec = h.quant_spec;
  bool spec_ready = options.quant == QuantMode::kNone;

  MetricsReport& metrics = result.metrics;
  metrics.stream = "encode";
  metrics.dims = dims;

  GaussianSet state;
  std::vector<QuantizedGaussian> symbols;
  std::optional<IndexedRender> reference;
  // Source value each pixel was last coded from.
  Image last_coded;
  const RoiMask* prev_mask = nullptr;

  for (std::size_t f = 0; f < input.frames.size(); ++f) {
    const auto t0 = Clock::now();
    const Image& frame = input.frames[f];
    const RoiMask& mask = roi ? *input.mask_for(f) : full;
    const FrameType type = frame_type_for(f, options.gop);
    FrameContent content;
    FrameMetrics row;
    row.frame = static_cast<std::uint32_t>(f);
    row.type = type;
    try {
      if (roi) {
        if (prev_mask && *prev_mask == mask) {
          content.mask_coding = MaskCoding::kSameAsPrevious;
        } else if (mask.is_full()) {
          content.mask_coding = MaskCoding::kFull;
        } else {
          content.mask_coding = MaskCoding::kCoded;
          content.mask = mask;
        }
      }

      FitConfig cfg = options.fit;
      if (options.quant == QuantMode::kQat) {
        cfg.quant_in_loop = true;
        cfg.quant_start = options.qat_warmup;
        cfg.quant_spec = spec_ready ? h.quant_spec : base_spec;
      }

      if (type == FrameType::kIntra) {
        GaussianSet init;
        if (options.init == InitKind::kSuperpixel) {
          SuperpixelOptions so;
          so.n_segments = static_cast<int>(
              std::min<std::size_t>(static_cast<std::size_t>(options.n_gaussians), mask.count()));
          so.compactness = options.compactness;
          init = gaussians_from_segments(segment_superpixels(frame, mask, so, &raster.pool()));
        } else {
          init = random_init(dims, options.n_gaussians, options.seed + f);
        }
        FitResult fitted = fit(raster, init, frame, mask, cfg);
        if (!spec_ready) {
          h.quant_spec = options.quant == QuantMode::kQat
                             ? *fitted.report.quant_spec
                             : calibrate_ptq(std::span<const GaussianSet>(&fitted.set, 1), base_spec);
          spec_ready = true;
        }
        symbols.clear();
        std::vector<Gaussian2D> decoded;
        for (const auto& g : fitted.set.gaussians()) {
          symbols.push_back(to_symbols(g, h));
          decoded.push_back(from_symbols(symbols.back(), h));
        }
        state = GaussianSet(dims, std::move(decoded));
        content.symbols = symbols;
        last_coded = frame;
      } else {
        if (options.pframe_iters > 0) cfg.max_iters = options.pframe_iters;
        const PFrameResult pr = encode_pframe(raster, state, *reference, frame, mask,
                                              {options.tau, options.dilate, &last_coded}, cfg);
        row.changed_pixels = pr.changed_pixels;
        for (int y = 0; y < dims.height; ++y) {
          for (int x = 0; x < dims.width; ++x) {
            if (!pr.changes.at(x, y)) continue;
            for (int c = 0; c < 3; ++c) last_coded.at(x, y, c) = frame.at(x, y, c);
          }
        }
        auto gaussians = state.mutable_gaussians();
        for (std::uint32_t id : pr.changed_ids) {
          const QuantizedGaussian q = to_symbols(pr.set[id], h);
          // Skip Gaussians whose coded form did not change.
          if (q == symbols[id]) continue;
          content.ids.push_back(id);
          content.symbols.push_back(q);
          symbols[id] = q;
          gaussians[id] = from_symbols(q, h);
        }
      }
      stream.frames.push_back({type, encode_frame(content, type, h)});
      reference = render_indexed(raster, state, options.influence_eps);
    } catch (const FrameError&) {
      throw;
    } catch (const Error& e) {
      throw FrameError(static_cast<long>(f), "frame " + std::to_string(f) + ": " + e.what());
    }

    Image recon = finish_frame(reference->image, mask, h);
    row.gaussians = state.size();
    row.coded_gaussians = content.symbols.size();
    row.bits = (kRecordOverhead + stream.frames.back().payload.size()) * 8;
    row.psnr_roi = psnr(recon, frame, &mask);
    row.psnr_full = psnr(recon, frame);
    row.encode_seconds = seconds_since(t0);
    prev_mask = &mask;
    result.reconstructions.push_back(std::move(recon));
    metrics.frames.push_back(row);
    if (on_frame) on_frame(row);
  }
  // The header is written last because the quantizer ranges come from the
  // first fitted frame.
  metrics.frames.front().bits += header_size(h) * 8;
  result.bytes = serialize(stream);
  return result;
}

DecodedVideo decode_video(std::span<const std::uint8_t> bytes, unsigned threads) {
  const auto t0 = Clock::now();
  DecodedVideo out;
  const Bitstream s = deserialize(bytes);
  const StreamHeader& h = s.header;
  out.header = h;
  if (h.dims.pixel_count() > kMaxDecodePixels) {
    throw StreamError(StreamErrorKind::kCorrupt, 5, "frame size exceeds decoder limit");
  }
  const Rasterizer raster(RasterOptions{16, kDefaultCutoff, threads});
  const bool roi = (h.flags & kFlagRoiMasks) != 0;

  GaussianSet state;
  RoiMask mask = RoiMask::full(h.dims);
  std::size_t offset = header_size(h);
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    const FrameRecord& rec = s.frames[f];
    const std::size_t base = offset + kRecordOverhead;
    const long frame = static_cast<long>(f);
    const FrameContent c = decode_frame(rec.payload, rec.type, h, state.size(), frame, base);
    switch (c.mask_coding) {
      case MaskCoding::kFull:
        mask = RoiMask::full(h.dims);
        break;
      case MaskCoding::kSameAsPrevious:
        if (f == 0) throw StreamError(StreamErrorKind::kCorrupt, base, "no previous mask", frame);
        break;
      case MaskCoding::kCoded:
        mask = c.mask;
        break;
    }
    if (roi && mask.count() == 0) {
      throw StreamError(StreamErrorKind::kCorrupt, base, "empty ROI mask", frame);
    }
    std::vector<Gaussian2D> gs = rec.type == FrameType::kIntra
                                     ? std::vector<Gaussian2D>{}
                                     : std::vector<Gaussian2D>(state.gaussians());
    if (rec.type == FrameType::kIntra) {
      for (const auto& q : c.symbols) gs.push_back(from_symbols(q, h));
    } else {
      for (std::size_t i = 0; i < c.ids.size(); ++i) gs[c.ids[i]] = from_symbols(c.symbols[i], h);
    }
    for (const auto& g : gs) {
      if (!renderable(g)) {
        throw StreamError(StreamErrorKind::kCorrupt, base, "decoded Gaussian is not renderable",
                          frame);
      }
    }
    state = GaussianSet(h.dims, std::move(gs));
    out.frames.push_back(finish_frame(raster.render(state), mask, h));
    out.masks.push_back(mask);
    out.gaussian_counts.push_back(state.size());
    out.coded_counts.push_back(c.symbols.size());
    out.frame_bits.push_back((kRecordOverhead + rec.payload.size()) * 8);
    offset += kRecordOverhead + rec.payload.size();
  }
  if (!out.frame_bits.empty()) out.frame_bits.front() += header_size(h) * 8;
  out.seconds = seconds_since(t0);
  return out;
}

MetricsReport report(std::span<const std::uint8_t> stream, const std::vector<Image>& reference,
                     const std::string& name, unsigned threads) {
  const DecodedVideo d = decode_video(stream, threads);
  if (d.frames.size() != reference.size()) {
    throw InvalidParameter("report: stream has " + std::to_string(d.frames.size()) +
                           " frames, reference has " + std::to_string(reference.size()));
  }
  MetricsReport r;
  r.stream = name;
  r.dims = d.header.dims;
  for (std::size_t f = 0; f < d.frames.size(); ++f) {
    if (reference[f].dims() != d.header.dims) {
      throw InvalidParameter("report: reference frame " + std::to_string(f) +
                             " differs in size from the stream");
    }
    FrameMetrics m;
    m.frame = static_cast<std::uint32_t>(f);
    m.type = frame_type_for(f, d.header.gop);
    m.gaussians = d.gaussian_counts[f];
    m.coded_gaussians = d.coded_counts[f];
    m.bits = d.frame_bits[f];
    m.psnr_roi = psnr(d.frames[f], reference[f], &d.masks[f]);
    m.psnr_full = psnr(d.frames[f], reference[f]);
    r.frames.push_back(m);
  }
  if (d.seconds > 0.0 && !d.frames.empty()) {
    r.decode_fps = static_cast<double>(d.frames.size()) / d.seconds;
  }
  return r;
}

std::string inspect(std::span<const std::uint8_t> stream) {
  const Bitstream s = deserialize(stream);
  const StreamHeader& h = s.header;
  std::ostringstream o;
  o << "version      " << int(kBitstreamVersion) << '\n'
    << "size         " << h.dims.width << "x" << h.dims.height << '\n'
    << "fps          " << h.fps_num << "/" << h.fps_den << '\n'
    << "gop          " << h.gop << '\n'
    << "gaussians    " << h.n_gaussians << '\n'
    << "frames       " << h.frame_count << '\n'
    << "quant        " << to_string(h.quant_mode) << " (bits " << h.quant_spec.bits_mu << "/"
    << h.quant_spec.bits_chol << "/" << h.quant_spec.bits_color << ")\n"
    << "roi masks    " << ((h.flags & kFlagRoiMasks) ? "yes" : "no") << '\n'
    << "background   " << int(h.background[0]) << "," << int(h.background[1]) << ","
    << int(h.background[2]) << '\n'
    << "tau          " << fmt("%.6g", h.tau) << '\n'
    << "dilate       " << ((h.flags & kFlagDilate) ? "yes" : "no") << '\n'
    << "influence    " << fmt("%.6g", h.influence_eps) << '\n';
  char digest[24];
  std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(h.config_digest));
  o << "digest       " << digest << '\n' << "header bytes " << header_size(h) << '\n';
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    o << "frame " << f << ' ' << type_name(s.frames[f].type) << ' '
      << s.frames[f].payload.size() << " bytes\n";
  }
  return o.str();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gsvc
