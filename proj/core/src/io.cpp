// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

namespace fs = std::filesystem;

namespace {

// 8-bit raster with 1 or 3 channels.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class PnmParser {
 public:
  PnmParser(const std::string& data, const fs::path& path) : data_(data), path_(path) {}

  Raster parse() {
    if (data_.size() < 2 || data_[0] != 'P') fail("not a PNM file");
    const char kind = data_[1];
    pos_ = 2;
    int channels = 0;
    bool ascii = false;
    switch (kind) {
      case '2': channels = 1; ascii = true; break;
      case '3': channels = 3; ascii = true; break;
      case '5': channels = 1; break;
      case '6': channels = 3; break;
      default: fail("unsupported PNM variant P" + std::string(1, kind));
    }
    Raster r;
    r.width = next_int();
    r.height = next_int();
    const int maxval = next_int();
    if (r.width <= 0 || r.height <= 0 || maxval <= 0 || maxval > 65535) fail("bad header");
    r.channels = channels;
    const std::size_t count =
        static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height) * channels;
    r.pixels.resize(count);
    auto scale = [&](int v) {
      if (v > maxval) fail("sample exceeds maxval");
      return static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
    };
    if (ascii) {
      for (std::size_t i = 0; i < count; ++i) r.pixels[i] = scale(next_int());
      return r;
    }
    ++pos_;  // single whitespace after maxval
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    if (data_.size() < pos_ + count * bytes) fail("truncated pixel data");
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    for (std::size_t i = 0; i < count; ++i) {
      const int v = bytes == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
      r.pixels[i] = scale(v);
    }
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("'" + path_.string() + "': " + what);
  }

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= data_.size() || !std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      fail("malformed header or truncated data");
    }
    long v = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + (data_[pos_++] - '0');
      if (v > 1'000'000'000) fail("number out of range");
    }
    return static_cast<int>(v);
  }

  const std::string& data_;
  fs::path path_;
  std::size_t pos_ = 0;
};

Raster read_png(const fs::path& path, int channels) {
  const std::string bytes = read_file(path);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw IoError("'" + path.string() + "': " + img.message);
  }
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raster r;
  r.width = static_cast<int>(img.width);
  r.height = static_cast<int>(img.height);
  r.channels = channels;
  r.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, r.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("'" + path.string() + "': " + msg);
  }
  return r;
}

void write_png(const Raster& r, const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(r.width);
  img.height = static_cast<png_uint_32>(r.height);
  img.format = r.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, r.pixels.data(), 0, nullptr)) {
    throw IoError("'" + path.string() + "': " + img.message);
  }
}

void write_pnm(const Raster& r, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out << (r.channels == 3 ? "P6" : "P5") << '\n' << r.width << ' ' << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.pixels.data()),
            static_cast<std::streamsize>(r.pixels.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Raster read_raster(const fs::path& path, int png_channels) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path, png_channels);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    const std::string data = read_file(path);
    return PnmParser(data, path).parse();
  }
  throw IoError("unsupported image format '" + path.string() + "'");
}

void write_raster(const Raster& r, const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    write_png(r, path);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_pnm(r, path);
  } else {
    throw IoError("unsupported image format '" + path.string() + "'");
  }
}

// BT.601 luma/chroma weights.
constexpr double kKr = 0.299;
constexpr double kKb = 0.114;
constexpr double kKg = 1.0 - kKr - kKb;

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::uint8_t to_u8(double v) { return clamp_u8(v * 255.0); }

Image read_image(const fs::path& path) {
  const Raster r = read_raster(path, 3);
  if (r.width > 65535 || r.height > 65535) throw IoError("image too large: " + path.string());
  Image img({r.width, r.height});
  auto& d = img.data();
  const std::size_t n = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint8_t v = r.channels == 3 ? r.pixels[p * 3 + c] : r.pixels[p];
      d[p * 3 + c] = v / 255.0;
    }
  }
  return img;
}

void write_image(const Image& image, const fs::path& path) {
  Raster r{image.width(), image.height(), 3, {}};
  r.pixels.reserve(image.data().size());
  for (double v : image.data()) r.pixels.push_back(to_u8(v));
  write_raster(r, path);
}

RoiMask read_mask(const fs::path& path, FrameDims expected) {
  const Raster r = read_raster(path, 1);
  if (r.width != expected.width || r.height != expected.height) {
    throw IoError("mask '" + path.string() + "' is " + std::to_string(r.width) + "x" +
                  std::to_string(r.height) + ", expected " + std::to_string(expected.width) +
                  "x" + std::to_string(expected.height));
  }
  std::vector<std::uint8_t> bits(expected.pixel_count());
  for (std::size_t p = 0; p < bits.size(); ++p) {
    bits[p] = r.pixels[p * static_cast<std::size_t>(r.channels)] >= 128 ? 1 : 0;
  }
  return RoiMask(expected, std::move(bits));
}

void write_mask(const RoiMask& mask, const fs::path& path) {
  Raster r{mask.dims().width, mask.dims().height, 1, {}};
  r.pixels.reserve(mask.bits().size());
  for (auto b : mask.bits()) r.pixels.push_back(b ? 255 : 0);
  write_raster(r, path);
}

bool is_image_path(const fs::path& path) {
  const std::string ext = lower_ext(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Y4mReader::Y4mReader(const fs::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open '" + path.string() + "'");
  std::string header;
  if (!std::getline(in_, header)) throw IoError("empty Y4M file '" + path.string() + "'");
  std::istringstream ss(header);
  std::string tok;
  ss >> tok;
  if (tok != "YUV4MPEG2") throw IoError("'" + path.string() + "' is not a Y4M stream");
  while (ss >> tok) {
    const char tag = tok[0];
    const std::string val = tok.substr(1);
    if (tag == 'W') {
      info_.dims.width = std::stoi(val);
    } else if (tag == 'H') {
      info_.dims.height = std::stoi(val);
    } else if (tag == 'F') {
      const auto colon = val.find(':');
      if (colon == std::string::npos) throw IoError("bad Y4M frame rate '" + val + "'");
      info_.fps_num = static_cast<std::uint32_t>(std::stoul(val.substr(0, colon)));
      info_.fps_den = static_cast<std::uint32_t>(std::stoul(val.substr(colon + 1)));
    } else if (tag == 'C') {
      if (val.rfind("420", 0) != 0 || val.find("p1") != std::string::npos) {
        throw IoError("unsupported Y4M colorspace '" + val + "' (need 8-bit 4:2:0)");
      }
    } else if (tag == 'X' && val == "COLORRANGE=FULL") {
      full_range_ = true;
    }
  }
  if (info_.dims.width <= 0 || info_.dims.height <= 0) throw IoError("Y4M header lacks W/H");
  if (info_.fps_num == 0 || info_.fps_den == 0) throw IoError("Y4M frame rate must be positive");
}

bool Y4mReader::next(Image& out) {
  std::string line;
  if (!std::getline(in_, line)) return false;
  if (line.rfind("FRAME", 0) != 0) throw IoError("Y4M: expected FRAME marker");
  const int w = info_.dims.width, h = info_.dims.height;
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  const std::size_t luma = static_cast<std::size_t>(w) * h;
  const std::size_t chroma = static_cast<std::size_t>(cw) * ch;
  plane_.resize(luma + 2 * chroma);
  in_.read(reinterpret_cast<char*>(plane_.data()), static_cast<std::streamsize>(plane_.size()));
  if (static_cast<std::size_t>(in_.gcount()) != plane_.size()) {
    throw IoError("Y4M: truncated frame");
  }
  const std::uint8_t* yp = plane_.data();
  const std::uint8_t* up = yp + luma;
  const std::uint8_t* vp = up + chroma;
  out = Image(info_.dims);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t ci = static_cast<std::size_t>(y / 2) * cw + static_cast<std::size_t>(x / 2);
      double Y = yp[static_cast<std::size_t>(y) * w + x];
      double U = up[ci] - 128.0;
      double V = vp[ci] - 128.0;
      if (full_range_) {
        Y /= 255.0;
        U /= 255.0;
        V /= 255.0;
      } else {
        Y = (Y - 16.0) / 219.0;
        U /= 224.0;
        V /= 224.0;
      }
      const double r = Y + 2.0 * (1.0 - kKr) * V;
      const double b = Y + 2.0 * (1.0 - kKb) * U;
      const double g = (Y - kKr * r - kKb * b) / kKg;
      out.at(x, y, 0) = std::clamp(r, 0.0, 1.0);
      out.at(x, y, 1) = std::clamp(g, 0.0, 1.0);
      out.at(x, y, 2) = std::clamp(b, 0.0, 1.0);
    }
  }
  return true;
}

Y4mWriter::Y4mWriter(const fs::path& path, const VideoInfo& info)
    : out_(path, std::ios::binary), info_(info) {
  if (!out_) throw IoError("cannot create '" + path.string() + "'");
  out_ << "YUV4MPEG2 W" << info.dims.width << " H" << info.dims.height << " F" << info.fps_num
       << ':' << info.fps_den << " Ip A1:1 C420jpeg\n";
}

void Y4mWriter::write(const Image& frame) {
  if (frame.dims() != info_.dims) throw IoError("Y4M: frame dimensions differ from stream");
  const int w = info_.dims.width, h = info_.dims.height;
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  std::vector<std::uint8_t> yp(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> up(static_cast<std::size_t>(cw) * ch), vp(up.size());
  auto rgb = [&](int x, int y, int c) { return std::clamp(frame.at(x, y, c), 0.0, 1.0); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double Y = kKr * rgb(x, y, 0) + kKg * rgb(x, y, 1) + kKb * rgb(x, y, 2);
      yp[static_cast<std::size_t>(y) * w + x] = clamp_u8(16.0 + 219.0 * Y);
    }
  }
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      double r = 0, g = 0, b = 0;
      int n = 0;
      for (int y = 2 * cy; y < std::min(h, 2 * cy + 2); ++y) {
        for (int x = 2 * cx; x < std::min(w, 2 * cx + 2); ++x) {
          r += rgb(x, y, 0);
          g += rgb(x, y, 1);
          b += rgb(x, y, 2);
          ++n;
        }
      }
      r /= n;
      g /= n;
      b /= n;
      const double Y = kKr * r + kKg * g + kKb * b;
      const double U = (b - Y) / (2.0 * (1.0 - kKb));
      const double V = (r - Y) / (2.0 * (1.0 - kKr));
      const std::size_t ci = static_cast<std::size_t>(cy) * cw + cx;
      up[ci] = clamp_u8(128.0 + 224.0 * U);
      vp[ci] = clamp_u8(128.0 + 224.0 * V);
    }
  }
  out_ << "FRAME\n";
  out_.write(reinterpret_cast<const char*>(yp.data()), static_cast<std::streamsize>(yp.size()));
  out_.write(reinterpret_cast<const char*>(up.data()), static_cast<std::streamsize>(up.size()));
  out_.write(reinterpret_cast<const char*>(vp.data()), static_cast<std::streamsize>(vp.size()));
  if (!out_) throw IoError("Y4M: write failed");
}

std::vector<Image> read_y4m(const fs::path& path, VideoInfo* info) {
  Y4mReader reader(path);
  if (info) *info = reader.info();
  std::vector<Image> frames;
  Image f;
  while (reader.next(f)) frames.push_back(std::move(f));
  return frames;
}

}  // namespace gsvc
