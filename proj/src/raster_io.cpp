/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lwa/raster_io.hpp"

#include <png.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include <nlohmann/json.hpp>

#include "lwa/error.hpp"

namespace lwa {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'L', 'W', 'A', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kU8: return 1;
    case DType::kU16: return 2;
    case DType::kU32: return 4;
  }
  throw Error(ErrorCode::kFormat, "unknown dtype");
}

double dtype_max(DType dtype) {
  switch (dtype) {
    case DType::kU8: return 255.0;
    case DType::kU16: return 65535.0;
    case DType::kU32: return 4294967295.0;
    case DType::kF32: break;
  }
  return 0.0;
}

bool fits_integral(const PixelArray& values, DType dtype) {
  const double hi = dtype_max(dtype);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!(v >= 0.0 && v <= hi && std::floor(v) == v)) return false;
  }
  return true;
}

DType narrowest_integral(const PixelArray& values) {
  for (DType d : {DType::kU8, DType::kU16, DType::kU32}) {
    if (fits_integral(values, d)) return d;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "label raster holds values outside the u32 range");
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const Raster& r) {
  const auto pixels = static_cast<Eigen::Index>(r.height) * r.width;
  if (r.values.rows() != pixels || r.values.cols() != r.channels) {
    throw Error(ErrorCode::kDimensionMismatch,
                "raster values do not match declared header");
  }
  if (r.dtype != DType::kF32 && !fits_integral(r.values, r.dtype)) {
    throw Error(ErrorCode::kInvalidArgument,
                "raster values do not fit the declared integer dtype");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kRasterHeaderBytes + r.values.size() * dtype_size(r.dtype));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, r.height);
  put_u32(out, r.width);
  put_u32(out, r.channels);
  out.push_back(static_cast<std::uint8_t>(r.dtype));
  out.push_back(r.modality);
  out.insert(out.end(), 6, 0);
  // PixelArray is row-major, so data() is already channel-interleaved.
  for (Eigen::Index i = 0; i < r.values.size(); ++i) {
    const double v = r.values.data()[i];
    switch (r.dtype) {
      case DType::kF32:
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        break;
      case DType::kU8:
        out.push_back(static_cast<std::uint8_t>(v));
        break;
      case DType::kU16: {
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
        break;
      }
      case DType::kU32:
        put_u32(out, static_cast<std::uint32_t>(v));
        break;
    }
  }
  return out;
}

Raster decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRasterHeaderBytes ||
      std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kFormat, "not an LWA1 raster container");
  }
  Raster r;
  r.height = get_u32(bytes.data() + 4);
  r.width = get_u32(bytes.data() + 8);
  r.channels = get_u32(bytes.data() + 12);
  const std::uint8_t dtype_code = bytes[16];
  if (dtype_code > 3) throw Error(ErrorCode::kFormat, "unknown dtype code");
  r.dtype = static_cast<DType>(dtype_code);
  r.modality = bytes[17];
  if (r.height == 0 || r.width == 0 || r.channels == 0) {
    throw Error(ErrorCode::kFormat, "raster has an empty dimension");
  }
  const std::size_t count =
      static_cast<std::size_t>(r.height) * r.width * r.channels;
  const std::size_t elem = dtype_size(r.dtype);
  if (bytes.size() != kRasterHeaderBytes + count * elem) {
    throw Error(ErrorCode::kFormat, "raster payload size does not match header");
  }
  r.values.resize(static_cast<Eigen::Index>(r.height) * r.width, r.channels);
  const std::uint8_t* p = bytes.data() + kRasterHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += elem) {
    double v = 0.0;
    switch (r.dtype) {
      case DType::kF32: v = std::bit_cast<float>(get_u32(p)); break;
      case DType::kU8: v = p[0]; break;
      case DType::kU16: v = static_cast<std::uint16_t>(p[0] | (p[1] << 8)); break;
      case DType::kU32: v = get_u32(p); break;
    }
    r.values.data()[i] = v;
  }
  return r;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

Raster read_raster(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_raster(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_raster(const fs::path& path, const Raster& raster) {
  write_file_atomic(path, encode_raster(raster));
}

fs::path sidecar_path(const fs::path& raster_path) {
  fs::path p = raster_path;
  p += ".meta.json";
  return p;
}

std::optional<DepthSidecar> read_sidecar(const fs::path& raster_path) {
  const fs::path p = sidecar_path(raster_path);
  if (!fs::exists(p)) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, p.string() + ": " + e.what());
  }
  DepthSidecar s;
  s.depth_scale = j.value("depth_scale", 1.0);
  s.invalid_value = j.value("invalid_value", 0.0);
  if (!(s.depth_scale > 0.0) || !std::isfinite(s.depth_scale)) {
    throw Error(ErrorCode::kFormat, p.string() + ": depth_scale must be > 0");
  }
  return s;
}

void write_sidecar(const fs::path& raster_path, const DepthSidecar& sidecar) {
  nlohmann::json j = {{"depth_scale", sidecar.depth_scale},
                      {"invalid_value", sidecar.invalid_value}};
  write_text_atomic(sidecar_path(raster_path), j.dump(2) + "\n");
}

namespace {

struct PngData {
  PixelDomain domain;
  PixelArray values;
};

PngData read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng init failed");
  }
  PngData out;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormat, path.string() + ": malformed PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const bool ok = (color == PNG_COLOR_TYPE_PALETTE && bit_depth <= 8) ||
                  (color == PNG_COLOR_TYPE_GRAY && (bit_depth == 8 || bit_depth == 16));
  if (!ok) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormat,
                path.string() + ": only 8-bit indexed/gray and 16-bit gray PNG are supported");
  }
  if (color == PNG_COLOR_TYPE_PALETTE && bit_depth < 8) png_set_packing(png);
  if (bit_depth == 16 && std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.domain = PixelDomain::make(height, width);
  out.values.resize(out.domain.pixels(), 1);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v;
      if (bit_depth == 16) {
        std::uint16_t s;
        std::memcpy(&s, rows[y] + 2 * x, 2);
        v = s;
      } else {
        v = rows[y][x];
      }
      out.values(static_cast<Eigen::Index>(y * width + x), 0) = v;
    }
  }
  return out;
}

ConditionMap depth_from_raw(PixelDomain domain, const PixelArray& raw,
                            const DepthSidecar& sidecar) {
  PixelArray values(domain.pixels(), 1);
  PixelFlags valid(domain.pixels());
  for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
    const double r = raw(p, 0);
    const bool ok = std::isfinite(r) && r != sidecar.invalid_value && r >= 0.0;
    valid(p) = ok;
    values(p, 0) = ok ? r * sidecar.depth_scale : 0.0;
  }
  return ConditionMap(Modality::kDepth, domain, std::move(values), std::move(valid));
}

}  // namespace

ConditionMap load_condition(const fs::path& path, std::optional<Modality> modality) {
  const auto sidecar = read_sidecar(path).value_or(DepthSidecar{});
  if (path.extension() == ".png") {
    if (!modality) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ": PNG input needs an explicit modality");
    }
    if (*modality == Modality::kRgb) {
      throw Error(ErrorCode::kFormat, "RGB conditions must use the LWA1 container");
    }
    PngData png = read_png(path);
    if (*modality == Modality::kDepth) {
      return depth_from_raw(png.domain, png.values, sidecar);
    }
    return ConditionMap(*modality, png.domain, std::move(png.values));
  }
  Raster r = read_raster(path);
  if (r.modality > 3) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a condition raster");
  }
  const auto stored = static_cast<Modality>(r.modality);
  if (modality && *modality != stored) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": expected " + std::string(to_string(*modality)) +
                    " raster, found " + std::string(to_string(stored)));
  }
  const PixelDomain domain = PixelDomain::make(r.height, r.width);
  if (stored == Modality::kDepth) {
    if (r.channels != 1) throw Error(ErrorCode::kFormat, "depth must have 1 channel");
    return depth_from_raw(domain, r.values, sidecar);
  }
  return ConditionMap(stored, domain, std::move(r.values));
}

void save_condition(const fs::path& path, const ConditionMap& map) {
  Raster r;
  r.height = map.domain().height;
  r.width = map.domain().width;
  r.channels = static_cast<std::uint32_t>(map.channels());
  r.modality = static_cast<std::uint8_t>(map.modality());
  r.values = map.values();
  switch (map.modality()) {
    case Modality::kDepth:
    case Modality::kRgb:
      r.dtype = DType::kF32;
      break;
    case Modality::kSemantic:
      r.dtype = narrowest_integral(map.values());
      break;
    case Modality::kInstance:
      r.dtype = DType::kU32;
      break;
  }
  write_raster(path, r);
  if (map.modality() == Modality::kDepth) write_sidecar(path, DepthSidecar{});
}

VisibilityMask load_mask(const fs::path& path) {
  Raster r = read_raster(path);
  if (r.modality != kMaskModalityCode || r.channels != 1) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a mask raster");
  }
  const PixelDomain domain = PixelDomain::make(r.height, r.width);
  VisibilityMask mask(domain);
  for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
    mask.set_pixel(p, r.values(p, 0) != 0.0);
  }
  return mask;
}

void save_mask(const fs::path& path, const VisibilityMask& mask) {
  Raster r;
  r.height = mask.domain().height;
  r.width = mask.domain().width;
  r.channels = 1;
  r.dtype = DType::kU8;
  r.modality = kMaskModalityCode;
  r.values.resize(mask.domain().pixels(), 1);
  for (Eigen::Index p = 0; p < mask.domain().pixels(); ++p) {
    r.values(p, 0) = mask.at_pixel(p) ? 1.0 : 0.0;
  }
  write_raster(path, r);
}

PackedImage load_packed(const fs::path& path) {
  Raster r = read_raster(path);
  if (r.channels != 3 || r.dtype != DType::kU8) {
    throw Error(ErrorCode::kFormat, path.string() + ": packed image must be u8 RGB");
  }
  PackedImage img(PixelDomain::make(r.height, r.width));
  img.rgb = r.values.cast<std::uint8_t>();
  return img;
}

void save_packed(const fs::path& path, const PackedImage& image) {
  Raster r;
  r.height = image.domain.height;
  r.width = image.domain.width;
  r.channels = 3;
  r.dtype = DType::kU8;
  r.modality = static_cast<std::uint8_t>(Modality::kRgb);
  r.values = image.rgb.cast<double>();
  write_raster(path, r);
}

Eigen::MatrixXd load_tensor(const fs::path& path) {
  Raster r = read_raster(path);
  if (r.width != 1) {
    throw Error(ErrorCode::kFormat, path.string() + ": tensor rasters have width 1");
  }
  return r.values.matrix();
}

void save_tensor(const fs::path& path, const Eigen::MatrixXd& m) {
  Raster r;
  r.height = static_cast<std::uint32_t>(m.rows());
  r.width = 1;
  r.channels = static_cast<std::uint32_t>(m.cols());
  r.dtype = DType::kF32;
  r.modality = kTensorModalityCode;
  r.values = m.array();
  write_raster(path, r);
}

void write_png(const fs::path& path, PixelDomain domain,
               std::span<const std::uint16_t> samples, int bit_depth,
               bool indexed) {
  if (samples.size() != static_cast<std::size_t>(domain.pixels())) {
    throw Error(ErrorCode::kDimensionMismatch, "PNG sample count mismatch");
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(ErrorCode::kInvalidArgument, "PNG bit depth must be 8 or 16");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
      std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng init failed");
  }
  const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> buffer(samples.size() * bytes_per);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(samples[i]);
    }
  }
  const std::size_t stride = domain.width * bytes_per;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG encode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  const int color = indexed ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, domain.width, domain.height,
               indexed ? 8 : bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> palette(256, png_color{0, 0, 0});
  if (indexed) png_set_PLTE(png, info, palette.data(), 256);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < domain.height; ++y) {
    png_write_row(png, buffer.data() + y * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace lwa
