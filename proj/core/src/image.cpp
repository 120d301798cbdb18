// Copyright 2026 The tfcodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tfc/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tfc {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
  return tail == suffix;
}

Tensor from_rgb8(const std::vector<uint8_t>& rgb, int64_t h, int64_t w) {
  std::vector<double> data(static_cast<size_t>(3 * h * w));
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < h * w; ++i) data[c * h * w + i] = rgb[i * 3 + c] / 255.0;
  return Tensor::from_data({1, 3, h, w}, std::move(data));
}

std::vector<uint8_t> to_rgb8(const Tensor& image) {
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3) {
    throw ShapeError("save_image: expected [1, 3, H, W], got " + shape_str(image.shape()));
  }
  const int64_t hw = image.dim(2) * image.dim(3);
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * hw));
  const auto d = image.data();
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < hw; ++i) {
      const double v = std::clamp(d[c * hw + i], 0.0, 1.0);
      rgb[i * 3 + c] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
  return rgb;
}

Tensor load_png(const std::string& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path + ": " + msg);
  }
  return from_rgb8(rgb, img.height, img.width);
}

void skip_ppm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

Tensor load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error(path + ": only binary PPM (P6) is supported");
  int64_t w = 0, h = 0, maxval = 0;
  skip_ppm_space(in);
  in >> w;
  skip_ppm_space(in);
  in >> h;
  skip_ppm_space(in);
  in >> maxval;
  in.get();
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error(path + ": bad PPM header");
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * w * h));
  in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!in) throw std::runtime_error(path + ": truncated PPM data");
  return from_rgb8(rgb, h, w);
}

int64_t mirror(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path);
  char sig[2] = {0, 0};
  probe.read(sig, 2);
  if (sig[0] == 'P' && sig[1] == '6') return load_ppm(path);
  return load_png(path);
}

void save_image(const std::string& path, const Tensor& image) {
  const auto rgb = to_rgb8(image);
  const int64_t h = image.dim(2), w = image.dim(3);
  if (ends_with(path, ".ppm")) {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) throw std::runtime_error("cannot write " + path);
    return;
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG " + path + ": " + img.message);
  }
}

Tensor quantize_8bit(const Tensor& image) {
  std::vector<double> d(image.data().begin(), image.data().end());
  for (auto& v : d) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return Tensor::from_data(image.shape(), std::move(d));
}

Tensor reflect_pad(const Tensor& image, int64_t multiple) {
  if (image.rank() != 4) throw ShapeError("reflect_pad: expected [B, C, H, W], got " + shape_str(image.shape()));
  if (multiple < 1) throw std::invalid_argument("reflect_pad: multiple must be positive");
  const int64_t b = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const int64_t ph = (h + multiple - 1) / multiple * multiple;
  const int64_t pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  const auto src = image.data();
  std::vector<double> out(static_cast<size_t>(b * c * ph * pw));
  for (int64_t p = 0; p < b * c; ++p)
    for (int64_t y = 0; y < ph; ++y)
      for (int64_t x = 0; x < pw; ++x)
        out[(p * ph + y) * pw + x] = src[(p * h + mirror(y, h)) * w + mirror(x, w)];
  return Tensor::from_data({b, c, ph, pw}, std::move(out));
}

Tensor crop(const Tensor& image, int64_t height, int64_t width) {
  if (image.rank() != 4 || height > image.dim(2) || width > image.dim(3) || height < 1 || width < 1) {
    throw ShapeError("crop: cannot take " + std::to_string(height) + "x" + std::to_string(width) +
                     " from " + shape_str(image.shape()));
  }
  const int64_t b = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const auto src = image.data();
  std::vector<double> out(static_cast<size_t>(b * c * height * width));
  for (int64_t p = 0; p < b * c; ++p)
    for (int64_t y = 0; y < height; ++y)
      std::copy_n(src.begin() + (p * h + y) * w, width, out.begin() + (p * height + y) * width);
  return Tensor::from_data({b, c, height, width}, std::move(out));
}

}  // namespace tfc
