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

// 8-bit RGB image I/O (PNG, binary PPM) and codec padding.

#pragma once

#include <cstdint>
#include <string>

#include "tfc/tensor.hpp"

namespace tfc {

/// Reads a PNG or binary PPM (P6, maxval 255) as [1, 3, H, W] in [0, 1].
/// Grayscale and alpha are converted to RGB. Throws std::runtime_error.
Tensor load_image(const std::string& path);
/// Writes [1, 3, H, W] values, clamped and rounded to 8 bits. The format
/// follows the extension (.png or .ppm).
void save_image(const std::string& path, const Tensor& image);

/// Values rounded to the nearest multiple of 1/255 after clamping to [0, 1].
Tensor quantize_8bit(const Tensor& image);

/// Mirror padding (edge pixel not repeated) on the bottom and right up to the
/// next multiple of the given value. Works for pads larger than the image.
Tensor reflect_pad(const Tensor& image, int64_t multiple);
/// Top-left crop of [B, C, H, W].
Tensor crop(const Tensor& image, int64_t height, int64_t width);

}  // namespace tfc
