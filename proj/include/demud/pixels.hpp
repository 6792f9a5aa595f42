// Copyright 2026 The demud Authors.
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

#pragma once

// Pixel features from image files: center crop to a square, bilinear resize
// to side x side, RGB interleaved row-major, scaled to [0, 1].
// Decoding and encoding go through OpenCV's imgcodecs; all resampling is done
// here in double precision.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"

namespace demud {

/// Interleaved RGB image with channel values in [0, 1].
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // (y * width + x) * 3 + c

  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return values[(y * width + x) * 3 + c];
  }
  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return values[(y * width + x) * 3 + c];
  }
};

/// Decodes any format OpenCV reads; throws FormatError if it cannot.
inline RgbImage read_image(const std::filesystem::path& path) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (bgr.empty() || bgr.channels() != 3 || bgr.depth() != CV_8U)
    throw FormatError(path.string() + ": not a decodable image");
  RgbImage img;
  img.width = static_cast<std::size_t>(bgr.cols);
  img.height = static_cast<std::size_t>(bgr.rows);
  img.values.resize(img.width * img.height * 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* px = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(c)) =
            px[x][2 - c] / 255.0;
  }
  return img;
}

/// Writes 8-bit RGB pixels (interleaved, row-major) as PNG.
inline void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      const std::vector<unsigned char>& rgb) {
  if (rgb.size() != width * height * 3) throw DimensionError("write_png: buffer size mismatch");
  cv::Mat bgr(static_cast<int>(height), static_cast<int>(width), CV_8UC3);
  for (std::size_t y = 0; y < height; ++y) {
    auto* px = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t c = 0; c < 3; ++c) px[x][2 - c] = rgb[(y * width + x) * 3 + c];
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw Error("cannot write image '" + path.string() + "'");
}

/// Largest centered square.
inline RgbImage center_crop(const RgbImage& img) {
  const std::size_t side = std::min(img.width, img.height);
  const std::size_t x0 = (img.width - side) / 2;
  const std::size_t y0 = (img.height - side) / 2;
  RgbImage out;
  out.width = out.height = side;
  out.values.resize(side * side * 3);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
inline RgbImage resize_bilinear(const RgbImage& img, std::size_t width, std::size_t height) {
  if (width == img.width && height == img.height) return img;
  RgbImage out;
  out.width = width;
  out.height = height;
  out.values.resize(width * height * 3);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const auto source = [](double dst, double scale, std::size_t size, std::size_t& i0,
                         std::size_t& i1, double& frac) {
    double s = (dst + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(size - 1));
    const double fl = std::floor(s);
    i0 = static_cast<std::size_t>(fl);
    i1 = std::min(i0 + 1, size - 1);
    frac = s - fl;
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double fy;
    source(static_cast<double>(y), sy, img.height, y0, y1, fy);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double fx;
      source(static_cast<double>(x), sx, img.width, x0, x1, fx);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
        const double bot = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
        out.at(x, y, c) = top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

/// Feature row of one image: crop, resize, flatten.
inline std::vector<double> pixel_features(const RgbImage& img, std::size_t side) {
  if (side < 1) throw ConfigError("image side must be at least 1");
  if (img.width == 0 || img.height == 0) throw FormatError("empty image");
  return resize_bilinear(center_crop(img), side, side).values;
}

struct PixelIngest {
  FeatureMatrix features;
  std::vector<std::string> skipped;  // files that failed to decode
};

/// One row per decodable regular file in `dir`, in lexicographic filename
/// order; ids are the file names. Undecodable files are skipped, reported on
/// `warn` (if non-null) and listed in `skipped`.
inline PixelIngest pixels_from_images(const std::filesystem::path& dir, std::size_t side,
                                      std::ostream* warn = &std::clog) {
  if (side < 1) throw ConfigError("image side must be at least 1");
  if (!std::filesystem::is_directory(dir))
    throw Error("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) throw Error("'" + dir.string() + "' contains no files");

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> skipped;
  for (const auto& f : files) {
    try {
      rows.push_back(pixel_features(read_image(f), side));
      ids.push_back(f.filename().string());
    } catch (const FormatError& e) {
      skipped.push_back(f.filename().string());
      if (warn) *warn << "warning: skipping " << e.what() << '\n';
    }
  }
  if (rows.empty()) throw Error("'" + dir.string() + "' contains no decodable images");
  const auto d = static_cast<Eigen::Index>(3 * side * side);
  RowMatrix data(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r)
    data.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), d);
  return PixelIngest{FeatureMatrix(std::move(ids), std::move(data)), std::move(skipped)};
}

}  // namespace demud
