#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "frp/linalg.hpp"

namespace frp {

enum class DomainTag { Function1D, Image2D };

/// Paired coordinates (n x d_in, within [-1, 1]) and targets (n x d_out).
/// Image datasets also carry their raster size; samples are row-major.
struct Dataset {
  Matrix inputs;
  Matrix targets;
  DomainTag domain = DomainTag::Function1D;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t size() const noexcept { return inputs.rows(); }
};

/// 2 R((sin 3 pi x + sin 5 pi x + sin 7 pi x + sin 9 pi x) / 2), R rounding
/// halves away from zero so the target is exactly odd.
double target_1d(double x);

/// n >= 2 points spaced uniformly over [-1, 1] including both ends.
Dataset make_dataset_1d(std::size_t n);

/// 8-bit raster scaled to [0, 1], channels interleaved, rows top to bottom.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  void validate() const;
};

/// Binary PGM (P5) / PPM (P6) with maxval 255. Errors report the byte offset.
Image decode_pnm(std::span<const unsigned char> bytes);
/// Writes "P5\n<w> <h>\n255\n" (or P6) followed by round(255 v) per sample.
std::vector<unsigned char> encode_pnm(const Image& image);
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

/// One row per pixel: inputs (x, y) with x = 2 (col + 0.5) / W - 1 and
/// y = 2 (row + 0.5) / H - 1; targets are the channel values.
Dataset make_dataset_2d(const Image& image);

/// Predictions (W*H x channels) clamped to [0, 1] as an image.
Image image_from_values(const Matrix& values, std::size_t width, std::size_t height);

struct LossResult {
  double loss = 0.0;
  Matrix gradient;  ///< dLoss/dPred
};

/// Mean of (pred - target)^2 over all entries; gradient 2 (pred - target) / count.
LossResult mse_loss(const Matrix& pred, const Matrix& target);
double mse(const Matrix& pred, const Matrix& target);

/// 10 log10(1 / MSE) with pred clamped to [0, 1]; +infinity when MSE is 0.
double psnr(const Matrix& pred, const Matrix& target);

}  // namespace frp
