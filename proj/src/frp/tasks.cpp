#include "frp/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>

#include "frp/errors.hpp"

namespace frp {

double target_1d(double x) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(3 * pi * x) + std::sin(5 * pi * x) + std::sin(7 * pi * x) +
                   std::sin(9 * pi * x);
  return 2.0 * std::round(s / 2.0);
}

Dataset make_dataset_1d(std::size_t n) {
  if (n < 2) throw ValidationError("1d dataset needs n >= 2 samples, got " + std::to_string(n));
  Dataset d;
  d.inputs = Matrix(n, 1);
  d.targets = Matrix(n, 1);
  const double span = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = (2.0 * static_cast<double>(j) - span) / span;
    d.inputs(j, 0) = x;
    d.targets(j, 0) = target_1d(x);
  }
  d.domain = DomainTag::Function1D;
  return d;
}

void Image::validate() const {
  if (width < 1 || height < 1) throw ValidationError("image: dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw ValidationError("image: channels must be 1 or 3");
  if (pixels.size() != width * height * channels) {
    throw ShapeError("image: pixel count does not match " + std::to_string(width) + "x" +
                     std::to_string(height) + "x" + std::to_string(channels));
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("image: pixel value outside [0, 1]");
  }
}

namespace {

class PnmReader {
 public:
  explicit PnmReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("pnm: " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(std::string("truncated header, expected ") + what);
    if (!std::isdigit(bytes_[pos_])) fail(std::string("expected ") + what);
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) fail(std::string(what) + " too large");
      ++pos_;
    }
    return value;
  }

  std::size_t pos_ = 0;
  std::span<const unsigned char> bytes_;
};

}  // namespace

Image decode_pnm(std::span<const unsigned char> bytes) {
  PnmReader r(bytes);
  if (bytes.size() < 2) r.fail("truncated magic number");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    r.fail("unsupported magic number (expected P5 or P6)");
  }
  Image img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  r.pos_ = 2;
  img.width = r.number("width");
  img.height = r.number("height");
  const std::size_t maxval_at = r.pos_;
  const std::size_t maxval = r.number("maxval");
  if (maxval != 255) {
    r.pos_ = maxval_at;
    r.skip_space_and_comments();
    r.fail("maxval " + std::to_string(maxval) + " is not 255");
  }
  if (img.width < 1 || img.height < 1) r.fail("zero image dimension");
  if (r.pos_ >= bytes.size() || !std::isspace(bytes[r.pos_])) {
    r.fail("expected a single whitespace byte before the payload");
  }
  ++r.pos_;
  const std::size_t need = img.width * img.height * img.channels;
  if (bytes.size() - r.pos_ < need) {
    r.pos_ = bytes.size();
    r.fail("truncated payload (" + std::to_string(need) + " bytes expected)");
  }
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i) img.pixels[i] = bytes[r.pos_ + i] / 255.0;
  return img;
}

std::vector<unsigned char> encode_pnm(const Image& image) {
  image.validate();
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + image.pixels.size());
  for (double v : image.pixels) out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
  return out;
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  try {
    return decode_pnm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_image(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset make_dataset_2d(const Image& image) {
  image.validate();
  const std::size_t n = image.width * image.height;
  Dataset d;
  d.inputs = Matrix(n, 2);
  d.targets = Matrix(n, image.channels);
  d.domain = DomainTag::Image2D;
  d.width = image.width;
  d.height = image.height;
  const double w = static_cast<double>(image.width), h = static_cast<double>(image.height);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      const std::size_t i = r * image.width + c;
      d.inputs(i, 0) = 2.0 * (static_cast<double>(c) + 0.5) / w - 1.0;
      d.inputs(i, 1) = 2.0 * (static_cast<double>(r) + 0.5) / h - 1.0;
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        d.targets(i, ch) = image.pixels[i * image.channels + ch];
      }
    }
  }
  return d;
}

Image image_from_values(const Matrix& values, std::size_t width, std::size_t height) {
  if (values.rows() != width * height || (values.cols() != 1 && values.cols() != 3)) {
    throw ShapeError("image_from_values: " + values.shape_string() + " cannot fill a " +
                     std::to_string(width) + "x" + std::to_string(height) + " image");
  }
  Image img{width, height, values.cols(), {}};
  img.pixels.reserve(values.size());
  for (double v : values.data()) img.pixels.push_back(std::clamp(v, 0.0, 1.0));
  return img;
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.empty()) {
    throw ShapeError(std::string(what) + ": prediction " + a.shape_string() + " vs target " +
                     b.shape_string());
  }
}

}  // namespace

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "mse_loss");
  LossResult r;
  r.gradient = Matrix(pred.rows(), pred.cols());
  const auto p = pred.data(), t = target.data();
  auto g = r.gradient.data();
  const double count = static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p[i] - t[i];
    sum += e * e;
    g[i] = 2.0 * e / count;
  }
  r.loss = sum / count;
  return r;
}

double mse(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "mse");
  const auto p = pred.data(), t = target.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] - t[i]) * (p[i] - t[i]);
  return sum / static_cast<double>(p.size());
}

double psnr(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "psnr");
  const auto p = pred.data(), t = target.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = std::clamp(p[i], 0.0, 1.0) - t[i];
    sum += e * e;
  }
  const double m = sum / static_cast<double>(p.size());
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace frp
