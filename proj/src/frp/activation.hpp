#pragma once

#include <cmath>
#include <string>

namespace frp {

enum class ActivationType { ReLU, Sin, Tanh, Gauss };

/// Element-wise nonlinearity of the hidden layers.
///   ReLU:  max(0, x), derivative 0 at x = 0
///   Sin:   sin(omega0 x)
///   Tanh:  tanh(x)
///   Gauss: exp(-x^2 / (2 spread^2))
struct Activation {
  ActivationType type = ActivationType::ReLU;
  double omega0 = 30.0;
  double spread = 0.1;

  static Activation relu() { return {ActivationType::ReLU}; }
  static Activation sin(double omega0) { return {ActivationType::Sin, omega0}; }
  static Activation tanh() { return {ActivationType::Tanh}; }
  static Activation gauss(double spread = 0.1) { return {ActivationType::Gauss, 30.0, spread}; }

  double value(double x) const {
    switch (type) {
      case ActivationType::ReLU: return x > 0.0 ? x : 0.0;
      case ActivationType::Sin: return std::sin(omega0 * x);
      case ActivationType::Tanh: return std::tanh(x);
      case ActivationType::Gauss: return std::exp(-x * x / (2.0 * spread * spread));
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (type) {
      case ActivationType::ReLU: return x > 0.0 ? 1.0 : 0.0;
      case ActivationType::Sin: return omega0 * std::cos(omega0 * x);
      case ActivationType::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case ActivationType::Gauss: {
        const double s2 = spread * spread;
        return -x / s2 * std::exp(-x * x / (2.0 * s2));
      }
    }
    return 0.0;
  }

  void validate() const;
  std::string name() const;

  friend bool operator==(const Activation&, const Activation&) = default;
};

ActivationType parse_activation_type(const std::string& text);

}  // namespace frp
