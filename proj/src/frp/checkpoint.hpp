#pragma once

#include <filesystem>
#include <string>

#include "frp/network.hpp"

namespace frp {

/// Versioned text container: the NetworkSpec followed by every layer's
/// parameters in row-major order, doubles in shortest round-trip form, so
/// write/read reproduces every bit. Fourier bases are stored as their recipe;
/// random and trainable bases as matrices.
std::string serialize_checkpoint(const Network& net);
Network parse_checkpoint(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace frp
