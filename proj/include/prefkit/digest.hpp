#pragma once

#include <string>

namespace prefkit {

// SHA-256 as lowercase hex, for provenance manifests.
std::string sha256_hex(const std::string& bytes);
std::string sha256_hex_file(const std::string& path);

}  // namespace prefkit
