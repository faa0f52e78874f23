#pragma once

#include <cstdint>
#include <string>

namespace viewmark {

// FIPS 180-4 SHA-256, hex digest. Used to cross-reference checkpoints and
// the watermark in the key file so tampering is detectable at verify time.
std::string sha256_hex(const void* bytes, size_t len);
std::string sha256_file(const std::string& path);

}  // namespace viewmark
