#pragma once

#include <string>
#include <string_view>

namespace gazebench {

// Hex-encoded SHA-256. Content addressing for the response cache, template
// hashes and config fingerprints.
std::string sha256_hex(std::string_view bytes);

}  // namespace gazebench
