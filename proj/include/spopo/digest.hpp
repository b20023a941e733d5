#pragma once

#include <string>
#include <string_view>

namespace spopo {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

/// Round-trippable decimal text for a double (%.17g).
std::string exact_text(double x);

}  // namespace spopo
