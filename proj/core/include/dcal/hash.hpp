#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace dcal {

using Digest256 = std::array<unsigned char, 32>;

Digest256 sha256(std::string_view data);
std::string hex_digest(const Digest256& d);

}  // namespace dcal
