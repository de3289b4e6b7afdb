#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ztran {

using Tag32 = std::array<std::uint8_t, 32>;

/// HMAC-SHA256 over the concatenation of `parts`.
Tag32 keyed_tag(std::span<const std::uint8_t> key,
                std::span<const std::span<const std::uint8_t>> parts);

/// Compares without early exit.
bool tags_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace ztran
