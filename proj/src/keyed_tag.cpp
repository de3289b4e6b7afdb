#include "ztran/keyed_tag.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <stdexcept>

namespace ztran {

Tag32 keyed_tag(std::span<const std::uint8_t> key,
                std::span<const std::span<const std::uint8_t>> parts) {
  std::vector<std::uint8_t> message;
  for (auto part : parts) message.insert(message.end(), part.begin(), part.end());

  Tag32 out{};
  unsigned int out_len = 0;
  const unsigned char* res =
      HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(),
           message.size(), out.data(), &out_len);
  if (res == nullptr || out_len != out.size()) {
    throw std::runtime_error("HMAC-SHA256 failed");
  }
  return out;
}

bool tags_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace ztran
