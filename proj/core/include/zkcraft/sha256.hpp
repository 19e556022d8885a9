#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace zkcraft {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (FIPS 180-4). Streaming interface so transcripts and
/// Merkle nodes can absorb data without intermediate buffers.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const void* data, std::size_t len);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(const std::vector<std::uint8_t>& v) { update(v.data(), v.size()); }
  Digest finish();

 private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_;
  std::uint64_t total_len_ = 0;
  std::array<std::uint8_t, 64> buf_;
  std::size_t buf_len_ = 0;
};

Digest sha256(const void* data, std::size_t len);
Digest sha256(std::string_view s);
Digest sha256(const std::vector<std::uint8_t>& v);

/// First 8 bytes of a digest as a big-endian integer.
std::uint64_t trunc64(const Digest& d);

std::string hex_digest(const Digest& d);

}  // namespace zkcraft
