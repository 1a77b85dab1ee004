#include "heavyica/random.hpp"

namespace heavyica {

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) noexcept {
  // FNV-1a over the label, then fold in parent and index through the mixer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(parent ^ h) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace heavyica
