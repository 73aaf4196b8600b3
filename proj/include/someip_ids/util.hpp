#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace someip_ids {

// Derives an independent stream seed from a base seed and a stream tag
// (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base ^ (tag * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// mt19937_64 with portable bounded draws. The std:: distributions are
// implementation-defined, so bound reduction is done here to keep outputs
// identical across toolchains.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Inclusive range [lo, hi].
  std::uint32_t uniform_u32(std::uint32_t lo, std::uint32_t hi) {
    std::uint64_t range = std::uint64_t(hi) - lo + 1;
    auto wide = static_cast<unsigned __int128>(next_u64());
    return lo + static_cast<std::uint32_t>((wide * range) >> 64);
  }

  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_u32(0, static_cast<std::uint32_t>(i - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values out of [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
      std::size_t j = uniform_u32(0, static_cast<std::uint32_t>(pool.size() - 1));
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

inline void put_u8(std::vector<std::uint8_t>& b, std::uint8_t v) {
  b.push_back(v);
}
inline void put_u16be(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v));
}
inline void put_u32be(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(std::uint8_t(v >> 24));
  b.push_back(std::uint8_t(v >> 16));
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v));
}
inline void put_u16le(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v));
  b.push_back(std::uint8_t(v >> 8));
}
inline void put_u32le(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(std::uint8_t(v));
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v >> 16));
  b.push_back(std::uint8_t(v >> 24));
}

inline std::uint16_t get_u16be(const std::uint8_t* p) {
  return std::uint16_t((std::uint16_t(p[0]) << 8) | p[1]);
}
inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}
inline std::uint16_t get_u16le(const std::uint8_t* p) {
  return std::uint16_t(std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8));
}
inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace someip_ids
