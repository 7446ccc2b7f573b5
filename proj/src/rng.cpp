#include "mvp/rng.hpp"

namespace mvp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view component,
                          std::uint64_t index) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ fnv1a(component));
  return splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace mvp
