#include "lcmdeconv/seeding.hpp"

namespace lcmdeconv {

namespace {

// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t replicate)
{
  const std::uint64_t key = (cell << 32) ^ (replicate & 0xffffffffULL) ^ (replicate >> 32);
  return mix64(mix64(master_seed + 0x9e3779b97f4a7c15ULL) ^ key);
}

std::uint32_t cell_id(std::string_view label)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::uint32_t>(h ^ (h >> 32));
}

} // namespace lcmdeconv
