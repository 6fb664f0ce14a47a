#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace execopt {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Digest over every regular file below `root` (relative path + contents, in
// sorted path order). Used to compare run directories byte for byte.
std::string hash_directory(const std::filesystem::path& root);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename so readers never see a torn file.
void write_file(const std::filesystem::path& path, std::string_view contents);

// splitmix64 finalizer; used for seeded feature hashing.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace execopt
