#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace onebit {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used to turn stream names into integers.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives a child seed from a parent seed and a path of integer keys:
///   s = mix64(parent); for each key k: s = mix64(s ^ mix64(k)).
/// Children of one parent are independent of the order in which they are
/// requested, which is what keeps parallel generation reproducible.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = mix64(parent);
    for (std::uint64_t k : path) s = mix64(s ^ mix64(k));
    return s;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
    return derive_seed(parent, {tag_hash(tag)});
}

}  // namespace onebit
