#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subtag {

/// ASCII-only lowercasing; bytes outside [A-Z] pass through untouched.
std::string ascii_lower(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits into lowercased tokens. Token characters are ASCII alphanumerics
/// plus any byte >= 0x80, so multi-byte UTF-8 (umlauts etc.) stays inside a
/// token; everything else separates.
std::vector<std::string> tokenize(std::string_view s);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Small deterministic RNG with implementation-independent output, used
/// wherever reproducibility across platforms matters (splits, sampling,
/// subset search). std::shuffle / std::uniform_int_distribution are
/// stdlib-specific, so they are avoided for anything persisted.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  /// Uniform double in [0, 1).
  double next_real();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace subtag
