#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace levybel {

// Purpose tags keep substreams of one path independent of each other.
enum class StreamTag : std::uint64_t {
  jumps = 0x6a756d7073ULL,
  payoff = 0x7061796f6666ULL,
  aux = 0x617578ULL,
};

struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
  StreamTag tag = StreamTag::jumps;
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: output n of a stream is mix64(key + (n+1) * gamma)
// with the key derived from (master_seed, path_index, tag). Streams are
// therefore addressable without any shared state, and identical specs give
// identical sequences regardless of which worker runs the path.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(const RngSpec& spec)
      : key_(detail::mix64(detail::mix64(spec.master_seed ^ 0x9e3779b97f4a7c15ULL) ^
                           detail::mix64(spec.path_index + 0x632be59bd9b4e019ULL) ^
                           static_cast<std::uint64_t>(spec.tag))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++draws_;
    return detail::mix64(key_ + draws_ * 0x9e3779b97f4a7c15ULL);
  }

  // Number of outputs drawn so far; seek(n) makes the next draw output n.
  std::uint64_t position() const { return draws_; }
  void seek(std::uint64_t n) { draws_ = n; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // The same uniform plus a fair sign from one of the 11 bits it discards.
  double uniform(bool& sign_bit) {
    const result_type r = (*this)();
    sign_bit = (r >> 10) & 1U;
    return static_cast<double>(r >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t draws_ = 0;
};

}  // namespace levybel
