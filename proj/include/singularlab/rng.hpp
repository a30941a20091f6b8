#pragma once

#include <array>
#include <cstdint>

namespace singularlab {

// Philox4x64-10 block function. Counter-based: the output is a pure
// function of (counter, key), so independent streams are just distinct
// keys and parallel draws are reproducible by construction.
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;
  static Counter block(Counter ctr, Key key);
};

// Derives a child stream id from (base, child). Hierarchical: experiment
// grids allocate one id per cell via chained calls.
std::uint64_t derive_stream(std::uint64_t base, std::uint64_t child);

// One independent random stream keyed by (seed, stream).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();                     // [0, 1), 53-bit
  double uniform(double a, double b);   // [a, b)
  double normal();                      // standard normal (Box-Muller)

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  Philox4x64::Counter ctr_;
  Philox4x64::Key key_;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace singularlab
