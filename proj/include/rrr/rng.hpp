#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace rrr {

// Counter-based pseudo-random stream (Philox-4x32-10).
//
// Two properties matter here and plain std::mt19937 offers neither:
//   * splittability: every (seed, path-of-tags) pair names an independent
//     stream, so parallel replication workers can draw without coordination
//     and results do not depend on scheduling order;
//   * portability: output is a pure function of 64-bit integer arithmetic,
//     identical on every platform, so simulations are bit-reproducible.
//
// The generator state is a 128-bit counter split as (block index, stream id)
// and a 64-bit key; each block of the keyed permutation yields four 32-bit
// words, consumed as two 64-bit outputs.

namespace detail {

// Finalizer of the splitmix64 generator; a cheap 64-bit mixing permutation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : ident_(detail::mix64(seed + detail::kGolden)),
        stream_(detail::mix64(ident_ + detail::kGolden)) {}

  // Derives an independent substream; children with distinct tags (or taken
  // from distinct parents) never share output blocks.
  RandomStream child(std::uint64_t tag) const {
    RandomStream s(*this);
    s.ident_ = detail::mix64(ident_ ^ detail::mix64(tag + detail::kGolden));
    s.stream_ = detail::mix64(s.ident_ + detail::kGolden);
    s.block_ = 0;
    s.have_ = 0;
    s.has_spare_ = false;
    return s;
  }

  RandomStream child_path(std::initializer_list<std::uint64_t> tags) const {
    RandomStream s(*this);
    for (std::uint64_t t : tags) s = s.child(t);
    return s;
  }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method (pairs are generated
  // together; the spare is cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Student-t with nu degrees of freedom: N(0,1) / sqrt(chi2_nu / nu).
  // Unit-variance when standardize is set (divides by sqrt(nu/(nu-2))).
  double student_t(int nu, bool standardize = false) {
    const double z = normal();
    double chi2 = 0.0;
    for (int i = 0; i < nu; ++i) {
      const double g = normal();
      chi2 += g * g;
    }
    double t = z / std::sqrt(chi2 / static_cast<double>(nu));
    if (standardize) t /= std::sqrt(static_cast<double>(nu) / (nu - 2));
    return t;
  }

  // Uniform on (-sqrt(3), sqrt(3)): mean zero, unit variance.
  double uniform_sym_unit_var() {
    return (2.0 * uniform01() - 1.0) * 1.7320508075688772;
  }

 private:
  void refill() {
    // Philox-4x32 with 10 rounds.
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(ident_);
    std::uint32_t k1 = static_cast<std::uint32_t>(ident_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW0;
      k1 += kW1;
    }
    ++block_;
    buf_[1] = (static_cast<std::uint64_t>(c1) << 32) | c0;
    buf_[0] = (static_cast<std::uint64_t>(c3) << 32) | c2;
    have_ = 2;
  }

  std::uint64_t ident_;        // key of the keyed permutation
  std::uint64_t stream_;       // high half of the 128-bit counter
  std::uint64_t block_ = 0;    // low half: increments per generated block
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fixed tags naming the purpose of each substream. Keeping them distinct
// (and deriving per-index children below them) makes every random quantity
// in a run a pure function of (master seed, semantic path).
namespace tags {
constexpr std::uint64_t kDesign = 0xD5;
constexpr std::uint64_t kCoefficient = 0xC0;
constexpr std::uint64_t kNoise = 0x40;
constexpr std::uint64_t kSnr = 0x54;
constexpr std::uint64_t kMoments = 0x30;
constexpr std::uint64_t kGnorm = 0x47;
constexpr std::uint64_t kPairZ = 0x5A;
}  // namespace tags

}  // namespace rrr
