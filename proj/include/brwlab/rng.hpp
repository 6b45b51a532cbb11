#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace brw {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

// Independent stream addressed by (seed, domain, a, b, c). Each draw
// consumes the next half of a Philox block; the fourth counter word is
// the block index. Streams never overlap for distinct addresses.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t domain, std::uint32_t a,
                std::uint32_t b, std::uint32_t c);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  std::uint32_t blocks_used() const { return block_; }

 private:
  PhiloxKey key_;
  PhiloxCounter base_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

// Stream domains, so different consumers of one seed never collide.
inline constexpr std::uint32_t kDomainBranching = 0;
inline constexpr std::uint32_t kDomainPercolation = 1;
inline constexpr std::uint32_t kDomainTest = 0xfffffff0u;

// Walker alias table for O(1) sampling from a finite law.
class AliasTable {
 public:
  AliasTable() = default;
  // weights need not be normalized; they must be nonnegative with a
  // positive sum.
  explicit AliasTable(const std::vector<double>& weights);

  std::size_t size() const { return prob_.size(); }
  std::uint32_t sample(double u) const {
    const double x = u * static_cast<double>(prob_.size());
    auto i = static_cast<std::uint32_t>(x);
    if (i >= prob_.size()) i = static_cast<std::uint32_t>(prob_.size() - 1);
    return (x - i) < prob_[i] ? i : alias_[i];
  }
  template <class Stream>
  std::uint32_t sample(Stream& s) const {
    return prob_.size() == 1 ? 0 : sample(s.uniform());
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace brw
