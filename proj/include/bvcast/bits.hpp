#pragma once
// Growable bit set with ragged width: bits past the stored words read as
// zero, so sets over a growing id space can be combined without resizing
// every older set first.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bvcast {

class Bits {
 public:
  Bits() = default;

  void set(std::size_t i) {
    std::size_t w = i >> 6;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= (1ull << (i & 63));
  }

  bool test(std::size_t i) const {
    std::size_t w = i >> 6;
    return w < words_.size() && (words_[w] >> (i & 63)) & 1;
  }

  void or_with(const Bits& o) {
    if (o.words_.size() > words_.size()) words_.resize(o.words_.size(), 0);
    for (std::size_t w = 0; w < o.words_.size(); ++w) words_[w] |= o.words_[w];
  }

  bool intersects(const Bits& o) const {
    std::size_t m = words_.size() < o.words_.size() ? words_.size() : o.words_.size();
    for (std::size_t w = 0; w < m; ++w)
      if (words_[w] & o.words_[w]) return true;
    return false;
  }

  bool subset_of(const Bits& o) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t ow = w < o.words_.size() ? o.words_[w] : 0;
      if (words_[w] & ~ow) return false;
    }
    return true;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  void clear() { words_.clear(); }

  // Calls f(i) for every set bit in ascending order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t x = words_[w];
      while (x) {
        unsigned b = std::countr_zero(x);
        f((w << 6) + b);
        x &= x - 1;
      }
    }
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace bvcast
