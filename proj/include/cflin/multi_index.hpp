#pragma once

// Graded enumeration of nonnegative integer multi-indices.
//
// Grade k holds every gamma in Z_+^m with |gamma| = k, ordered
// lexicographically descending: (k,0,..,0) first, (0,..,0,k) last.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cflin {

using MultiIndex = std::vector<int>;

class DimensionCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// binomial(k+m-1, m-1), saturating at SIZE_MAX.
inline std::size_t graded_count(int m, int k) {
  if (m < 1 || k < 0) return 0;
  // C(n, j) with j = min(k, m-1) keeps the running product exact.
  const std::uint64_t n = static_cast<std::uint64_t>(k) + m - 1;
  std::uint64_t j = std::min<std::uint64_t>(k, m - 1);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= j; ++i) {
    acc = acc * (n - j + i) / i;
    if (acc > std::numeric_limits<std::size_t>::max()) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(acc);
}

/// Sum of graded_count(m, k) for k = 1..K, saturating.
inline std::size_t graded_total(int m, int K) {
  std::size_t total = 0;
  for (int k = 1; k <= K; ++k) {
    const std::size_t c = graded_count(m, k);
    if (c > std::numeric_limits<std::size_t>::max() - total) return std::numeric_limits<std::size_t>::max();
    total += c;
  }
  return total;
}

class MultiIndexTable {
 public:
  static constexpr std::size_t kDefaultCap = 200000;

  struct Location {
    int grade;
    std::size_t position;
  };

  MultiIndexTable() = default;

  MultiIndexTable(int m, int K, std::size_t cap = kDefaultCap) : m_(m), K_(K) {
    if (m < 2) throw std::invalid_argument("multi-index dimension must be at least 2");
    if (K < 1) throw std::invalid_argument("maximal grade must be at least 1");
    const std::size_t total = graded_total(m, K);
    if (total > cap)
      throw DimensionCapError("state dimension cap exceeded: " + std::to_string(total) + " > " +
                              std::to_string(cap));
    grades_.resize(K + 1);
    offsets_.assign(K + 2, 0);
    MultiIndex cur(m, 0);
    for (int k = 1; k <= K; ++k) {
      grades_[k].reserve(graded_count(m, k));
      fill(k, 0, cur, grades_[k]);
      offsets_[k + 1] = offsets_[k] + grades_[k].size();
      for (std::size_t pos = 0; pos < grades_[k].size(); ++pos) lookup_.emplace(grades_[k][pos], Location{k, pos});
    }
  }

  int ambient() const { return m_; }
  int max_grade() const { return K_; }

  /// Entries of grade k (1 <= k <= max_grade()).
  const std::vector<MultiIndex>& grade(int k) const { return grades_.at(k); }
  std::size_t grade_size(int k) const { return grades_.at(k).size(); }

  /// Flat index of the first entry of grade k when grades 1..k-1 precede it.
  std::size_t offset(int k) const { return offsets_.at(k); }

  /// Number of entries in grades 1..N.
  std::size_t total(int N) const { return offsets_.at(N + 1); }

  std::optional<Location> find(const MultiIndex& gamma) const {
    auto it = lookup_.find(gamma);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void fill(int remaining, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) const {
    if (pos == m_ - 1) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[pos] = v;
      fill(remaining - v, pos + 1, cur, out);
    }
  }

  int m_ = 0;
  int K_ = 0;
  std::vector<std::vector<MultiIndex>> grades_;
  std::vector<std::size_t> offsets_;
  std::map<MultiIndex, Location> lookup_;
};

inline MultiIndexTable enumerate_multiindices(int m, int K,
                                              std::size_t cap = MultiIndexTable::kDefaultCap) {
  return MultiIndexTable(m, K, cap);
}

}  // namespace cflin
