#pragma once

// Carleman-Fourier linearization.
//
// The state is lifted onto the complex exponentials e^{i gamma^T xt} of the
// extended state xt = [tau_1 x, .., tau_L x, -tau_1 x, .., -tau_L x], grouped
// by grade |gamma|. The resulting operator is block-upper-triangular: block
// (k, l) couples grade k to grade l >= k, and every diagonal block is a
// diagonal matrix with purely imaginary entries.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cflin/fourier_field.hpp"
#include "cflin/multi_index.hpp"

namespace cflin {

struct BlockEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Complex value;
};

/// Coordinate triplets of one block, in-block indices, sorted by (row, col).
using Block = std::vector<BlockEntry>;
using BlockMap = std::map<std::pair<int, int>, Block>;

/// Blocks of a finite section before an initial state is attached.
struct BlockSet {
  int N = 0;
  std::shared_ptr<const MultiIndexTable> layout;
  BlockMap blocks;
};

class LiftError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct LiftedSystem {
  int N = 0;
  std::shared_ptr<const MultiIndexTable> layout;
  std::size_t dim = 0;
  BlockMap blocks;
  /// Global operator; grade k occupies rows/cols [layout->offset(k), layout->offset(k+1)).
  SparseOperator op;
  Eigen::VectorXcd z0;

  std::size_t offset(int k) const { return layout->offset(k); }
  /// Number of grade-1 coordinates (the extended dimension m).
  std::size_t primary_size() const { return layout->grade_size(1); }
};

namespace detail {

// Sums duplicates, drops exact zeros, sorts.
inline Block finalize_block(std::map<std::pair<std::size_t, std::size_t>, Complex>&& acc) {
  Block out;
  out.reserve(acc.size());
  for (auto& [rc, v] : acc)
    if (v != Complex{}) out.push_back({rc.first, rc.second, v});
  return out;
}

}  // namespace detail

/// [tau_1 x0, .., tau_L x0, -tau_1 x0, .., -tau_L x0]
inline std::vector<double> extend_state(const std::vector<double>& x0, const std::vector<double>& taus) {
  const std::size_t d = x0.size();
  const std::size_t L = taus.size();
  std::vector<double> out(2 * d * L);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t p = 0; p < d; ++p) {
      out[l * d + p] = taus[l] * x0[p];
      out[(L + l) * d + p] = -taus[l] * x0[p];
    }
  }
  return out;
}

/// Single-frequency one-dimensional blocks B_{k,l}, k <= l <= N.
///
/// Row p of grade k is e^{i((k-p)x - p x)}. For a stored offset s = l-k,
/// entry (p, p) is i(k-2p) g_s and entry (p, s+p) is i(k-2p) g_{-s}; the two
/// coincide on the diagonal when s = 0.
inline BlockSet build_blocks_1d(const FourierField1D& field, int N) {
  if (!field.real_valued()) throw FieldError("field not real-valued");
  if (N < 1) throw std::invalid_argument("section order N must be at least 1");
  BlockSet out;
  out.N = N;
  out.layout = std::make_shared<const MultiIndexTable>(2, N);

  std::map<int, std::pair<Complex, Complex>> offsets;  // s -> (g_s, g_{-s})
  for (const auto& [n, g] : field.coeffs()) {
    auto& slot = offsets[std::abs(n)];
    (n >= 0 ? slot.first : slot.second) = g;
  }

  for (const auto& [s, g] : offsets) {
    const auto [g_pos, g_neg] = g;
    for (int k = 1; k + s <= N; ++k) {
      std::map<std::pair<std::size_t, std::size_t>, Complex> acc;
      for (int p = 0; p <= k; ++p) {
        const Complex factor(0.0, static_cast<double>(k - 2 * p));
        if (s == 0) {
          acc[{p, p}] += factor * g_pos.real();  // g_0 is real for a real field
          continue;
        }
        if (g_pos != Complex{}) acc[{p, p}] += factor * g_pos;
        if (g_neg != Complex{}) acc[{p, p + s}] += factor * g_neg;
      }
      Block block = detail::finalize_block(std::move(acc));
      if (!block.empty()) out.blocks[{k, k + s}] = std::move(block);
    }
  }
  return out;
}

/// Multi-frequency blocks F_{k,l}: entry (gamma, delta) = i sum_j gamma_j f_{j; delta-gamma}.
inline BlockSet build_blocks_multi(const ExtendedField& ext, std::shared_ptr<const MultiIndexTable> table,
                                   int N) {
  if (!table) throw std::invalid_argument("missing multi-index table");
  if (table->ambient() != ext.m) throw std::invalid_argument("table dimension does not match extended field");
  if (N < 1 || N > table->max_grade()) throw std::invalid_argument("section order outside table range");
  BlockSet out;
  out.N = N;
  out.layout = table;

  std::map<std::pair<int, int>, std::map<std::pair<std::size_t, std::size_t>, Complex>> acc;
  MultiIndex delta(ext.m);
  for (int k = 1; k <= N; ++k) {
    const auto& rows = table->grade(k);
    for (std::size_t row = 0; row < rows.size(); ++row) {
      const MultiIndex& gamma = rows[row];
      for (const auto& [shift, fj] : ext.fcoeffs) {
        int s = 0;
        for (int v : shift) s += v;
        if (k + s > N) continue;
        Complex value{};
        for (const auto& [j, f] : fj) value += static_cast<double>(gamma[j]) * f;
        if (s == 0) value = value.real();
        if (value == Complex{}) continue;
        for (int i = 0; i < ext.m; ++i) delta[i] = gamma[i] + shift[i];
        const auto loc = table->find(delta);
        acc[{k, k + s}][{row, loc->position}] += Complex(0.0, 1.0) * value;
      }
    }
  }
  for (auto& [kl, entries] : acc) {
    Block block = detail::finalize_block(std::move(entries));
    if (!block.empty()) out.blocks[kl] = std::move(block);
  }
  return out;
}

/// e^{i gamma^T xt0} for every gamma of grade 1..N, in layout order.
inline Eigen::VectorXcd initial_lifted(const std::vector<double>& x0_ext, const MultiIndexTable& table, int N) {
  if (N < 1 || N > table.max_grade()) throw std::invalid_argument("section order outside table range");
  if (static_cast<int>(x0_ext.size()) != table.ambient())
    throw std::invalid_argument("extended state length does not match table");
  Eigen::VectorXcd z(static_cast<Eigen::Index>(table.total(N)));
  Eigen::Index idx = 0;
  for (int k = 1; k <= N; ++k) {
    for (const MultiIndex& gamma : table.grade(k)) {
      double phase = 0.0;
      for (std::size_t i = 0; i < gamma.size(); ++i) phase += gamma[i] * x0_ext[i];
      z[idx++] = std::polar(1.0, phase);
    }
  }
  return z;
}

/// Concatenates blocks into one sparse operator and checks the structural invariants.
inline LiftedSystem assemble(BlockSet blocks, Eigen::VectorXcd z0) {
  LiftedSystem sys;
  sys.N = blocks.N;
  sys.layout = std::move(blocks.layout);
  if (!sys.layout) throw LiftError("missing layout");
  sys.dim = sys.layout->total(sys.N);
  if (static_cast<std::size_t>(z0.size()) != sys.dim) throw LiftError("initial state length does not match layout");

  std::vector<Eigen::Triplet<Complex>> triplets;
  for (const auto& [kl, block] : blocks.blocks) {
    const auto [k, l] = kl;
    if (k < 1 || l > sys.N) throw LiftError("block index outside the finite section");
    if (l < k) throw LiftError("block-upper-triangular invariant violated: block (" + std::to_string(k) + "," +
                               std::to_string(l) + ")");
    const std::size_t rows = sys.layout->grade_size(k);
    const std::size_t cols = sys.layout->grade_size(l);
    for (const BlockEntry& e : block) {
      if (e.row >= rows || e.col >= cols) throw LiftError("block entry outside block shape");
      if (k == l) {
        if (e.row != e.col) throw LiftError("diagonal block is not diagonal");
        if (e.value.real() != 0.0) throw LiftError("diagonal block entry is not purely imaginary");
      }
      triplets.emplace_back(static_cast<int>(sys.layout->offset(k) + e.row),
                            static_cast<int>(sys.layout->offset(l) + e.col), e.value);
    }
  }
  for (Eigen::Index i = 0; i < z0.size(); ++i)
    if (std::abs(std::abs(z0[i]) - 1.0) > 1e-12) throw LiftError("initial lifted state is not unit modulus");

  sys.op.resize(static_cast<Eigen::Index>(sys.dim), static_cast<Eigen::Index>(sys.dim));
  sys.op.setFromTriplets(triplets.begin(), triplets.end());
  sys.op.makeCompressed();
  sys.blocks = std::move(blocks.blocks);
  sys.z0 = std::move(z0);
  return sys;
}

/// Finite section of order N for x' = g(x), x(0) = x0.
inline LiftedSystem lift_1d(const FourierField1D& field, double x0, int N) {
  BlockSet blocks = build_blocks_1d(field, N);
  Eigen::VectorXcd z0 = initial_lifted(extend_state({x0}, {1.0}), *blocks.layout, N);
  return assemble(std::move(blocks), std::move(z0));
}

/// Finite section of order N for the quasi-periodic system x' = g(x), x(0) = x0.
inline LiftedSystem lift_multi(const QuasiPeriodicField& field, const std::vector<double>& x0, int N,
                               std::size_t cap = MultiIndexTable::kDefaultCap) {
  if (static_cast<int>(x0.size()) != field.d()) throw std::invalid_argument("initial state length does not match field");
  const ExtendedField ext = extend_field(field);
  auto table = std::make_shared<const MultiIndexTable>(ext.m, N, cap);
  BlockSet blocks = build_blocks_multi(ext, table, N);
  Eigen::VectorXcd z0 = initial_lifted(extend_state(x0, field.taus()), *table, N);
  return assemble(std::move(blocks), std::move(z0));
}

}  // namespace cflin
