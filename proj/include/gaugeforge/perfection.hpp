#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gaugeforge/errors.hpp"

namespace gaugeforge {

// Finite-dimensional commutative F_p-algebra given by structure constants.
// The Frobenius a -> a^p is F_p-linear here (coefficients are fixed by x^p),
// so perfection questions become exact linear algebra over F_p.
struct FiniteAlgebra {
  uint32_t p = 2;
  size_t dim = 0;
  std::vector<uint32_t> unit;                            // coordinates of 1
  std::vector<std::vector<std::vector<uint32_t>>> mult;  // mult[i][j] = e_i e_j

  std::vector<uint32_t> multiply(const std::vector<uint32_t>& x,
                                 const std::vector<uint32_t>& y) const {
    std::vector<uint32_t> out(dim, 0);
    for (size_t i = 0; i < dim; ++i) {
      if (!x[i]) continue;
      for (size_t j = 0; j < dim; ++j) {
        if (!y[j]) continue;
        uint64_t c = uint64_t(x[i]) * y[j] % p;
        for (size_t k = 0; k < dim; ++k)
          out[k] = uint32_t((out[k] + c * mult[i][j][k]) % p);
      }
    }
    return out;
  }

  std::vector<uint32_t> power(const std::vector<uint32_t>& x, uint64_t e) const {
    std::vector<uint32_t> acc = unit, base = x;
    while (e) {
      if (e & 1) acc = multiply(acc, base);
      base = multiply(base, base);
      e >>= 1;
    }
    return acc;
  }

  // Matrix of the Frobenius endomorphism, columns = e_i^p.
  std::vector<std::vector<uint32_t>> frobenius_matrix() const {
    std::vector<std::vector<uint32_t>> cols;
    for (size_t i = 0; i < dim; ++i) {
      std::vector<uint32_t> e(dim, 0);
      e[i] = 1;
      cols.push_back(power(e, p));
    }
    return cols;
  }
};

namespace detail {

// Row echelon over F_p; returns the reduced basis rows (canonical RREF).
inline std::vector<std::vector<uint32_t>> fp_rref(uint32_t p,
                                                  std::vector<std::vector<uint32_t>> rows) {
  size_t cols = rows.empty() ? 0 : rows[0].size();
  size_t lead = 0;
  for (size_t c = 0; c < cols && lead < rows.size(); ++c) {
    size_t piv = lead;
    while (piv < rows.size() && rows[piv][c] % p == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[lead], rows[piv]);
    // scale to 1
    uint32_t inv = 1, a = rows[lead][c] % p;
    for (uint32_t e = 0; e < p - 2; ++e) inv = uint32_t(uint64_t(inv) * a % p);
    for (auto& x : rows[lead]) x = uint32_t(uint64_t(x) * inv % p);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (i == lead) continue;
      uint32_t s = rows[i][c] % p;
      if (!s) continue;
      for (size_t j = 0; j < cols; ++j)
        rows[i][j] = uint32_t((rows[i][j] + uint64_t(p - s) * rows[lead][j]) % p);
    }
    ++lead;
  }
  std::vector<std::vector<uint32_t>> out;
  for (auto& r : rows) {
    bool nz = false;
    for (auto x : r) nz = nz || (x % p != 0);
    if (nz) out.push_back(r);
  }
  return out;
}

inline size_t fp_rank(uint32_t p, const std::vector<std::vector<uint32_t>>& rows) {
  return fp_rref(p, rows).size();
}

}  // namespace detail

inline bool is_perfect(const FiniteAlgebra& A) {
  return detail::fp_rank(A.p, A.frobenius_matrix()) == A.dim;
}

struct PerfectCore {
  std::vector<std::vector<uint32_t>> basis;  // coordinates in A, RREF rows
  size_t iterations = 0;                      // stabilization count
  FiniteAlgebra algebra;                      // induced structure constants
};

// A_per = intersection of the phi^n(A): iterate the Frobenius image until the
// subspace stabilizes; finiteness makes the chain eventually constant and the
// limit is a perfect subalgebra.
inline PerfectCore perfect_core(const FiniteAlgebra& A) {
  std::vector<std::vector<uint32_t>> basis;
  for (size_t i = 0; i < A.dim; ++i) {
    std::vector<uint32_t> e(A.dim, 0);
    e[i] = 1;
    basis.push_back(e);
  }
  basis = detail::fp_rref(A.p, basis);
  size_t iters = 0;
  while (true) {
    std::vector<std::vector<uint32_t>> img;
    for (const auto& b : basis) img.push_back(A.power(b, A.p));
    img = detail::fp_rref(A.p, img);
    if (img == basis) break;
    basis = std::move(img);
    ++iters;
  }
  // induced structure constants: products of basis elements in RREF coords
  PerfectCore out;
  out.basis = basis;
  out.iterations = iters;
  FiniteAlgebra S;
  S.p = A.p;
  S.dim = basis.size();
  // express a vector of A in the RREF basis (pivot-column reading)
  std::vector<size_t> pivots;
  for (const auto& row : basis) {
    size_t c = 0;
    while (c < A.dim && row[c] % A.p == 0) ++c;
    pivots.push_back(c);
  }
  auto coords = [&](std::vector<uint32_t> v) {
    std::vector<uint32_t> out_c(basis.size(), 0);
    for (size_t t = 0; t < basis.size(); ++t) {
      uint32_t c = v[pivots[t]] % A.p;
      out_c[t] = c;
      if (!c) continue;
      for (size_t j = 0; j < A.dim; ++j)
        v[j] = uint32_t((v[j] + uint64_t(A.p - c) * basis[t][j]) % A.p);
    }
    for (auto x : v)
      if (x % A.p) throw PreconditionError("perfect_core: element outside subalgebra");
    return out_c;
  };
  S.unit = coords(A.unit);
  S.mult.assign(S.dim, std::vector<std::vector<uint32_t>>(S.dim));
  for (size_t i = 0; i < S.dim; ++i)
    for (size_t j = 0; j < S.dim; ++j)
      S.mult[i][j] = coords(A.multiply(basis[i], basis[j]));
  out.algebra = std::move(S);
  return out;
}

// Monomial quotient algebra F_p[x_1..x_v] / (monomials outside the order
// ideal). `staircase` lists the exponent tuples of the monomial basis and
// must be downward closed and contain 0.
inline FiniteAlgebra monomial_algebra(uint32_t p,
                                      const std::vector<std::vector<uint32_t>>& staircase) {
  FiniteAlgebra A;
  A.p = p;
  A.dim = staircase.size();
  std::map<std::vector<uint32_t>, size_t> index;
  for (size_t i = 0; i < staircase.size(); ++i) index[staircase[i]] = i;
  if (!index.count(std::vector<uint32_t>(staircase[0].size(), 0)))
    throw PreconditionError("monomial_algebra: staircase must contain 1");
  A.unit.assign(A.dim, 0);
  A.unit[index.at(std::vector<uint32_t>(staircase[0].size(), 0))] = 1;
  A.mult.assign(A.dim, std::vector<std::vector<uint32_t>>(A.dim));
  for (size_t i = 0; i < A.dim; ++i)
    for (size_t j = 0; j < A.dim; ++j) {
      std::vector<uint32_t> e(staircase[i].size());
      for (size_t k = 0; k < e.size(); ++k) e[k] = staircase[i][k] + staircase[j][k];
      std::vector<uint32_t> out(A.dim, 0);
      auto it = index.find(e);
      if (it != index.end()) out[it->second] = 1;
      A.mult[i][j] = std::move(out);
    }
  return A;
}

// All order ideals (downward-closed exponent sets) of N^vars of size <= max_dim,
// as canonical sorted staircases. Exhaustive and deterministic.
inline std::vector<std::vector<std::vector<uint32_t>>> all_order_ideals(size_t vars,
                                                                        size_t max_dim) {
  std::set<std::set<std::vector<uint32_t>>> seen;
  std::vector<std::vector<std::vector<uint32_t>>> out;
  std::set<std::vector<uint32_t>> start{std::vector<uint32_t>(vars, 0)};
  std::vector<std::set<std::vector<uint32_t>>> frontier{start};
  seen.insert(start);
  while (!frontier.empty()) {
    std::vector<std::set<std::vector<uint32_t>>> next;
    for (const auto& ideal : frontier) {
      out.emplace_back(ideal.begin(), ideal.end());
      if (ideal.size() == max_dim) continue;
      // grow by any exponent whose lower neighbours are all present
      std::set<std::vector<uint32_t>> candidates;
      for (const auto& e : ideal)
        for (size_t v = 0; v < vars; ++v) {
          auto up = e;
          up[v]++;
          if (ideal.count(up)) continue;
          bool closed = true;
          for (size_t w = 0; w < vars && closed; ++w) {
            if (up[w] == 0) continue;
            auto down = up;
            down[w]--;
            closed = ideal.count(down) > 0;
          }
          if (closed) candidates.insert(up);
        }
      for (const auto& c : candidates) {
        auto bigger = ideal;
        bigger.insert(c);
        if (seen.insert(bigger).second) next.push_back(std::move(bigger));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace gaugeforge
