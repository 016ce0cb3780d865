#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "gaugeforge/witt.hpp"

namespace gaugeforge {

// Finitely generated module over W_n(F_q) in canonical form: a direct sum
// of W_{e_i} with e_1 >= e_2 >= ... >= e_r, 1 <= e_i <= n. Two modules are
// isomorphic iff their divisor lists agree.
struct WnModule {
  WCtxPtr ctx;
  std::vector<uint32_t> divisors;

  size_t rank() const { return divisors.size(); }
  uint32_t length() const {
    return std::accumulate(divisors.begin(), divisors.end(), 0u);
  }
  bool is_zero() const { return divisors.empty(); }
  bool is_free() const {
    for (auto e : divisors)
      if (e != ctx->n()) return false;
    return true;
  }
  bool operator==(const WnModule& o) const {
    return divisors == o.divisors && ctx->same(*o.ctx);
  }
  bool operator!=(const WnModule& o) const { return !(*this == o); }
};

inline WnModule make_module(WCtxPtr ctx, std::vector<uint32_t> divisors) {
  for (auto e : divisors)
    if (e < 1 || e > ctx->n())
      throw PreconditionError("module divisor out of range");
  std::sort(divisors.begin(), divisors.end(), std::greater<uint32_t>());
  return WnModule{std::move(ctx), std::move(divisors)};
}

inline WnModule free_module(WCtxPtr ctx, size_t rank) {
  uint32_t n = ctx->n();
  return WnModule{std::move(ctx), std::vector<uint32_t>(rank, n)};
}

inline WnModule zero_module(WCtxPtr ctx) { return WnModule{std::move(ctx), {}}; }

inline WnModule direct_sum(const WnModule& a, const WnModule& b) {
  if (!a.ctx->same(*b.ctx)) throw ContextError("direct_sum: context mismatch");
  auto div = a.divisors;
  div.insert(div.end(), b.divisors.begin(), b.divisors.end());
  return make_module(a.ctx, std::move(div));
}

// Elements of a WnModule are coordinate vectors; coordinate i is canonical
// mod p^{e_i} (Witt coordinates >= e_i zeroed).
using WVec = std::vector<WittElem>;

inline WVec module_zero(const WnModule& m) {
  return WVec(m.rank(), m.ctx->zero());
}

inline WVec module_normalize(const WnModule& m, WVec x) {
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = m.ctx->reduce_mod_pe(x[i], m.divisors[i]);
  return x;
}

inline bool module_is_zero_elem(const WnModule& m, const WVec& x) {
  for (size_t i = 0; i < x.size(); ++i)
    if (!m.ctx->is_zero(m.ctx->reduce_mod_pe(x[i], m.divisors[i]))) return false;
  return true;
}

inline uint64_t module_card(const WnModule& m) {
  uint64_t c = 1;
  for (auto e : m.divisors)
    for (uint32_t i = 0; i < e; ++i) c *= m.ctx->field().q();
  return c;
}

inline WVec module_from_index(const WnModule& m, uint64_t idx) {
  WVec x = module_zero(m);
  const auto& F = m.ctx->field();
  for (size_t i = 0; i < m.rank(); ++i)
    for (uint32_t j = 0; j < m.divisors[i]; ++j) {
      x[i].a[j] = F.from_index(idx % F.q());
      idx /= F.q();
    }
  return x;
}

// ---------------------------------------------------------------------------
// Dense matrices over W_n.

struct WMat {
  size_t rows = 0, cols = 0;
  std::vector<WittElem> e;

  WittElem& at(size_t i, size_t j) { return e[i * cols + j]; }
  const WittElem& at(size_t i, size_t j) const { return e[i * cols + j]; }
  bool operator==(const WMat& o) const {
    return rows == o.rows && cols == o.cols && e == o.e;
  }
};

inline WMat wmat_zero(const WittContext& W, size_t r, size_t c) {
  return WMat{r, c, std::vector<WittElem>(r * c, W.zero())};
}

inline WMat wmat_identity(const WittContext& W, size_t r) {
  WMat m = wmat_zero(W, r, r);
  for (size_t i = 0; i < r; ++i) m.at(i, i) = W.one();
  return m;
}

inline WMat wmat_mul(const WittContext& W, const WMat& a, const WMat& b) {
  if (a.cols != b.rows) throw PreconditionError("wmat_mul: shape mismatch");
  WMat r = wmat_zero(W, a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t k = 0; k < a.cols; ++k) {
      if (W.is_zero(a.at(i, k))) continue;
      for (size_t j = 0; j < b.cols; ++j)
        r.at(i, j) = W.add(r.at(i, j), W.mul(a.at(i, k), b.at(k, j)));
    }
  return r;
}

inline WMat wmat_add(const WittContext& W, const WMat& a, const WMat& b) {
  WMat r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] = W.add(r.e[i], b.e[i]);
  return r;
}

inline WMat wmat_scale(const WittContext& W, const WittElem& s, const WMat& a) {
  WMat r = a;
  for (auto& x : r.e) x = W.mul(s, x);
  return r;
}

inline WMat wmat_sigma_pow(const WittContext& W, const WMat& a, int64_t s) {
  WMat r = a;
  for (auto& x : r.e) x = W.frobenius_pow(x, s);
  return r;
}

inline WVec wmat_apply(const WittContext& W, const WMat& a, const WVec& x) {
  if (a.cols != x.size()) throw PreconditionError("wmat_apply: shape mismatch");
  WVec y(a.rows, W.zero());
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < a.cols; ++j)
      y[i] = W.add(y[i], W.mul(a.at(i, j), x[j]));
  return y;
}

// ---------------------------------------------------------------------------
// Smith decomposition over the chain ring W_n: A = U * diag(p^{c_i}) * V with
// U, V invertible. Exponents come out weakly increasing; missing diagonal
// slots count as p^n = 0.

struct SnfResult {
  std::vector<uint32_t> exponents;  // size min(rows, cols)
  WMat U, Uinv, V, Vinv;
};

inline SnfResult snf(const WittContext& W, WMat A) {
  size_t r = A.rows, c = A.cols;
  SnfResult out;
  out.U = wmat_identity(W, r);
  out.Uinv = wmat_identity(W, r);
  out.V = wmat_identity(W, c);
  out.Vinv = wmat_identity(W, c);
  size_t steps = std::min(r, c);
  out.exponents.assign(steps, W.n());

  auto row_addmul = [&](WMat& M, size_t dst, size_t src, const WittElem& q) {
    for (size_t j = 0; j < M.cols; ++j)
      M.at(dst, j) = W.add(M.at(dst, j), W.mul(q, M.at(src, j)));
  };
  auto col_addmul = [&](WMat& M, size_t dst, size_t src, const WittElem& q) {
    for (size_t i = 0; i < M.rows; ++i)
      M.at(i, dst) = W.add(M.at(i, dst), W.mul(q, M.at(i, src)));
  };

  for (size_t k = 0; k < steps; ++k) {
    // minimal-valuation pivot in the trailing submatrix; ties by row, column
    uint32_t best = W.n() + 1;
    size_t bi = k, bj = k;
    for (size_t i = k; i < r; ++i)
      for (size_t j = k; j < c; ++j) {
        uint32_t v = W.val(A.at(i, j));
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (best > W.n() || best == W.n()) break;  // all-zero tail

    if (bi != k) {
      for (size_t j = 0; j < c; ++j) std::swap(A.at(k, j), A.at(bi, j));
      for (size_t j = 0; j < r; ++j) std::swap(out.U.at(j, k), out.U.at(j, bi));
      for (size_t j = 0; j < r; ++j) std::swap(out.Uinv.at(k, j), out.Uinv.at(bi, j));
    }
    if (bj != k) {
      for (size_t i = 0; i < r; ++i) std::swap(A.at(i, k), A.at(i, bj));
      for (size_t i = 0; i < c; ++i) std::swap(out.V.at(k, i), out.V.at(bj, i));
      for (size_t i = 0; i < c; ++i) std::swap(out.Vinv.at(i, k), out.Vinv.at(i, bj));
    }
    // scale row k so the pivot is exactly p^best: A <- L A with L = diag(u^-1)
    WittElem u = W.unit_part(A.at(k, k));
    WittElem uinv = W.inv(u);
    for (size_t j = 0; j < c; ++j) A.at(k, j) = W.mul(uinv, A.at(k, j));
    for (size_t i = 0; i < r; ++i) out.U.at(i, k) = W.mul(u, out.U.at(i, k));
    for (size_t j = 0; j < r; ++j) out.Uinv.at(k, j) = W.mul(uinv, out.Uinv.at(k, j));

    // clear column k below/above and row k right, quotients are exact
    for (size_t i = 0; i < r; ++i) {
      if (i == k || W.is_zero(A.at(i, k))) continue;
      WittElem q = W.neg(W.div_pow_p(A.at(i, k), best));
      row_addmul(A, i, k, q);
      row_addmul(out.Uinv, i, k, q);
      // U <- U * L^{-1}: column op adding -q * col_i to col_k... inverse of
      // (row_i += q row_k) is (row_i -= q row_k); on U acting right we add
      // +(-q)^{-1}... the inverse elementary matrix adds -q at (i,k), so U
      // gains column update col_k += (-(-q)) * nothing — spelled out:
      // A <- E A with E = I + q e_{i,k}; U <- U E^{-1} = U (I - q e_{i,k}),
      // i.e. col_k of U -= q * col_i... with the q already negated above:
      for (size_t t = 0; t < r; ++t)
        out.U.at(t, k) = W.sub(out.U.at(t, k), W.mul(q, out.U.at(t, i)));
    }
    for (size_t j = 0; j < c; ++j) {
      if (j == k || W.is_zero(A.at(k, j))) continue;
      WittElem q = W.neg(W.div_pow_p(A.at(k, j), best));
      col_addmul(A, j, k, q);
      col_addmul(out.Vinv, j, k, q);
      for (size_t t = 0; t < c; ++t)
        out.V.at(k, t) = W.sub(out.V.at(k, t), W.mul(q, out.V.at(j, t)));
    }
    out.exponents[k] = best;
  }
  return out;
}

inline std::vector<uint32_t> smith_decompose(const WittContext& W, const WMat& A) {
  return snf(W, A).exponents;
}

inline bool wmat_is_invertible(const WittContext& W, const WMat& A) {
  if (A.rows != A.cols) return false;
  auto ex = smith_decompose(W, A);
  for (auto c : ex)
    if (c != 0) return false;
  return true;
}

inline WMat wmat_inverse(const WittContext& W, const WMat& A) {
  auto s = snf(W, A);
  for (auto c : s.exponents)
    if (c != 0) throw PreconditionError("wmat_inverse: not invertible");
  // A = U V (diag = I), so A^{-1} = V^{-1} U^{-1}
  return wmat_mul(W, s.Vinv, s.Uinv);
}

// ---------------------------------------------------------------------------
// sigma^s-semilinear maps between canonical modules: x -> mat * sigma^s(x).
// Entry (i,j) is canonical mod p^{d_i} and must satisfy val >= d_i - e_j.

struct SemilinearMap {
  WnModule domain, codomain;
  int64_t twist = 0;
  WMat mat;

  const WittContext& W() const { return *domain.ctx; }
};

inline SemilinearMap make_map(WnModule domain, WnModule codomain, int64_t twist,
                              WMat mat) {
  if (!domain.ctx->same(*codomain.ctx)) throw ContextError("make_map: context mismatch");
  const auto& W = *domain.ctx;
  if (mat.rows != codomain.rank() || mat.cols != domain.rank())
    throw PreconditionError("make_map: matrix shape mismatch");
  for (size_t i = 0; i < mat.rows; ++i)
    for (size_t j = 0; j < mat.cols; ++j) {
      mat.at(i, j) = W.reduce_mod_pe(mat.at(i, j), codomain.divisors[i]);
      uint32_t need = codomain.divisors[i] > domain.divisors[j]
                          ? codomain.divisors[i] - domain.divisors[j]
                          : 0;
      if (W.val(mat.at(i, j)) < need)
        throw PreconditionError("make_map: entry violates codomain annihilator");
    }
  return SemilinearMap{std::move(domain), std::move(codomain), twist, std::move(mat)};
}

inline SemilinearMap identity_map(const WnModule& m) {
  return make_map(m, m, 0, wmat_identity(*m.ctx, m.rank()));
}

inline SemilinearMap zero_map(const WnModule& domain, const WnModule& codomain) {
  return make_map(domain, codomain, 0,
                  wmat_zero(*domain.ctx, codomain.rank(), domain.rank()));
}

inline SemilinearMap scalar_map(const WnModule& m, const WittElem& s) {
  const auto& W = *m.ctx;
  WMat mat = wmat_zero(W, m.rank(), m.rank());
  for (size_t i = 0; i < m.rank(); ++i) mat.at(i, i) = s;
  return make_map(m, m, 0, std::move(mat));
}

inline SemilinearMap p_map(const WnModule& m) {
  return scalar_map(m, m.ctx->from_int(int64_t(m.ctx->p())));
}

inline WVec map_apply(const SemilinearMap& f, const WVec& x) {
  const auto& W = f.W();
  WVec y(f.codomain.rank(), W.zero());
  for (size_t i = 0; i < f.mat.rows; ++i)
    for (size_t j = 0; j < f.mat.cols; ++j)
      y[i] = W.add(y[i], W.mul(f.mat.at(i, j), W.frobenius_pow(x[j], f.twist)));
  return module_normalize(f.codomain, std::move(y));
}

// compose(a, b) = a after b; matrix a.mat * sigma^{a.twist}(b.mat).
inline SemilinearMap compose(const SemilinearMap& a, const SemilinearMap& b) {
  if (a.domain != b.codomain) throw PreconditionError("compose: modules mismatch");
  const auto& W = a.W();
  return make_map(b.domain, a.codomain, a.twist + b.twist,
                  wmat_mul(W, a.mat, wmat_sigma_pow(W, b.mat, a.twist)));
}

inline bool map_eq(const SemilinearMap& a, const SemilinearMap& b) {
  return a.domain == b.domain && a.codomain == b.codomain && a.twist == b.twist &&
         a.mat == b.mat;  // normalized in make_map
}

inline SemilinearMap map_add(const SemilinearMap& a, const SemilinearMap& b) {
  if (a.twist != b.twist) throw PreconditionError("map_add: twist mismatch");
  return make_map(a.domain, a.codomain, a.twist, wmat_add(a.W(), a.mat, b.mat));
}

inline SemilinearMap map_direct_sum(const SemilinearMap& a, const SemilinearMap& b) {
  if (a.twist != b.twist) throw PreconditionError("map_direct_sum: twist mismatch");
  const auto& W = a.W();
  WnModule dom = direct_sum(a.domain, b.domain);
  WnModule cod = direct_sum(a.codomain, b.codomain);
  // direct_sum sorts divisors; build with block layout then permute
  // to canonical order on both sides.
  std::vector<size_t> dperm(dom.rank()), cperm(cod.rank());
  {
    // stable sort of concatenated divisor lists, remembering positions
    std::vector<uint32_t> dcat = a.domain.divisors;
    dcat.insert(dcat.end(), b.domain.divisors.begin(), b.domain.divisors.end());
    std::vector<uint32_t> ccat = a.codomain.divisors;
    ccat.insert(ccat.end(), b.codomain.divisors.begin(), b.codomain.divisors.end());
    std::iota(dperm.begin(), dperm.end(), 0);
    std::iota(cperm.begin(), cperm.end(), 0);
    std::stable_sort(dperm.begin(), dperm.end(),
                     [&](size_t x, size_t y) { return dcat[x] > dcat[y]; });
    std::stable_sort(cperm.begin(), cperm.end(),
                     [&](size_t x, size_t y) { return ccat[x] > ccat[y]; });
  }
  WMat mat = wmat_zero(W, cod.rank(), dom.rank());
  auto blockat = [&](size_t i, size_t j) -> const WittElem& {
    size_t ar = a.codomain.rank(), ac = a.domain.rank();
    static WittElem dummy;
    if (i < ar && j < ac) return a.mat.at(i, j);
    if (i >= ar && j >= ac) return b.mat.at(i - ar, j - ac);
    dummy = W.zero();
    return dummy;
  };
  for (size_t i = 0; i < cod.rank(); ++i)
    for (size_t j = 0; j < dom.rank(); ++j) mat.at(i, j) = blockat(cperm[i], dperm[j]);
  return make_map(dom, cod, a.twist, std::move(mat));
}

// ---------------------------------------------------------------------------
// Kernel / image / cokernel of semilinear maps, through free presentations.

// Generators of the kernel of the *linear* map W_n^m -> prod W_{d_i} given by
// the rows of `mat` (so: solutions y of mat*y == 0 mod codomain divisors).
inline std::vector<WVec> free_kernel_generators(const WittContext& W, const WMat& mat,
                                                const std::vector<uint32_t>& cod_div) {
  size_t s = mat.rows, m = mat.cols;
  WMat big = wmat_zero(W, s, m + s);
  for (size_t i = 0; i < s; ++i) {
    for (size_t j = 0; j < m; ++j) big.at(i, j) = mat.at(i, j);
    big.at(i, m + i) = W.mul_pow_p(W.one(), cod_div[i]);
  }
  auto S = snf(W, big);
  std::vector<WVec> gens;
  for (size_t j = 0; j < m + s; ++j) {
    uint32_t cj = j < S.exponents.size() ? S.exponents[j] : W.n();
    if (cj == 0) continue;
    // generator p^{n-cj} * Vinv * e_j, restricted to the first m coordinates
    WVec g(m, W.zero());
    bool nonzero = false;
    for (size_t i = 0; i < m; ++i) {
      g[i] = W.mul_pow_p(S.Vinv.at(i, j), W.n() - cj);
      nonzero = nonzero || !W.is_zero(g[i]);
    }
    if (nonzero) gens.push_back(std::move(g));
  }
  return gens;
}

// Canonical form of the submodule of `ambient` generated by `gens`:
// the abstract module K, plus an embedding matrix E (columns = images of the
// canonical generators of K, column i annihilated by p^{K.divisors[i]}).
struct Submodule {
  WnModule module;
  WMat embedding;  // ambient.rank() x module.rank()
};

inline Submodule submodule_canonicalize(const WnModule& ambient,
                                        const std::vector<WVec>& gens) {
  const auto& W = *ambient.ctx;
  size_t t = gens.size();
  if (t == 0) return Submodule{zero_module(ambient.ctx), wmat_zero(W, ambient.rank(), 0)};
  // relation module: kernel of the map W^t -> ambient sending e_i to gens[i]
  WMat G = wmat_zero(W, ambient.rank(), t);
  for (size_t j = 0; j < t; ++j)
    for (size_t i = 0; i < ambient.rank(); ++i)
      G.at(i, j) = W.reduce_mod_pe(gens[j][i], ambient.divisors[i]);
  auto rels = free_kernel_generators(W, G, ambient.divisors);
  WMat Y = wmat_zero(W, t, rels.size());
  for (size_t j = 0; j < rels.size(); ++j)
    for (size_t i = 0; i < t; ++i) Y.at(i, j) = rels[j][i];
  auto S = snf(W, Y);
  // K = coker(Y) = sum over rows i of W_n / p^{c_i}; generator i maps to
  // G * (U e_i) in the ambient module.
  std::vector<std::pair<uint32_t, size_t>> keep;
  for (size_t i = 0; i < t; ++i) {
    uint32_t ci = i < S.exponents.size() ? S.exponents[i] : W.n();
    if (ci > 0) keep.emplace_back(ci, i);
  }
  std::stable_sort(keep.begin(), keep.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<uint32_t> div;
  WMat E = wmat_zero(W, ambient.rank(), keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    div.push_back(keep[k].first);
    size_t i = keep[k].second;
    for (size_t a = 0; a < ambient.rank(); ++a) {
      WittElem acc = W.zero();
      for (size_t b = 0; b < t; ++b)
        acc = W.add(acc, W.mul(G.at(a, b), S.U.at(b, i)));
      E.at(a, k) = W.reduce_mod_pe(acc, ambient.divisors[a]);
    }
  }
  return Submodule{WnModule{ambient.ctx, std::move(div)}, std::move(E)};
}

struct KernelResult {
  WnModule module;
  SemilinearMap embedding;  // module -> domain, twist 0
};

inline KernelResult kernel(const SemilinearMap& f) {
  const auto& W = f.W();
  // untwist: x in ker(f) iff sigma^twist(x) in ker of the linear matrix map
  auto gens = free_kernel_generators(W, f.mat, f.codomain.divisors);
  for (auto& g : gens)
    for (auto& x : g) x = W.frobenius_pow(x, -f.twist);
  auto sub = submodule_canonicalize(f.domain, gens);
  return KernelResult{sub.module, make_map(sub.module, f.domain, 0, sub.embedding)};
}

struct ImageResult {
  WnModule module;
  SemilinearMap embedding;  // module -> codomain, twist 0
};

inline ImageResult image(const SemilinearMap& f) {
  const auto& W = f.W();
  std::vector<WVec> cols;
  for (size_t j = 0; j < f.mat.cols; ++j) {
    WVec c(f.codomain.rank());
    for (size_t i = 0; i < f.codomain.rank(); ++i) c[i] = f.mat.at(i, j);
    cols.push_back(std::move(c));
  }
  auto sub = submodule_canonicalize(f.codomain, cols);
  return ImageResult{sub.module, make_map(sub.module, f.codomain, 0, sub.embedding)};
}

struct CokernelResult {
  WnModule module;
  SemilinearMap projection;  // codomain -> module, twist 0
  // Set-level lift (projection . section = id); not a module map, so kept raw.
  WMat section;
};

inline CokernelResult cokernel(const SemilinearMap& f) {
  const auto& W = f.W();
  size_t s = f.codomain.rank(), m = f.domain.rank();
  WMat big = wmat_zero(W, s, m + s);
  for (size_t i = 0; i < s; ++i) {
    for (size_t j = 0; j < m; ++j) big.at(i, j) = f.mat.at(i, j);
    big.at(i, m + i) = W.mul_pow_p(W.one(), f.codomain.divisors[i]);
  }
  auto S = snf(W, big);
  std::vector<std::pair<uint32_t, size_t>> keep;
  for (size_t i = 0; i < s; ++i) {
    uint32_t ci = i < S.exponents.size() ? S.exponents[i] : W.n();
    if (ci > 0) keep.emplace_back(ci, i);
  }
  std::stable_sort(keep.begin(), keep.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<uint32_t> div;
  for (auto& [ci, i] : keep) div.push_back(ci);
  WnModule C{f.codomain.ctx, div};
  WMat proj = wmat_zero(W, keep.size(), s);
  WMat sect = wmat_zero(W, s, keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    size_t i = keep[k].second;
    for (size_t j = 0; j < s; ++j) {
      proj.at(k, j) = W.reduce_mod_pe(S.Uinv.at(i, j), div[k]);
      sect.at(j, k) = W.reduce_mod_pe(S.U.at(j, i), f.codomain.divisors[j]);
    }
  }
  return CokernelResult{C, make_map(f.codomain, C, 0, std::move(proj)),
                        std::move(sect)};
}

// Solve f(x) = b; returns std::nullopt when no solution exists.
inline std::optional<WVec> solve(const SemilinearMap& f, const WVec& b) {
  const auto& W = f.W();
  size_t s = f.codomain.rank(), m = f.domain.rank();
  WMat big = wmat_zero(W, s, m + s);
  for (size_t i = 0; i < s; ++i) {
    for (size_t j = 0; j < m; ++j) big.at(i, j) = f.mat.at(i, j);
    big.at(i, m + i) = W.mul_pow_p(W.one(), f.codomain.divisors[i]);
  }
  auto S = snf(W, big);
  WVec w(s, W.zero());
  for (size_t i = 0; i < s; ++i)
    for (size_t j = 0; j < s; ++j)
      w[i] = W.add(w[i], W.mul(S.Uinv.at(i, j), b[j]));
  WVec z(m + s, W.zero());
  for (size_t i = 0; i < s; ++i) {
    uint32_t ci = i < S.exponents.size() ? S.exponents[i] : W.n();
    if (W.val(w[i]) < ci) return std::nullopt;
    if (ci < W.n()) z[i] = W.div_pow_p(w[i], ci);
  }
  WVec x(m, W.zero());
  for (size_t i = 0; i < m; ++i) {
    WittElem acc = W.zero();
    for (size_t j = 0; j < m + s; ++j)
      acc = W.add(acc, W.mul(S.Vinv.at(i, j), z[j]));
    x[i] = W.frobenius_pow(acc, -f.twist);
  }
  return module_normalize(f.domain, std::move(x));
}

// Solve f . X = g column by column (all twist bookkeeping on the caller).
inline std::optional<WMat> solve_matrix(const SemilinearMap& f, const WMat& g) {
  const auto& W = f.W();
  WMat X = wmat_zero(W, f.domain.rank(), g.cols);
  for (size_t j = 0; j < g.cols; ++j) {
    WVec b(g.rows);
    for (size_t i = 0; i < g.rows; ++i) b[i] = g.at(i, j);
    auto x = solve(f, b);
    if (!x) return std::nullopt;
    for (size_t i = 0; i < X.rows; ++i) X.at(i, j) = (*x)[i];
  }
  return X;
}

inline bool is_injective(const SemilinearMap& f) { return kernel(f).module.is_zero(); }
inline bool is_surjective(const SemilinearMap& f) { return cokernel(f).module.is_zero(); }
inline bool is_isomorphism(const SemilinearMap& f) {
  return f.domain.divisors == f.codomain.divisors && is_surjective(f);
}

// ---------------------------------------------------------------------------
// Howell normal form of a row module in the free ambient W_n^m. Canonical for
// the row span; enables membership and span-equality tests. Mixed-divisor
// ambient modules are handled by p^{n-e} scale-embedding (below).

inline WMat howell_form(const WittContext& W, const WMat& A) {
  std::vector<WVec> work;
  for (size_t i = 0; i < A.rows; ++i) {
    WVec r(A.cols);
    bool nz = false;
    for (size_t j = 0; j < A.cols; ++j) {
      r[j] = A.at(i, j);
      nz = nz || !W.is_zero(r[j]);
    }
    if (nz) work.push_back(std::move(r));
  }
  std::vector<WVec> H;
  std::vector<size_t> pivot_col;
  std::vector<uint32_t> pivot_val;
  for (size_t c = 0; c < A.cols; ++c) {
    // all rows in `work` vanish in columns < c
    uint32_t best = W.n();
    size_t bi = work.size();
    for (size_t i = 0; i < work.size(); ++i) {
      uint32_t v = W.val(work[i][c]);
      if (v < best) {
        best = v;
        bi = i;
      }
    }
    if (bi == work.size()) continue;
    WVec h = std::move(work[bi]);
    work.erase(work.begin() + bi);
    WittElem uinv = W.inv(W.unit_part(h[c]));
    for (auto& x : h) x = W.mul(uinv, x);
    for (auto& r : work) {
      if (W.is_zero(r[c])) continue;
      WittElem q = W.div_pow_p(r[c], best);
      for (size_t j = c; j < A.cols; ++j) r[j] = W.sub(r[j], W.mul(q, h[j]));
    }
    if (best > 0) {
      // annihilator shadow p^{n-best} * h continues in later columns
      WVec sh(A.cols, W.zero());
      bool nz = false;
      for (size_t j = c + 1; j < A.cols; ++j) {
        sh[j] = W.mul_pow_p(h[j], W.n() - best);
        nz = nz || !W.is_zero(sh[j]);
      }
      if (nz) work.push_back(std::move(sh));
    }
    H.push_back(std::move(h));
    pivot_col.push_back(c);
    pivot_val.push_back(best);
  }
  // reduce entries above each pivot mod p^{pivot val}
  for (size_t k = 0; k < H.size(); ++k) {
    for (size_t i = 0; i < k; ++i) {
      const size_t c = pivot_col[k];
      WittElem rep = W.reduce_mod_pe(H[i][c], pivot_val[k]);
      WittElem q = W.div_pow_p(W.sub(H[i][c], rep), pivot_val[k]);
      if (W.is_zero(q)) continue;
      for (size_t j = c; j < A.cols; ++j)
        H[i][j] = W.sub(H[i][j], W.mul(q, H[k][j]));
    }
  }
  WMat out = wmat_zero(W, H.size(), A.cols);
  for (size_t i = 0; i < H.size(); ++i)
    for (size_t j = 0; j < A.cols; ++j) out.at(i, j) = H[i][j];
  return out;
}

// Membership of a row vector in the row span of a Howell form.
inline bool howell_member(const WittContext& W, const WMat& H, WVec v) {
  size_t k = 0;
  for (size_t c = 0; c < H.cols && k < H.rows; ++c) {
    if (W.is_zero(H.at(k, c))) continue;
    uint32_t e = W.val(H.at(k, c));
    if (!W.is_zero(v[c])) {
      if (W.val(v[c]) < e) return false;
      WittElem q = W.div_pow_p(v[c], e);
      for (size_t j = c; j < H.cols; ++j) v[j] = W.sub(v[j], W.mul(q, H.at(k, j)));
    }
    ++k;
  }
  for (const auto& x : v)
    if (!W.is_zero(x)) return false;
  return true;
}

// Scale-embedding of module elements into the free ambient W_n^rank, for
// canonical submodule comparison: coordinate i is multiplied by p^{n - e_i}.
inline WVec scale_embed(const WnModule& m, const WVec& x) {
  WVec out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = m.ctx->mul_pow_p(x[i], m.ctx->n() - m.divisors[i]);
  return out;
}

inline WMat span_howell(const WnModule& ambient, const std::vector<WVec>& gens) {
  const auto& W = *ambient.ctx;
  WMat rowmat = wmat_zero(W, gens.size(), ambient.rank());
  for (size_t i = 0; i < gens.size(); ++i) {
    auto e = scale_embed(ambient, gens[i]);
    for (size_t j = 0; j < ambient.rank(); ++j) rowmat.at(i, j) = e[j];
  }
  return howell_form(W, rowmat);
}

inline std::vector<WVec> map_image_generators(const SemilinearMap& f) {
  std::vector<WVec> cols;
  for (size_t j = 0; j < f.mat.cols; ++j) {
    WVec c(f.codomain.rank());
    for (size_t i = 0; i < f.codomain.rank(); ++i) c[i] = f.mat.at(i, j);
    cols.push_back(std::move(c));
  }
  return cols;
}

// Equality of submodules of a common ambient module, given generators.
inline bool same_span(const WnModule& ambient, const std::vector<WVec>& a,
                      const std::vector<WVec>& b) {
  return span_howell(ambient, a) == span_howell(ambient, b);
}

inline bool span_contains(const WnModule& ambient, const std::vector<WVec>& gens,
                          const WVec& x) {
  return howell_member(*ambient.ctx, span_howell(ambient, gens),
                       scale_embed(ambient, x));
}

}  // namespace gaugeforge
