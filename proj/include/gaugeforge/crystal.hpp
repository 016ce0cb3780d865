#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gaugeforge/phi_gauge.hpp"

namespace gaugeforge {

// Lattice-with-Frobenius data at finite Witt precision N: the semilinear
// operator is phi = p^shift * (mat . sigma) on W_N^rank, injective over
// fractions (all elementary divisors certified < N). The shift carries the
// "virtual" part: phi need not preserve the lattice when shift < 0.
struct VirtualCrystal {
  WCtxPtr ctxN;
  size_t rank = 0;
  WMat mat;
  int64_t shift = 0;
};

inline VirtualCrystal make_crystal(WCtxPtr ctxN, WMat mat, int64_t shift = 0) {
  if (mat.rows != mat.cols) throw PreconditionError("crystal: matrix must be square");
  VirtualCrystal c{std::move(ctxN), mat.rows, std::move(mat), shift};
  auto ex = smith_decompose(*c.ctxN, c.mat);
  for (auto e : ex)
    if (e >= c.ctxN->n())
      throw PreconditionError(
          "crystal: phi is not injective at this precision (divisor valuation >= N)");
  return c;
}

// Strip the common p-power of the matrix into the shift, so that the minimal
// elementary divisor valuation of mat is 0.
inline VirtualCrystal normalize_crystal(VirtualCrystal c) {
  const auto& W = *c.ctxN;
  auto ex = smith_decompose(W, c.mat);
  uint32_t minv = W.n();
  for (auto e : ex) minv = std::min(minv, e);
  if (minv > 0 && !ex.empty()) {
    for (auto& x : c.mat.e) x = W.div_pow_p(x, minv);
    c.shift += minv;
  }
  return c;
}

// Minimal (a, b) with p^b M <= phi(M) <= p^a M: shift plus the extreme
// elementary divisor valuations of the matrix.
inline std::pair<int64_t, int64_t> hodge_interval(const VirtualCrystal& c) {
  const auto& W = *c.ctxN;
  if (c.rank == 0) return {c.shift, c.shift};
  auto ex = smith_decompose(W, c.mat);
  uint32_t lo = W.n(), hi = 0;
  for (auto e : ex) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (hi >= W.n())
    throw PreconditionError("hodge_interval: precision too low to certify valuations");
  return {c.shift + int64_t(lo), c.shift + int64_t(hi)};
}

// Full-precision data retained by the standard construction so that the
// crystal can be reconstructed exactly (the level-n gauge alone only
// determines phi mod p^{n + b - a}).
struct StandardModel {
  VirtualCrystal crystal;             // normalized input
  int64_t a = 0, b = 0;
  std::vector<WMat> bases;            // basis of M^r in W_N^rank, r = a..b
};

struct StandardConstructionResult {
  PhiGauge gauge;        // level-n phi-gauge, window = hodge interval
  StandardModel model;
};

namespace detail {

inline WittElem convert_precision(const WittContext& from, const WittContext& to,
                                  const WittElem& x) {
  WittElem y = to.zero();
  for (uint32_t i = 0; i < std::min(from.n(), to.n()); ++i) y.a[i] = x.a[i];
  return y;
}

inline WMat convert_matrix(const WittContext& from, const WittContext& to, const WMat& m) {
  WMat out = wmat_zero(to, m.rows, m.cols);
  for (size_t i = 0; i < m.e.size(); ++i) out.e[i] = convert_precision(from, to, m.e[i]);
  return out;
}

}  // namespace detail

// The standard construction: M^r = { m in M : phi(m) in p^r M }, f = p,
// v = inclusion, phi_r = p^{-r} phi. Output is the level-n phi-gauge on the
// hodge interval; requires N >= n + (b - a) + 1.
inline StandardConstructionResult standard_construction(const VirtualCrystal& cin,
                                                        uint32_t n) {
  VirtualCrystal c = normalize_crystal(cin);
  const auto& WN = *c.ctxN;
  auto [a, b] = hodge_interval(c);
  uint32_t spread = uint32_t(b - a);
  if (WN.n() < n + spread + 1)
    throw PreconditionError("standard_construction: insufficient precision (need N >= n + (b-a) + 1)");
  size_t m = c.rank;
  auto freeN = free_module(c.ctxN, m);

  std::vector<WMat> bases;
  for (int64_t r = a; r <= b; ++r) {
    uint32_t e = uint32_t(r - c.shift);  // condition exponent, 0 <= e <= spread
    if (e == 0) {
      bases.push_back(wmat_identity(WN, m));
      continue;
    }
    auto gens = free_kernel_generators(WN, c.mat, std::vector<uint32_t>(m, e));
    auto sub = submodule_canonicalize(freeN, gens);
    if (sub.module.rank() != m)
      throw PreconditionError("standard_construction: kernel rank defect (internal)");
    for (auto dv : sub.module.divisors)
      if (dv < n + 1)
        throw PreconditionError("standard_construction: precision loss (internal)");
    // generators live in sigma(x)-space; pull back through sigma
    WMat B = sub.embedding;
    for (auto& x : B.e) x = WN.frobenius_pow(x, -1);
    bases.push_back(std::move(B));
  }

  auto ctxn = WittContext::make(c.ctxN->field_ptr(), n);
  auto freen = free_module(ctxn, m);
  std::vector<WnModule> comp(size_t(spread) + 1, freen);
  std::vector<SemilinearMap> fmap, vmap;
  const auto& Wn = *ctxn;
  for (uint32_t i = 0; i < spread; ++i) {
    auto Bcur = make_map(freeN, freeN, 0, bases[i]);
    auto Bnext = make_map(freeN, freeN, 0, bases[i + 1]);
    // f: solve B_{r+1} X = p B_r ; v: solve B_r Y = B_{r+1}
    WMat pB = wmat_scale(WN, WN.from_int(int64_t(WN.p())), bases[i]);
    auto X = solve_matrix(Bnext, pB);
    auto Y = solve_matrix(Bcur, bases[i + 1]);
    if (!X || !Y) throw PreconditionError("standard_construction: basis solve failed (internal)");
    fmap.push_back(make_map(freen, freen, 0, detail::convert_matrix(WN, Wn, *X)));
    vmap.push_back(make_map(freen, freen, 0, detail::convert_matrix(WN, Wn, *Y)));
  }
  // phi: M^b -> M^a at level n; phi_b(x) = p^{shift-b} A sigma(x)
  WMat T = wmat_mul(WN, c.mat, wmat_sigma_pow(WN, bases[size_t(spread)], 1));
  for (auto& x : T.e) x = WN.div_pow_p(x, uint32_t(b - c.shift));
  auto Z = solve_matrix(make_map(freeN, freeN, 0, bases[0]), T);
  if (!Z) throw PreconditionError("standard_construction: phi solve failed (internal)");
  SemilinearMap phi = make_map(freen, freen, 1, detail::convert_matrix(WN, Wn, *Z));

  Gauge g = make_gauge(ctxn, a, b, std::move(comp), std::move(fmap), std::move(vmap));
  PhiGauge pg = make_phi_gauge(std::move(g), std::move(phi));
  return StandardConstructionResult{std::move(pg), StandardModel{c, a, b, std::move(bases)}};
}

struct ReconstructionResult {
  VirtualCrystal crystal;
  int64_t twist_applied;  // the gauge was twisted by this to normalize a = 0
};

// Inverse of the standard construction: L = M^0 (after twisting a to 0) and
// phi = varphi . f^b. With the full-precision model attached the crystal is
// recovered exactly (conjugated by the M^a basis); from level-n data alone
// the matrix is exact mod p^n and lifted canonically.
inline ReconstructionResult reconstruct_crystal(const PhiGauge& pg, WCtxPtr ctxN,
                                                const StandardModel* model = nullptr) {
  auto freeres = is_free_W_gauge(pg.gauge);
  if (!freeres.free) {
    std::string idx = freeres.failed_indices.empty()
                          ? std::string("components")
                          : std::to_string(freeres.failed_indices.front());
    throw PreconditionError("reconstruct_crystal: underlying gauge not free (criterion fails at index " + idx + ")");
  }
  int64_t a = pg.gauge.a, b = pg.gauge.b;
  const auto& WN = *ctxN;
  if (model) {
    const auto& B0 = model->bases.front();
    // exact: R = B_a^{-1} A sigma(B_a), shift = a
    WMat rhs = wmat_mul(WN, model->crystal.mat, wmat_sigma_pow(WN, B0, 1));
    auto R = solve_matrix(make_map(free_module(ctxN, B0.rows), free_module(ctxN, B0.rows), 0, B0), rhs);
    if (!R) throw PreconditionError("reconstruct_crystal: model solve failed (internal)");
    return ReconstructionResult{make_crystal(ctxN, std::move(*R), model->crystal.shift), a};
  }
  // level-n route: phi . f^{b-a} on M^a, lifted to precision N
  auto comp = compose(pg.phi, pg.gauge.f_power(a, b - a));
  const auto& Wn = *pg.gauge.ctx;
  WMat lifted = detail::convert_matrix(Wn, WN, comp.mat);
  return ReconstructionResult{make_crystal(ctxN, std::move(lifted), a), a};
}

// Semilinear conjugacy of crystals: X phi_1 = phi_2 X with X invertible over
// W_N. Certificates come from the exact solution module of the flattened
// linear system; exhaustive search when the module is small.
struct CrystalIsoResult {
  IsoStatus status = IsoStatus::Undecided;
  WMat certificate;
};

inline CrystalIsoResult crystal_isomorphic(const VirtualCrystal& c1in,
                                           const VirtualCrystal& c2in, uint64_t seed = 1,
                                           uint64_t random_trials = 20000,
                                           uint64_t exhaustive_limit = 1u << 20) {
  VirtualCrystal c1 = normalize_crystal(c1in), c2 = normalize_crystal(c2in);
  if (!c1.ctxN->same(*c2.ctxN) || c1.rank != c2.rank) return {IsoStatus::NotIsomorphic, {}};
  if (c1.shift != c2.shift) return {IsoStatus::NotIsomorphic, {}};
  if (smith_decompose(*c1.ctxN, c1.mat) != smith_decompose(*c2.ctxN, c2.mat))
    return {IsoStatus::NotIsomorphic, {}};
  const auto& W = *c1.ctxN;
  size_t m = c1.rank;
  if (m == 0) return {IsoStatus::Isomorphic, WMat{0, 0, {}}};

  std::vector<std::pair<size_t, size_t>> shapes{{m, m}};
  SemilinearEquation eq;
  eq.rows = m;
  eq.cols = m;
  eq.row_moduli.assign(m, W.n());
  eq.terms.push_back({0, wmat_identity(W, m), c1.mat, 0});
  WMat neg = wmat_scale(W, W.neg(W.one()), c2.mat);
  eq.terms.push_back({0, std::move(neg), wmat_identity(W, m), 1});
  auto sols = solve_semilinear_system(c1.ctxN, shapes, {eq});

  auto try_candidate = [&](const std::vector<WittElem>& coeff) -> std::optional<WMat> {
    auto mats = semilinear_solution_at(sols, coeff);
    if (wmat_is_invertible(W, mats[0])) return mats[0];
    return std::nullopt;
  };
  if (sols.sol_module.rank() == 0) return {IsoStatus::NotIsomorphic, {}};
  if (sols.count() <= exhaustive_limit) {
    for (uint64_t idx = 0; idx < sols.count(); ++idx) {
      auto coeff = module_from_index(sols.sol_module, idx);
      if (auto X = try_candidate(coeff)) return {IsoStatus::Isomorphic, *X};
    }
    return {IsoStatus::NotIsomorphic, {}};
  }
  std::mt19937_64 rng(seed);
  const auto& Z = *sols.sol_module.ctx;
  for (uint64_t t = 0; t < random_trials; ++t) {
    std::vector<WittElem> coeff(sols.sol_module.rank());
    for (auto& cc : coeff) cc = Z.from_index(rng() % Z.card());
    if (auto X = try_candidate(module_normalize(sols.sol_module, coeff)))
      return {IsoStatus::Isomorphic, *X};
  }
  return {IsoStatus::Undecided, {}};
}

}  // namespace gaugeforge
