#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gaugeforge/phi_gauge.hpp"

namespace gaugeforge {

// F-zip over a perfect field k = F_{p^d} (n = 1 machinery): a k^dim carrier
// with a descending filtration C (on the Frobenius twist), an ascending
// filtration D, and semilinear graded comparison isomorphisms.
//
// Filtrations are stored as Howell (= reduced row echelon) bases; the graded
// map phi_i is recorded by a pair of representative matrices: column t of
// c_reps spans gr^i C mod C^{i+1} and maps to column t of d_reps mod D_{i-1},
// extended sigma-semilinearly.
struct FZip {
  WCtxPtr ctx;   // n = 1
  size_t dim = 0;
  int64_t lo = 0, hi = -1;    // jumps confined to [lo, hi]
  std::vector<WMat> C;        // C[t] = basis of C^{lo+t}, t = 0..hi-lo+1 (last = 0)
  std::vector<WMat> D;        // D[t] = basis of D_{lo-1+t}, t = 0..hi-lo+1 (first = 0)
  struct Graded {
    WMat c_reps, d_reps;      // dim x g_i, columns are carrier vectors
  };
  std::vector<Graded> phis;   // one per i in [lo, hi]
};

struct FZipViolation {
  int64_t index;
  std::string what;
};

struct FZipValidation {
  bool ok = true;
  std::vector<FZipViolation> violations;
  std::vector<std::pair<int64_t, size_t>> graded_dims;
};

namespace detail {

inline size_t span_dim(const WMat& howell) { return howell.rows; }

inline bool span_subset(const WittContext& W, const WMat& inner, const WMat& outer) {
  for (size_t i = 0; i < inner.rows; ++i) {
    WVec v(inner.cols);
    for (size_t j = 0; j < inner.cols; ++j) v[j] = inner.at(i, j);
    if (!howell_member(W, outer, v)) return false;
  }
  return true;
}

// columns of `reps` independent modulo span(mod_rows) and inside span(in_rows)
inline bool reps_fit(const WittContext& W, const WMat& reps, const WMat& in_rows,
                     const WMat& mod_rows) {
  size_t m = reps.rows, g = reps.cols;
  for (size_t j = 0; j < g; ++j) {
    WVec v(m);
    for (size_t i = 0; i < m; ++i) v[i] = reps.at(i, j);
    if (!howell_member(W, in_rows, v)) return false;
  }
  // independence mod `mod_rows`: dim(span(mod) + span(reps^T)) = dim(mod) + g
  WMat joint = wmat_zero(W, mod_rows.rows + g, m);
  for (size_t i = 0; i < mod_rows.rows; ++i)
    for (size_t j = 0; j < m; ++j) joint.at(i, j) = mod_rows.at(i, j);
  for (size_t t = 0; t < g; ++t)
    for (size_t j = 0; j < m; ++j) joint.at(mod_rows.rows + t, j) = reps.at(j, t);
  return span_dim(howell_form(W, joint)) == span_dim(mod_rows) + g;
}

}  // namespace detail

inline FZipValidation validate_fzip(const FZip& z) {
  FZipValidation rep;
  const auto& W = *z.ctx;
  auto fail = [&](int64_t i, const std::string& w) {
    rep.ok = false;
    rep.violations.push_back({i, w});
  };
  size_t steps = size_t(z.hi - z.lo + 1);
  if (z.C.size() != steps + 1 || z.D.size() != steps + 1 || z.phis.size() != steps) {
    fail(z.lo, "filtration arrays inconsistent with index range");
    return rep;
  }
  if (detail::span_dim(z.C.front()) != z.dim) fail(z.lo, "C not exhaustive at lo");
  if (detail::span_dim(z.C.back()) != 0) fail(z.hi + 1, "C not zero above hi");
  if (detail::span_dim(z.D.front()) != 0) fail(z.lo - 1, "D not zero below lo");
  if (detail::span_dim(z.D.back()) != z.dim) fail(z.hi, "D not exhaustive at hi");
  for (size_t t = 0; t + 1 <= steps; ++t) {
    if (!detail::span_subset(W, z.C[t + 1], z.C[t]))
      fail(z.lo + int64_t(t), "C filtration not descending");
    if (!detail::span_subset(W, z.D[t], z.D[t + 1]))
      fail(z.lo - 1 + int64_t(t), "D filtration not ascending");
  }
  for (size_t t = 0; t < steps; ++t) {
    int64_t i = z.lo + int64_t(t);
    size_t gc = detail::span_dim(z.C[t]) - detail::span_dim(z.C[t + 1]);
    size_t gd = detail::span_dim(z.D[t + 1]) - detail::span_dim(z.D[t]);
    rep.graded_dims.emplace_back(i, gc);
    if (gc != gd) {
      fail(i, "graded dimensions differ: dim gr^i C != dim gr_i D");
      continue;
    }
    const auto& ph = z.phis[t];
    if (ph.c_reps.cols != gc || ph.d_reps.cols != gc) {
      fail(i, "phi_i representative count != graded dimension");
      continue;
    }
    if (!detail::reps_fit(W, ph.c_reps, z.C[t], z.C[t + 1]))
      fail(i, "phi_i domain representatives do not span gr^i C");
    if (!detail::reps_fit(W, ph.d_reps, z.D[t + 1], z.D[t]))
      fail(i, "phi_i images not independent in gr_i D (not bijective)");
  }
  return rep;
}

// One-step filtration F-zip of weight w with phi_w = sigma: the Tate object.
inline FZip tate_fzip(WCtxPtr ctx, size_t dim, int64_t w) {
  const auto& W = *ctx;
  FZip z;
  z.ctx = ctx;
  z.dim = dim;
  z.lo = z.hi = w;
  WMat full = howell_form(W, wmat_identity(W, dim));
  WMat zero = wmat_zero(W, 0, dim);
  z.C = {full, zero};
  z.D = {zero, full};
  FZip::Graded g{wmat_identity(W, dim), wmat_identity(W, dim)};
  z.phis = {g};
  return z;
}

// Extraction of the F-zip of a rigid phi-gauge over k (n = 1):
// D_r = im(phi_r : M^r -> M^{-inf}), C^r = im(v^{r-a} : M^r -> M^{-inf}),
// graded maps induced as in the Cartier-isomorphism argument.
inline FZip gauge_to_fzip(const PhiGauge& pg) {
  const Gauge& g = pg.gauge;
  detail::require_torsion(g, "gauge_to_fzip");
  if (!phi_bijective(pg)) throw PreconditionError("gauge_to_fzip: phi must be bijective");
  if (!is_rigid(g)) throw PreconditionError("gauge_to_fzip: gauge must be rigid");
  const auto& W = *g.ctx;
  int64_t a = g.a, b = g.b;
  const WnModule& carrier = g.component(a);
  size_t m = carrier.rank();

  FZip z;
  z.ctx = g.ctx;
  z.dim = m;
  z.lo = a;
  z.hi = b;
  auto phi_r = [&](int64_t r) {  // M^r -> M^a, x -> phi(f^{b-r} x)
    return compose(pg.phi, g.f_power(r, b - r));
  };
  auto v_r = [&](int64_t r) { return g.v_power(r, r - a); };

  for (int64_t r = a; r <= b + 1; ++r) {
    z.C.push_back(span_howell(carrier, map_image_generators(v_r(r))));
    z.D.push_back(span_howell(carrier, map_image_generators(phi_r(r - 1))));
  }

  for (int64_t r = a; r <= b; ++r) {
    size_t t = size_t(r - a);
    size_t gdim = detail::span_dim(z.C[t]) - detail::span_dim(z.C[t + 1]);
    FZip::Graded gr{wmat_zero(W, m, gdim), wmat_zero(W, m, gdim)};
    // choose rows of C^r independent mod C^{r+1}, then lift through v^{r-a}
    auto vr = v_r(r);
    auto pr = phi_r(r);
    size_t got = 0;
    WMat acc = z.C[t + 1];
    for (size_t i = 0; i < z.C[t].rows && got < gdim; ++i) {
      WVec x(m);
      for (size_t j = 0; j < m; ++j) x[j] = z.C[t].at(i, j);
      if (howell_member(W, acc, x)) continue;
      // x = v^{r-a}(y); phi-image representative is phi_r(y)
      auto y = solve(vr, x);
      if (!y) throw PreconditionError("gauge_to_fzip: filtration lift failed (internal)");
      WVec img = map_apply(pr, *y);
      for (size_t j = 0; j < m; ++j) {
        gr.c_reps.at(j, got) = x[j];
        gr.d_reps.at(j, got) = img[j];
      }
      ++got;
      // extend acc by x
      WMat ext = wmat_zero(W, acc.rows + 1, m);
      for (size_t r2 = 0; r2 < acc.rows; ++r2)
        for (size_t j = 0; j < m; ++j) ext.at(r2, j) = acc.at(r2, j);
      for (size_t j = 0; j < m; ++j) ext.at(acc.rows, j) = x[j];
      acc = howell_form(W, ext);
    }
    if (got != gdim)
      throw PreconditionError("gauge_to_fzip: graded basis extraction failed (internal)");
    z.phis.push_back(std::move(gr));
  }
  return z;
}

// ---------------------------------------------------------------------------
// Effective generalized F-zips: N-indexed filtrations on a truncated carrier,
// F^0 = everything and F_{-1} = 0, with semilinear graded comparisons. The
// boundary conditions "intersection zero / union everything" are asserted
// within the truncation window [0, rmax].
struct GeneralizedFZip {
  WCtxPtr ctx;   // n = 1
  size_t dim = 0;
  int64_t rmax = 0;           // filtrations constant beyond rmax within truncation
  std::vector<WMat> F_upper;  // F^r, r = 0..rmax+1 (descending, F^{rmax+1} = 0)
  std::vector<WMat> F_lower;  // F_r, r = -1..rmax (ascending, F_{-1} = 0)
  std::vector<FZip::Graded> phis;  // r = 0..rmax
};

inline FZipValidation validate_generalized_fzip(const GeneralizedFZip& z) {
  FZip plain;
  plain.ctx = z.ctx;
  plain.dim = z.dim;
  plain.lo = 0;
  plain.hi = z.rmax;
  plain.C = z.F_upper;
  plain.D = z.F_lower;
  plain.phis = z.phis;
  return validate_fzip(plain);
}

}  // namespace gaugeforge
