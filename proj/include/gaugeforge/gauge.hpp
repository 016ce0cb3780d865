#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gaugeforge/linalg.hpp"

namespace gaugeforge {

// A finite-type gauge: graded module over D_n = W_n[f,v]/(fv - p), stored on
// its concentration window [a, b]. Outside the window the representation is
// by convention: v is an isomorphism (identity in coordinates) left of a and
// f is an isomorphism (identity) right of b, which forces f = p left of a
// and v = p right of b.
struct Gauge {
  WCtxPtr ctx;
  int64_t a = 0, b = 0;
  std::vector<WnModule> comp;        // components M^a .. M^b
  std::vector<SemilinearMap> fmap;   // fmap[i] : M^{a+i} -> M^{a+i+1}, twist 0
  std::vector<SemilinearMap> vmap;   // vmap[i] : M^{a+i+1} -> M^{a+i}, twist 0

  int64_t width() const { return b - a; }

  const WnModule& component(int64_t r) const {
    if (r < a) return comp.front();
    if (r > b) return comp.back();
    return comp[size_t(r - a)];
  }

  SemilinearMap f_at(int64_t r) const {  // f : M^r -> M^{r+1}
    if (r >= b) return identity_map(comp.back());
    if (r < a) return p_map(comp.front());
    return fmap[size_t(r - a)];
  }

  SemilinearMap v_at(int64_t r) const {  // v : M^{r+1} -> M^r
    if (r + 1 <= a) return identity_map(comp.front());
    if (r >= b) return p_map(comp.back());
    return vmap[size_t(r - a)];
  }

  // Composite f^m : M^r -> M^{r+m} (m >= 0).
  SemilinearMap f_power(int64_t r, int64_t m) const {
    SemilinearMap acc = identity_map(component(r));
    for (int64_t i = 0; i < m; ++i) acc = compose(f_at(r + i), acc);
    return acc;
  }

  // Composite v^m : M^r -> M^{r-m} (m >= 0).
  SemilinearMap v_power(int64_t r, int64_t m) const {
    SemilinearMap acc = identity_map(component(r));
    for (int64_t i = 0; i < m; ++i) acc = compose(v_at(r - i - 1), acc);
    return acc;
  }
};

inline Gauge make_gauge(WCtxPtr ctx, int64_t a, int64_t b,
                        std::vector<WnModule> comp, std::vector<SemilinearMap> fmap,
                        std::vector<SemilinearMap> vmap) {
  if (b < a) throw PreconditionError("make_gauge: window must satisfy a <= b");
  if (comp.size() != size_t(b - a + 1) || fmap.size() != size_t(b - a) ||
      vmap.size() != size_t(b - a))
    throw PreconditionError("make_gauge: component/map counts don't match window");
  for (size_t i = 0; i + 1 < comp.size(); ++i) {
    if (fmap[i].domain != comp[i] || fmap[i].codomain != comp[i + 1])
      throw PreconditionError("make_gauge: f map endpoints mismatch");
    if (vmap[i].domain != comp[i + 1] || vmap[i].codomain != comp[i])
      throw PreconditionError("make_gauge: v map endpoints mismatch");
    if (fmap[i].twist != 0 || vmap[i].twist != 0)
      throw PreconditionError("make_gauge: f, v must be linear");
  }
  for (const auto& m : comp)
    if (!m.ctx->same(*ctx)) throw ContextError("make_gauge: context mismatch");
  return Gauge{std::move(ctx), a, b, std::move(comp), std::move(fmap), std::move(vmap)};
}

inline Gauge zero_gauge(WCtxPtr ctx) {
  WnModule z = zero_module(ctx);
  return Gauge{std::move(ctx), 0, 0, {z}, {}, {}};
}

inline bool is_zero_gauge(const Gauge& g) {
  for (const auto& m : g.comp)
    if (!m.is_zero()) return false;
  return true;
}

// Free gauge W_n(i)^m, concentrated at [-i, -i].
inline Gauge free_gauge(WCtxPtr ctx, int64_t i, size_t mult) {
  WnModule m = free_module(ctx, mult);
  return Gauge{std::move(ctx), -i, -i, {m}, {}, {}};
}

struct GaugeViolation {
  int64_t index;
  std::string what;
};

struct GaugeValidation {
  bool ok = true;
  std::vector<GaugeViolation> violations;
};

// Checks fv = vf = p at every index of the stored window.
inline GaugeValidation validate_gauge(const Gauge& g) {
  GaugeValidation rep;
  for (int64_t r = g.a; r < g.b; ++r) {
    auto fv = compose(g.f_at(r), g.v_at(r));       // on M^{r+1}
    auto vf = compose(g.v_at(r), g.f_at(r));       // on M^r
    if (!map_eq(fv, p_map(g.component(r + 1)))) {
      rep.ok = false;
      rep.violations.push_back({r, "f.v != p at index " + std::to_string(r + 1)});
    }
    if (!map_eq(vf, p_map(g.component(r)))) {
      rep.ok = false;
      rep.violations.push_back({r, "v.f != p at index " + std::to_string(r)});
    }
  }
  return rep;
}

inline Gauge tate_twist(const Gauge& g, int64_t i) {
  Gauge t = g;
  t.a = g.a - i;
  t.b = g.b - i;
  return t;
}

// Rebuild g on the wider window [lo, hi] (lo <= a, b <= hi), materializing
// the boundary conventions.
inline Gauge align_gauge(const Gauge& g, int64_t lo, int64_t hi) {
  if (lo > g.a || hi < g.b) throw PreconditionError("align_gauge: window must widen");
  std::vector<WnModule> comp;
  std::vector<SemilinearMap> fmap, vmap;
  for (int64_t r = lo; r <= hi; ++r) comp.push_back(g.component(r));
  for (int64_t r = lo; r < hi; ++r) {
    fmap.push_back(g.f_at(r));
    vmap.push_back(g.v_at(r));
  }
  return make_gauge(g.ctx, lo, hi, std::move(comp), std::move(fmap), std::move(vmap));
}

// Minimal stored window: drop boundary components identified by isomorphisms.
// Only meaningful for valid gauges.
inline Gauge trim(Gauge g) {
  while (g.b > g.a && is_isomorphism(g.fmap.back())) {
    g.comp.pop_back();
    g.fmap.pop_back();
    g.vmap.pop_back();
    --g.b;
  }
  while (g.b > g.a && is_isomorphism(g.vmap.front())) {
    g.comp.erase(g.comp.begin());
    g.fmap.erase(g.fmap.begin());
    g.vmap.erase(g.vmap.begin());
    ++g.a;
  }
  if (g.width() == 0 && g.comp[0].is_zero() && g.a != 0) {
    g.a = g.b = 0;
  }
  return g;
}

inline std::pair<int64_t, int64_t> concentration_interval(const Gauge& g) {
  Gauge t = trim(g);
  return {t.a, t.b};
}

// v iso in degrees <= 0 / f iso in degrees >= 0 (paper section 2.4).
inline bool is_effective(const Gauge& g) { return concentration_interval(g).first >= 0; }
inline bool is_coeffective(const Gauge& g) { return concentration_interval(g).second <= 0; }

inline Gauge direct_sum_gauge(const Gauge& x, const Gauge& y) {
  if (!x.ctx->same(*y.ctx)) throw ContextError("direct_sum_gauge: context mismatch");
  int64_t lo = std::min(x.a, y.a), hi = std::max(x.b, y.b);
  Gauge gx = align_gauge(x, lo, hi), gy = align_gauge(y, lo, hi);
  std::vector<WnModule> comp;
  std::vector<SemilinearMap> fmap, vmap;
  for (size_t i = 0; i < gx.comp.size(); ++i) comp.push_back(direct_sum(gx.comp[i], gy.comp[i]));
  for (size_t i = 0; i + 1 < gx.comp.size(); ++i) {
    fmap.push_back(map_direct_sum(gx.fmap[i], gy.fmap[i]));
    vmap.push_back(map_direct_sum(gx.vmap[i], gy.vmap[i]));
  }
  return make_gauge(x.ctx, lo, hi, std::move(comp), std::move(fmap), std::move(vmap));
}

// Componentwise reduction mod p: the k-gauge M/pM.
inline Gauge gauge_mod_p(const Gauge& g) {
  WCtxPtr k1 = WittContext::make(g.ctx->field_ptr(), 1);
  auto reduce_mod = [&](const WnModule& m) {
    return WnModule{k1, std::vector<uint32_t>(m.rank(), 1)};
  };
  auto reduce_map = [&](const SemilinearMap& f) {
    const auto& W1 = *k1;
    WMat m = wmat_zero(W1, f.mat.rows, f.mat.cols);
    for (size_t i = 0; i < f.mat.rows; ++i)
      for (size_t j = 0; j < f.mat.cols; ++j) {
        WittElem x = W1.zero();
        x.a[0] = f.mat.at(i, j).a[0];
        m.at(i, j) = x;
      }
    return make_map(reduce_mod(f.domain), reduce_mod(f.codomain), f.twist, std::move(m));
  };
  std::vector<WnModule> comp;
  std::vector<SemilinearMap> fmap, vmap;
  for (const auto& m : g.comp) comp.push_back(reduce_mod(m));
  for (const auto& f : g.fmap) fmap.push_back(reduce_map(f));
  for (const auto& v : g.vmap) vmap.push_back(reduce_map(v));
  return make_gauge(k1, g.a, g.b, std::move(comp), std::move(fmap), std::move(vmap));
}

// The coeffective truncation M_{<=0}: M^r for r < 0, M^0 repeated above,
// with f = id and v = p in nonnegative degrees. Right adjoint of the
// inclusion of coeffective gauges.
inline Gauge truncate_leq0(const Gauge& g) {
  int64_t lo = std::min<int64_t>(g.a, 0), hi = 0;
  std::vector<WnModule> comp;
  std::vector<SemilinearMap> fmap, vmap;
  for (int64_t r = lo; r <= hi; ++r) comp.push_back(g.component(r));
  for (int64_t r = lo; r < hi; ++r) {
    fmap.push_back(g.f_at(r));
    vmap.push_back(g.v_at(r));
  }
  return make_gauge(g.ctx, lo, hi, std::move(comp), std::move(fmap), std::move(vmap));
}

// ---------------------------------------------------------------------------
// Homogeneous generators and D_n-presentations.

struct HomogeneousElem {
  int64_t degree;
  WVec value;  // element of component(degree)
};

// Homogeneous elements whose classes form a basis of M/(p,f,v)M; they
// generate M by the graded Nakayama lemma.
inline std::vector<HomogeneousElem> minimal_generators(const Gauge& g) {
  std::vector<HomogeneousElem> out;
  const auto& W = *g.ctx;
  auto k1 = WittContext::make(g.ctx->field_ptr(), 1);
  const auto& F = W.field();
  for (int64_t r = g.a; r <= g.b; ++r) {
    const WnModule& M = g.component(r);
    if (M.is_zero()) continue;
    size_t rank = M.rank();
    // span of (f columns, v columns) mod p inside k^rank
    std::vector<std::vector<FqElem>> rows;
    auto push_cols = [&](const WMat& mat) {
      for (size_t j = 0; j < mat.cols; ++j) {
        std::vector<FqElem> row(rank);
        for (size_t i = 0; i < rank; ++i) row[i] = mat.at(i, j).a[0];
        rows.push_back(std::move(row));
      }
    };
    if (r > g.a) push_cols(g.f_at(r - 1).mat);
    if (r < g.b) push_cols(g.v_at(r).mat);
    // reduced row echelon over F_q; pivot columns are covered
    std::vector<bool> covered(rank, false);
    size_t lead = 0;
    for (size_t c = 0; c < rank && lead < rows.size(); ++c) {
      size_t piv = lead;
      while (piv < rows.size() && F.is_zero(rows[piv][c])) ++piv;
      if (piv == rows.size()) continue;
      std::swap(rows[lead], rows[piv]);
      FqElem inv = F.inv(rows[lead][c]);
      for (auto& x : rows[lead]) x = F.mul(inv, x);
      for (size_t i = 0; i < rows.size(); ++i) {
        if (i == lead || F.is_zero(rows[i][c])) continue;
        FqElem s = rows[i][c];
        for (size_t j = 0; j < rank; ++j)
          rows[i][j] = F.sub(rows[i][j], F.mul(s, rows[lead][j]));
      }
      covered[c] = true;
      ++lead;
    }
    for (size_t c = 0; c < rank; ++c) {
      if (covered[c]) continue;
      WVec e = module_zero(M);
      e[c] = W.one();
      out.push_back(HomogeneousElem{r, std::move(e)});
    }
  }
  return out;
}

// Presentation of a gauge as a graded D_n-module: generators with degrees,
// relations as homogeneous vectors. The coefficient of a relation of degree
// delta at generator k is the W_n-coefficient of the monomial f^{delta-d_k}
// (or v^{d_k-delta}).
struct GaugePresentation {
  WCtxPtr ctx;
  std::vector<int64_t> gen_deg;
  struct Rel {
    int64_t degree;
    WVec coeff;
  };
  std::vector<Rel> rels;
};

inline GaugePresentation present(const Gauge& g) {
  GaugePresentation pres;
  pres.ctx = g.ctx;
  auto gens = minimal_generators(g);
  for (const auto& h : gens) pres.gen_deg.push_back(h.degree);
  const auto& W = *g.ctx;
  for (int64_t r = g.a; r <= g.b; ++r) {
    const WnModule& M = g.component(r);
    // evaluation matrix: generator k transported to degree r
    WMat eval = wmat_zero(W, M.rank(), gens.size());
    for (size_t k = 0; k < gens.size(); ++k) {
      const auto& h = gens[k];
      WVec img;
      if (r >= h.degree)
        img = map_apply(g.f_power(h.degree, r - h.degree), h.value);
      else
        img = map_apply(g.v_power(h.degree, h.degree - r), h.value);
      for (size_t i = 0; i < M.rank(); ++i) eval.at(i, k) = img[i];
    }
    auto kergens = free_kernel_generators(W, eval, M.divisors);
    for (auto& y : kergens) pres.rels.push_back({r, std::move(y)});
  }
  return pres;
}

// Degree-r component and structural maps of the D_n-module defined by a
// presentation, computed exactly (the degree-r relations are all monomial
// shifts of the listed relations).
inline Gauge gauge_from_presentation(const GaugePresentation& pres, int64_t lo,
                                     int64_t hi) {
  const auto& W = *pres.ctx;
  size_t g = pres.gen_deg.size();
  std::vector<CokernelResult> comp_data;
  std::vector<WnModule> comp;
  for (int64_t r = lo; r <= hi; ++r) {
    WMat R = wmat_zero(W, g, pres.rels.size());
    for (size_t t = 0; t < pres.rels.size(); ++t) {
      int64_t delta = pres.rels[t].degree;
      for (size_t k = 0; k < g; ++k) {
        const WittElem& c = pres.rels[t].coeff[k];
        if (W.is_zero(c)) continue;
        int64_t s = delta - pres.gen_deg[k];  // monomial degree at generator k
        uint32_t extra = 0;
        if (r >= delta) {
          int64_t m = r - delta;
          if (s < 0) extra = uint32_t(std::min<int64_t>(m, -s));
        } else {
          int64_t m = delta - r;
          if (s > 0) extra = uint32_t(std::min<int64_t>(m, s));
        }
        R.at(k, t) = W.mul_pow_p(c, extra);
      }
    }
    auto ck = cokernel(make_map(free_module(pres.ctx, pres.rels.size()),
                                free_module(pres.ctx, g), 0, std::move(R)));
    comp.push_back(ck.module);
    comp_data.push_back(std::move(ck));
  }
  std::vector<SemilinearMap> fmap, vmap;
  for (int64_t r = lo; r < hi; ++r) {
    size_t i = size_t(r - lo);
    // free-cover diagonals for multiplication by f (degree r -> r+1) and by
    // v (degree r+1 -> r)
    WMat fcov = wmat_zero(W, g, g), vcov = wmat_zero(W, g, g);
    for (size_t k = 0; k < g; ++k) {
      fcov.at(k, k) = r >= pres.gen_deg[k] ? W.one() : W.from_int(int64_t(W.p()));
      vcov.at(k, k) = r + 1 > pres.gen_deg[k] ? W.from_int(int64_t(W.p())) : W.one();
    }
    WMat fm = wmat_mul(W, comp_data[i + 1].projection.mat,
                       wmat_mul(W, fcov, comp_data[i].section));
    WMat vm = wmat_mul(W, comp_data[i].projection.mat,
                       wmat_mul(W, vcov, comp_data[i + 1].section));
    fmap.push_back(make_map(comp[i], comp[i + 1], 0, std::move(fm)));
    vmap.push_back(make_map(comp[i + 1], comp[i], 0, std::move(vm)));
  }
  return make_gauge(pres.ctx, lo, hi, std::move(comp), std::move(fmap), std::move(vmap));
}

// Tensor product of gauges over D_n, by generators and relations.
inline Gauge tensor(const Gauge& x, const Gauge& y) {
  if (!x.ctx->same(*y.ctx)) throw ContextError("tensor: context mismatch");
  if (is_zero_gauge(x) || is_zero_gauge(y)) return zero_gauge(x.ctx);
  GaugePresentation px = present(x), py = present(y);
  const auto& W = *x.ctx;
  GaugePresentation pt;
  pt.ctx = x.ctx;
  size_t gx = px.gen_deg.size(), gy = py.gen_deg.size();
  for (size_t k = 0; k < gx; ++k)
    for (size_t l = 0; l < gy; ++l)
      pt.gen_deg.push_back(px.gen_deg[k] + py.gen_deg[l]);
  auto pair_index = [&](size_t k, size_t l) { return k * gy + l; };
  for (const auto& rho : px.rels)
    for (size_t l = 0; l < gy; ++l) {
      GaugePresentation::Rel rel;
      rel.degree = rho.degree + py.gen_deg[l];
      rel.coeff.assign(gx * gy, W.zero());
      for (size_t k = 0; k < gx; ++k) rel.coeff[pair_index(k, l)] = rho.coeff[k];
      pt.rels.push_back(std::move(rel));
    }
  for (const auto& rho : py.rels)
    for (size_t k = 0; k < gx; ++k) {
      GaugePresentation::Rel rel;
      rel.degree = rho.degree + px.gen_deg[k];
      rel.coeff.assign(gx * gy, W.zero());
      for (size_t l = 0; l < gy; ++l) rel.coeff[pair_index(k, l)] = rho.coeff[l];
      pt.rels.push_back(std::move(rel));
    }
  Gauge t = gauge_from_presentation(pt, x.a + y.a - 1, x.b + y.b + 1);
  return trim(std::move(t));
}

// ---------------------------------------------------------------------------
// Gauge morphisms.

struct GaugeMorphism {
  Gauge source, target;               // aligned to the common window below
  int64_t a = 0, b = 0;
  std::vector<SemilinearMap> maps;    // maps[i] : source comp -> target comp at a+i
};

inline GaugeMorphism make_gauge_morphism(const Gauge& src, const Gauge& tgt,
                                         std::vector<SemilinearMap> maps_on_union) {
  int64_t lo = std::min(src.a, tgt.a), hi = std::max(src.b, tgt.b);
  Gauge s = align_gauge(src, lo, hi), t = align_gauge(tgt, lo, hi);
  if (maps_on_union.size() != size_t(hi - lo + 1))
    throw PreconditionError("gauge morphism: map count mismatch");
  for (int64_t r = lo; r <= hi; ++r) {
    const auto& m = maps_on_union[size_t(r - lo)];
    if (m.domain != s.component(r) || m.codomain != t.component(r) || m.twist != 0)
      throw PreconditionError("gauge morphism: component map mismatch");
  }
  return GaugeMorphism{std::move(s), std::move(t), lo, hi, std::move(maps_on_union)};
}

// alpha f = f alpha and alpha v = v alpha at every index.
inline bool morphism_commutes(const GaugeMorphism& m) {
  for (int64_t r = m.a; r < m.b; ++r) {
    size_t i = size_t(r - m.a);
    if (!map_eq(compose(m.maps[i + 1], m.source.f_at(r)),
                compose(m.target.f_at(r), m.maps[i])))
      return false;
    if (!map_eq(compose(m.maps[i], m.source.v_at(r)),
                compose(m.target.v_at(r), m.maps[i + 1])))
      return false;
  }
  // boundary: conventions force commutation outside the window only if the
  // edge maps agree with the identity/p pattern, which alignment guarantees.
  return true;
}

inline GaugeMorphism morphism_direct_sum(const GaugeMorphism& x, const GaugeMorphism& y) {
  Gauge s = direct_sum_gauge(x.source, y.source);
  Gauge t = direct_sum_gauge(x.target, y.target);
  int64_t lo = s.a, hi = s.b;
  std::vector<SemilinearMap> maps;
  for (int64_t r = lo; r <= hi; ++r) {
    SemilinearMap mx = r >= x.a && r <= x.b ? x.maps[size_t(r - x.a)]
                       : r < x.a            ? x.maps.front()
                                            : x.maps.back();
    SemilinearMap my = r >= y.a && r <= y.b ? y.maps[size_t(r - y.a)]
                       : r < y.a            ? y.maps.front()
                                            : y.maps.back();
    maps.push_back(map_direct_sum(mx, my));
  }
  return make_gauge_morphism(s, t, std::move(maps));
}

// Componentwise kernel, with f, v restricted through the embeddings.
inline Gauge morphism_kernel(const GaugeMorphism& m) {
  std::vector<WnModule> comp;
  std::vector<KernelResult> kers;
  for (int64_t r = m.a; r <= m.b; ++r) {
    kers.push_back(kernel(m.maps[size_t(r - m.a)]));
    comp.push_back(kers.back().module);
  }
  std::vector<SemilinearMap> fmap, vmap;
  for (int64_t r = m.a; r < m.b; ++r) {
    size_t i = size_t(r - m.a);
    auto fE = compose(m.source.f_at(r), kers[i].embedding);
    auto X = solve_matrix(kers[i + 1].embedding, fE.mat);
    if (!X) throw PreconditionError("morphism_kernel: f does not restrict");
    fmap.push_back(make_map(comp[i], comp[i + 1], 0, std::move(*X)));
    auto vE = compose(m.source.v_at(r), kers[i + 1].embedding);
    auto Y = solve_matrix(kers[i].embedding, vE.mat);
    if (!Y) throw PreconditionError("morphism_kernel: v does not restrict");
    vmap.push_back(make_map(comp[i + 1], comp[i], 0, std::move(*Y)));
  }
  return make_gauge(m.source.ctx, m.a, m.b, std::move(comp), std::move(fmap),
                    std::move(vmap));
}

// Componentwise cokernel, with induced f, v.
inline Gauge morphism_cokernel(const GaugeMorphism& m) {
  std::vector<WnModule> comp;
  std::vector<CokernelResult> coks;
  for (int64_t r = m.a; r <= m.b; ++r) {
    coks.push_back(cokernel(m.maps[size_t(r - m.a)]));
    comp.push_back(coks.back().module);
  }
  const auto& W = *m.source.ctx;
  std::vector<SemilinearMap> fmap, vmap;
  for (int64_t r = m.a; r < m.b; ++r) {
    size_t i = size_t(r - m.a);
    WMat fm = wmat_mul(W, coks[i + 1].projection.mat,
                       wmat_mul(W, m.target.f_at(r).mat, coks[i].section));
    WMat vm = wmat_mul(W, coks[i].projection.mat,
                       wmat_mul(W, m.target.v_at(r).mat, coks[i + 1].section));
    fmap.push_back(make_map(comp[i], comp[i + 1], 0, std::move(fm)));
    vmap.push_back(make_map(comp[i + 1], comp[i], 0, std::move(vm)));
  }
  return make_gauge(m.source.ctx, m.a, m.b, std::move(comp), std::move(fmap),
                    std::move(vmap));
}

}  // namespace gaugeforge
