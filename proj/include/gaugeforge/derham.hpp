#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaugeforge/fq_linalg.hpp"
#include "gaugeforge/linalg.hpp"

namespace gaugeforge {

// ---------------------------------------------------------------------------
// Sparse polynomials over F_q (coordinate rings before truncation).

using Expo = std::vector<uint32_t>;

struct Poly {
  std::map<Expo, FqElem> terms;

  static Poly zero() { return Poly{}; }

  static Poly monomial(Expo e, const FqElem& c) {
    Poly p;
    p.terms.emplace(std::move(e), c);
    return p;
  }

  uint32_t degree() const {
    uint32_t d = 0;
    for (const auto& [e, c] : terms) {
      uint32_t s = 0;
      for (auto x : e) s += x;
      d = std::max(d, s);
    }
    return d;
  }
};

inline Poly poly_add(const FqContext& F, const Poly& a, const Poly& b) {
  Poly r = a;
  for (const auto& [e, c] : b.terms) {
    auto it = r.terms.find(e);
    if (it == r.terms.end())
      r.terms.emplace(e, c);
    else {
      it->second = F.add(it->second, c);
      if (F.is_zero(it->second)) r.terms.erase(it);
    }
  }
  return r;
}

inline Poly poly_mul(const FqContext& F, const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ea, ca] : a.terms)
    for (const auto& [eb, cb] : b.terms) {
      Expo e = ea;
      for (size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      FqElem c = F.mul(ca, cb);
      auto it = r.terms.find(e);
      if (it == r.terms.end())
        r.terms.emplace(std::move(e), c);
      else {
        it->second = F.add(it->second, c);
        if (F.is_zero(it->second)) r.terms.erase(it);
      }
    }
  return r;
}

inline Poly poly_diff(const FqContext& F, const Poly& a, size_t var) {
  Poly r;
  for (const auto& [e, c] : a.terms) {
    if (e[var] == 0) continue;
    FqElem nc = F.scalar_mul(e[var], c);
    if (F.is_zero(nc)) continue;
    Expo ne = e;
    ne[var] -= 1;
    r.terms.emplace(std::move(ne), nc);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Varieties: affine space A^m or a smooth hypersurface V(g) with a caller-
// supplied Jacobian witness h_0 g + sum h_i dg/dx_i = 1 (checked exactly).

struct AffineVariety {
  FqCtxPtr k;
  uint32_t nvars = 1;
  std::optional<Poly> g;
  std::vector<Poly> witness;  // h_0, h_1..h_nvars when g is present

  bool graded() const { return !g.has_value(); }
  uint32_t dim() const { return g ? nvars - 1 : nvars; }
};

inline AffineVariety affine_space(FqCtxPtr k, uint32_t m) {
  if (m < 1) throw PreconditionError("affine_space: need at least one variable");
  return AffineVariety{std::move(k), m, std::nullopt, {}};
}

inline AffineVariety hypersurface(FqCtxPtr k, uint32_t nvars, Poly g,
                                  std::vector<Poly> witness) {
  if (nvars < 2) throw PreconditionError("hypersurface: need at least two variables");
  if (witness.size() != nvars + 1)
    throw PreconditionError("hypersurface: witness must list h_0, h_1..h_n");
  const auto& F = *k;
  Poly acc = poly_mul(F, witness[0], g);
  for (uint32_t i = 0; i < nvars; ++i)
    acc = poly_add(F, acc, poly_mul(F, witness[i + 1], poly_diff(F, g, i)));
  Poly one = Poly::monomial(Expo(nvars, 0), F.one());
  if (!(acc.terms == one.terms))
    throw PreconditionError("hypersurface: Jacobian witness does not certify smoothness");
  return AffineVariety{std::move(k), nvars, std::move(g), std::move(witness)};
}

// ---------------------------------------------------------------------------
// Coefficient model: k[x]/(g) truncated at coefficient degree `cap`, with a
// canonical monomial basis (non-pivot monomials of the degree-descending
// echelon of the relation span, so reduction never raises degree).

class CoordModel {
 public:
  CoordModel(const AffineVariety& X, std::shared_ptr<const FqTab> F, uint32_t cap)
      : X_(&X), F_(std::move(F)), cap_(cap) {
    build_monomials();
    build_relations();
  }

  const FqTab& tab() const { return *F_; }
  uint32_t cap() const { return cap_; }
  size_t full_dim() const { return monos_.size(); }
  size_t dim() const { return qbasis_.size(); }
  const Expo& mono(size_t full_pos) const { return monos_[full_pos]; }
  const std::vector<size_t>& basis() const { return qbasis_; }
  uint32_t basis_degree(size_t q_pos) const { return deg_of(monos_[qbasis_[q_pos]]); }

  size_t full_index(const Expo& e) const {
    auto it = index_.find(e);
    if (it == index_.end())
      throw TruncationError("CoordModel: monomial beyond degree cap", long(deg_of(e)));
    return it->second;
  }

  // dense vector over the full monomial list
  std::vector<uint32_t> densify(const Poly& p) const {
    std::vector<uint32_t> v(full_dim(), 0);
    for (const auto& [e, c] : p.terms) v[full_index(e)] = F_->pack(c);
    return v;
  }

  void reduce(std::vector<uint32_t>& v) const {
    for (size_t r = 0; r < relrows_.rows; ++r) {
      uint32_t s = v[relpivots_[r]];
      if (!s) continue;
      uint32_t ns = F_->neg(s);
      for (size_t j = relpivots_[r]; j < full_dim(); ++j) {
        uint32_t x = relrows_.at(r, j);
        if (x) v[j] = F_->add(v[j], F_->mul(ns, x));
      }
    }
  }

  // coordinates over the reduced basis
  std::vector<uint32_t> to_basis(std::vector<uint32_t> full) const {
    reduce(full);
    std::vector<uint32_t> out(dim(), 0);
    for (size_t t = 0; t < qbasis_.size(); ++t) out[t] = full[qbasis_[t]];
    return out;
  }

  std::vector<uint32_t> from_basis(const std::vector<uint32_t>& q) const {
    std::vector<uint32_t> v(full_dim(), 0);
    for (size_t t = 0; t < qbasis_.size(); ++t) v[qbasis_[t]] = q[t];
    return v;
  }

  static uint32_t deg_of(const Expo& e) {
    uint32_t s = 0;
    for (auto x : e) s += x;
    return s;
  }

 private:
  void build_monomials() {
    Expo cur(X_->nvars, 0);
    std::vector<Expo> all;
    // enumerate |e| <= cap
    std::function<void(uint32_t, uint32_t)> rec = [&](uint32_t i, uint32_t left) {
      if (i + 1 == X_->nvars) {
        for (uint32_t v = 0; v <= left; ++v) {
          cur[i] = v;
          all.push_back(cur);
        }
        cur[i] = 0;
        return;
      }
      for (uint32_t v = 0; v <= left; ++v) {
        cur[i] = v;
        rec(i + 1, left - v);
      }
      cur[i] = 0;
    };
    rec(0, cap_);
    // descending by degree, then lexicographic: pivots land on high monomials
    std::sort(all.begin(), all.end(), [](const Expo& a, const Expo& b) {
      uint32_t da = deg_of(a), db = deg_of(b);
      if (da != db) return da > db;
      return a < b;
    });
    monos_ = std::move(all);
    for (size_t i = 0; i < monos_.size(); ++i) index_[monos_[i]] = i;
  }

  void build_relations() {
    if (!X_->g) {
      relrows_ = tmat_zero(0, full_dim());
      qbasis_.resize(full_dim());
      for (size_t i = 0; i < full_dim(); ++i) qbasis_[i] = i;
      return;
    }
    uint32_t dg = X_->g->degree();
    std::vector<std::vector<uint32_t>> rows;
    for (size_t i = 0; i < full_dim(); ++i) {
      if (deg_of(monos_[i]) + dg > cap_) continue;
      Poly prod = poly_mul(*F_->ctx(), Poly::monomial(monos_[i], F_->ctx()->one()), *X_->g);
      rows.push_back(densify(prod));
    }
    TMat m = tmat_zero(rows.size(), full_dim());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < full_dim(); ++j) m.at(i, j) = rows[i][j];
    auto piv = tmat_rref(*F_, m);
    relrows_ = tmat_zero(piv.size(), full_dim());
    for (size_t i = 0; i < piv.size(); ++i)
      for (size_t j = 0; j < full_dim(); ++j) relrows_.at(i, j) = m.at(i, j);
    relpivots_ = piv;
    std::vector<bool> is_piv(full_dim(), false);
    for (auto c : piv) is_piv[c] = true;
    for (size_t i = 0; i < full_dim(); ++i)
      if (!is_piv[i]) qbasis_.push_back(i);
  }

  const AffineVariety* X_;
  std::shared_ptr<const FqTab> F_;
  uint32_t cap_;
  std::vector<Expo> monos_;
  std::map<Expo, size_t> index_;
  TMat relrows_;
  std::vector<size_t> relpivots_;
  std::vector<size_t> qbasis_;
};

// ---------------------------------------------------------------------------
// Truncated de Rham model at weight cap W: the spaces Omega^q with basis
// (coefficient-basis monomial, dx_I), weight = deg + q <= W, modulo the
// hypersurface form relations dg ^ Omega^{q-1}.

class DeRhamModel {
 public:
  DeRhamModel(const AffineVariety& X, std::shared_ptr<const FqTab> F, uint32_t wcap)
      : X_(X), F_(std::move(F)), wcap_(wcap), coord_(X_, F_, wcap) {
    build_combos();
    build_forms();
    build_form_relations();
    dmats_.resize(X_.nvars + 1);
    for (uint32_t q = 0; q <= X_.nvars; ++q) dmats_[q] = build_d(q);
  }

  const AffineVariety& variety() const { return X_; }
  const FqTab& tab() const { return *F_; }
  const CoordModel& coord() const { return coord_; }
  uint32_t wcap() const { return wcap_; }
  uint32_t nvars() const { return X_.nvars; }

  size_t full_form_dim(uint32_t q) const {
    return q > X_.nvars ? 0 : fulls_[q].coords.size();
  }
  size_t form_dim(uint32_t q) const { return q > X_.nvars ? 0 : quots_[q].qcoords.size(); }

  // label of a reduced coordinate: (coefficient-basis position, combo index)
  std::pair<size_t, size_t> form_label(uint32_t q, size_t i) const {
    return fulls_[q].coords[quots_[q].qcoords[i]];
  }
  uint32_t form_weight(uint32_t q, size_t i) const {
    return fulls_[q].weight[quots_[q].qcoords[i]];
  }
  const std::vector<uint32_t>& combo(uint32_t q, size_t t) const { return combos_[q][t]; }
  size_t combo_count(uint32_t q) const { return q > X_.nvars ? 0 : combos_[q].size(); }

  // d : Omega^q -> Omega^{q+1} on reduced coordinates
  const TMat& d_term(uint32_t q) const {
    static const TMat empty{};
    return q >= dmats_.size() ? empty : dmats_[q];
  }

  // reduced coordinates of a full-coordinate vector
  std::vector<uint32_t> to_form(uint32_t q, std::vector<uint32_t> full) const {
    reduce_form(q, full);
    std::vector<uint32_t> out(form_dim(q), 0);
    for (size_t i = 0; i < quots_[q].qcoords.size(); ++i) out[i] = full[quots_[q].qcoords[i]];
    return out;
  }

  std::vector<uint32_t> from_form(uint32_t q, const std::vector<uint32_t>& v) const {
    std::vector<uint32_t> full(full_form_dim(q), 0);
    for (size_t i = 0; i < quots_[q].qcoords.size(); ++i) full[quots_[q].qcoords[i]] = v[i];
    return full;
  }

  // full-coordinate position of (coefficient-basis pos, combo index), if in window
  std::optional<size_t> full_pos(uint32_t q, size_t opos, size_t combo_idx) const {
    auto it = fulls_[q].pos.find({opos, combo_idx});
    if (it == fulls_[q].pos.end()) return std::nullopt;
    return it->second;
  }

  // d of a single coefficient-basis monomial against a combo, as a full
  // (q+1)-coordinate vector; shared by d-matrix building and Cartier work.
  void accumulate_d(uint32_t q, size_t opos, size_t combo_idx, uint32_t scale,
                    std::vector<uint32_t>& out) const {
    const auto& F = *F_;
    const Expo& alpha = coord_.mono(coord_.basis()[opos]);
    for (uint32_t var = 0; var < X_.nvars; ++var) {
      if (alpha[var] == 0) continue;
      uint32_t cdig = alpha[var] % F.ctx()->p();
      if (cdig == 0) continue;
      Expo de = alpha;
      de[var] -= 1;
      // coefficient alpha_var * x^{alpha - e_var}, reduced
      std::vector<uint32_t> cf(coord_.full_dim(), 0);
      cf[coord_.full_index(de)] =
          F.mul(scale, F.pack(F.ctx()->from_int(int64_t(alpha[var]))));
      auto cq = coord_.to_basis(std::move(cf));
      auto [sign, nc] = wedge(q, var, combo_idx);
      if (nc == SIZE_MAX) continue;
      for (size_t t = 0; t < cq.size(); ++t) {
        if (!cq[t]) continue;
        auto fp = full_pos(q + 1, t, nc);
        if (!fp) continue;  // weight dropped, always in window for d
        uint32_t val = sign ? F.neg(cq[t]) : cq[t];
        out[*fp] = F.add(out[*fp], val);
      }
    }
  }

  // wedge dx_var into combo t of degree q: (sign_is_negative, new combo index)
  std::pair<bool, size_t> wedge(uint32_t q, uint32_t var, size_t t) const {
    const auto& I = combos_[q][t];
    size_t before = 0;
    for (auto i : I) {
      if (i == var) return {false, SIZE_MAX};
      if (i < var) ++before;
    }
    std::vector<uint32_t> J = I;
    J.insert(J.begin() + before, var);
    auto it = combo_index_[q + 1].find(J);
    if (it == combo_index_[q + 1].end()) return {false, SIZE_MAX};
    return {before % 2 == 1, it->second};
  }

  void reduce_form(uint32_t q, std::vector<uint32_t>& v) const {
    const auto& Q = quots_[q];
    const auto& F = *F_;
    for (size_t r = 0; r < Q.relrows.rows; ++r) {
      uint32_t s = v[Q.pivots[r]];
      if (!s) continue;
      uint32_t ns = F.neg(s);
      for (size_t j = Q.pivots[r]; j < v.size(); ++j) {
        uint32_t x = Q.relrows.at(r, j);
        if (x) v[j] = F.add(v[j], F.mul(ns, x));
      }
    }
  }

 private:
  struct FullForms {
    std::vector<std::pair<size_t, size_t>> coords;
    std::map<std::pair<size_t, size_t>, size_t> pos;
    std::vector<uint32_t> weight;
  };
  struct FormQuot {
    TMat relrows;
    std::vector<size_t> pivots;
    std::vector<size_t> qcoords;
  };

  void build_combos() {
    combos_.resize(X_.nvars + 2);
    combo_index_.resize(X_.nvars + 2);
    for (uint32_t q = 0; q <= X_.nvars + 1; ++q) {
      std::vector<uint32_t> cur;
      std::function<void(uint32_t)> rec = [&](uint32_t start) {
        if (cur.size() == q) {
          combo_index_[q][cur] = combos_[q].size();
          combos_[q].push_back(cur);
          return;
        }
        for (uint32_t v = start; v < X_.nvars; ++v) {
          cur.push_back(v);
          rec(v + 1);
          cur.pop_back();
        }
      };
      if (q <= X_.nvars) rec(0);
    }
  }

  void build_forms() {
    fulls_.resize(X_.nvars + 1);
    for (uint32_t q = 0; q <= X_.nvars; ++q) {
      auto& FB = fulls_[q];
      // order descending by weight, then by (coefficient pos, combo)
      std::vector<std::pair<size_t, size_t>> coords;
      for (size_t o = 0; o < coord_.dim(); ++o) {
        uint32_t w = coord_.basis_degree(o) + q;
        if (w > wcap_) continue;
        for (size_t t = 0; t < combos_[q].size(); ++t) coords.emplace_back(o, t);
      }
      std::sort(coords.begin(), coords.end(), [&](const auto& a, const auto& b) {
        uint32_t wa = coord_.basis_degree(a.first) + q, wb = coord_.basis_degree(b.first) + q;
        if (wa != wb) return wa > wb;
        return a < b;
      });
      FB.coords = std::move(coords);
      for (size_t i = 0; i < FB.coords.size(); ++i) {
        FB.pos[FB.coords[i]] = i;
        FB.weight.push_back(coord_.basis_degree(FB.coords[i].first) + q);
      }
    }
  }

  void build_form_relations() {
    quots_.resize(X_.nvars + 1);
    for (uint32_t q = 0; q <= X_.nvars; ++q) {
      auto& Q = quots_[q];
      if (!X_.g || q == 0) {
        Q.relrows = tmat_zero(0, full_form_dim(q));
        Q.qcoords.resize(full_form_dim(q));
        for (size_t i = 0; i < full_form_dim(q); ++i) Q.qcoords[i] = i;
        continue;
      }
      // relations dg ^ (x^beta dx_J) for |beta| + deg(dg) + q <= wcap
      const auto& F = *F_;
      std::vector<std::vector<uint32_t>> rows;
      std::vector<Poly> dgs;
      for (uint32_t v = 0; v < X_.nvars; ++v) dgs.push_back(poly_diff(*F.ctx(), *X_.g, v));
      for (size_t o = 0; o < coord_.dim(); ++o) {
        for (size_t t = 0; t < combos_[q - 1].size(); ++t) {
          std::vector<uint32_t> row(full_form_dim(q), 0);
          bool fits = true;
          for (uint32_t v = 0; v < X_.nvars && fits; ++v) {
            if (dgs[v].terms.empty()) continue;
            auto [sign, nc] = wedge(q - 1, v, t);
            if (nc == SIZE_MAX) continue;
            Poly prod = poly_mul(*F.ctx(),
                                 Poly::monomial(coord_.mono(coord_.basis()[o]), F.ctx()->one()),
                                 dgs[v]);
            if (prod.degree() + q > wcap_) {
              fits = false;
              break;
            }
            auto cq = coord_.to_basis(coord_.densify(prod));
            for (size_t s = 0; s < cq.size(); ++s) {
              if (!cq[s]) continue;
              auto fp = full_pos(q, s, nc);
              if (!fp) {
                fits = false;
                break;
              }
              uint32_t val = sign ? F.neg(cq[s]) : cq[s];
              row[*fp] = F.add(row[*fp], val);
            }
          }
          if (fits) rows.push_back(std::move(row));
        }
      }
      TMat m = tmat_zero(rows.size(), full_form_dim(q));
      for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
      auto piv = tmat_rref(*F_, m);
      Q.relrows = tmat_zero(piv.size(), full_form_dim(q));
      for (size_t i = 0; i < piv.size(); ++i)
        for (size_t j = 0; j < m.cols; ++j) Q.relrows.at(i, j) = m.at(i, j);
      Q.pivots = piv;
      std::vector<bool> is_piv(full_form_dim(q), false);
      for (auto c : piv) is_piv[c] = true;
      for (size_t i = 0; i < full_form_dim(q); ++i)
        if (!is_piv[i]) Q.qcoords.push_back(i);
    }
  }

  TMat build_d(uint32_t q) {
    if (q >= X_.nvars) return tmat_zero(0, form_dim(q));
    TMat m = tmat_zero(form_dim(q + 1), form_dim(q));
    for (size_t j = 0; j < form_dim(q); ++j) {
      auto [opos, cidx] = form_label(q, j);
      std::vector<uint32_t> out(full_form_dim(q + 1), 0);
      accumulate_d(q, opos, cidx, F_->one(), out);
      auto red = to_form(q + 1, std::move(out));
      for (size_t i = 0; i < red.size(); ++i) m.at(i, j) = red[i];
    }
    return m;
  }

  AffineVariety X_;
  std::shared_ptr<const FqTab> F_;
  uint32_t wcap_;
  CoordModel coord_;
  std::vector<std::vector<std::vector<uint32_t>>> combos_;
  std::vector<std::map<std::vector<uint32_t>, size_t>> combo_index_;
  std::vector<FullForms> fulls_;
  std::vector<FormQuot> quots_;
  std::vector<TMat> dmats_;
};

// ---------------------------------------------------------------------------
// Paired models (plain weight cap D, sigma-twisted weight cap pD) plus the
// Cartier operator between them.

class DeRhamPair {
 public:
  DeRhamPair(const AffineVariety& X, uint32_t D)
      : X_(X),
        F_(std::make_shared<FqTab>(X.k)),
        D_(D),
        plain_(X_, F_, D),
        sigma_(X_, F_, X.k->p() * D) {
    cinv_.resize(X_.nvars + 1);
    csolver_.resize(X_.nvars + 1);
  }

  const AffineVariety& variety() const { return X_; }
  const FqTab& tab() const { return *F_; }
  uint32_t D() const { return D_; }
  const DeRhamModel& plain() const { return plain_; }
  const DeRhamModel& sigma() const { return sigma_; }

  // c^{-1} of the j-th plain q-form basis element, as sigma-model reduced
  // coordinates: a dx_I -> a^p prod_{i in I} x_i^{p-1} dx_I.
  std::vector<uint32_t> c_inverse_basis(uint32_t q, size_t j) const {
    ensure_cinv(q);
    std::vector<uint32_t> out(cinv_[q].rows, 0);
    for (size_t i = 0; i < cinv_[q].rows; ++i) out[i] = cinv_[q].at(i, j);
    return out;
  }

  // c^{-1} on an arbitrary plain-model q-form (coordinates over the reduced
  // basis); semilinearity c^{-1}(a w) = a^p c^{-1}(w) on coefficients.
  std::vector<uint32_t> c_inverse(uint32_t q, const std::vector<uint32_t>& v) const {
    ensure_cinv(q);
    const auto& F = *F_;
    std::vector<uint32_t> out(sigma_.form_dim(q), 0);
    for (size_t j = 0; j < v.size(); ++j) {
      if (!v[j]) continue;
      uint32_t s = F.pow_p(v[j]);
      for (size_t i = 0; i < out.size(); ++i) {
        uint32_t x = cinv_[q].at(i, j);
        if (x) out[i] = F.add(out[i], F.mul(s, x));
      }
    }
    return out;
  }

  // Cartier c on closed sigma-model q-forms: solve  w = d(eta) + sum_j
  // y_j c^{-1}(mu_j)  and return sum_j sigma^{-1}(y_j) mu_j. Many columns at
  // once; throws TruncationError when a column cannot be expressed.
  TMat cartier_c_many(uint32_t q, const TMat& closed_cols) const {
    ensure_cinv(q);
    const auto& F = *F_;
    const TMat& solver = csolver_[q];
    auto sol = tmat_solve_many(F, solver, closed_cols);
    if (!sol)
      throw TruncationError("cartier: class not in span(exact, c^{-1}(basis)); capacity too low",
                            long(sigma_.wcap()) + 1);
    size_t edim = q == 0 ? 0 : sigma_.form_dim(q - 1);
    TMat out = tmat_zero(plain_.form_dim(q), closed_cols.cols);
    for (size_t j = 0; j < closed_cols.cols; ++j)
      for (size_t t = 0; t < plain_.form_dim(q); ++t)
        out.at(t, j) = F.frobinv(sol->at(edim + t, j));
    return out;
  }

  std::vector<uint32_t> cartier_c(uint32_t q, const std::vector<uint32_t>& w) const {
    TMat cols = tmat_zero(w.size(), 1);
    for (size_t i = 0; i < w.size(); ++i) cols.at(i, 0) = w[i];
    TMat out = cartier_c_many(q, cols);
    std::vector<uint32_t> v(out.rows);
    for (size_t i = 0; i < out.rows; ++i) v[i] = out.at(i, 0);
    return v;
  }

 private:
  void ensure_cinv(uint32_t q) const {
    if (cinv_[q].rows != 0 || cinv_[q].cols != 0) return;
    const auto& F = *F_;
    const auto& K = *F.ctx();
    size_t pd = plain_.form_dim(q);
    TMat ci = tmat_zero(sigma_.form_dim(q), pd);
    for (size_t j = 0; j < pd; ++j) {
      auto [opos, cidx] = plain_.form_label(q, j);
      // coefficient monomial of the plain basis element
      Expo alpha = plain_.coord().mono(plain_.coord().basis()[opos]);
      Expo target(X_.nvars, 0);
      for (uint32_t v = 0; v < X_.nvars; ++v) target[v] = alpha[v] * K.p();
      for (auto var : plain_.combo(q, cidx)) target[var] += K.p() - 1;
      std::vector<uint32_t> cf(sigma_.coord().full_dim(), 0);
      cf[sigma_.coord().full_index(target)] = F.one();
      auto cq = sigma_.coord().to_basis(std::move(cf));
      std::vector<uint32_t> full(sigma_.full_form_dim(q), 0);
      // the combo index set is shared between the two models
      size_t scidx = cidx;
      for (size_t t = 0; t < cq.size(); ++t) {
        if (!cq[t]) continue;
        auto fp = sigma_.full_pos(q, t, scidx);
        if (!fp)
          throw TruncationError("c_inverse: image leaves the sigma window", long(sigma_.wcap()) + 1);
        full[*fp] = F.add(full[*fp], cq[t]);
      }
      auto red = sigma_.to_form(q, std::move(full));
      for (size_t i = 0; i < red.size(); ++i) ci.at(i, j) = red[i];
    }
    cinv_[q] = std::move(ci);
    // solver [exact | c^{-1}(basis)]
    TMat dprev = q == 0 ? tmat_zero(sigma_.form_dim(0), 0) : sigma_.d_term(q - 1);
    TMat solver = tmat_zero(sigma_.form_dim(q), dprev.cols + pd);
    for (size_t i = 0; i < solver.rows; ++i) {
      for (size_t j = 0; j < dprev.cols; ++j) solver.at(i, j) = dprev.at(i, j);
      for (size_t j = 0; j < pd; ++j) solver.at(i, dprev.cols + j) = cinv_[q].at(i, j);
    }
    csolver_[q] = std::move(solver);
  }

  AffineVariety X_;
  std::shared_ptr<const FqTab> F_;
  uint32_t D_;
  DeRhamModel plain_, sigma_;
  mutable std::vector<TMat> cinv_;
  mutable std::vector<TMat> csolver_;
};

// ---------------------------------------------------------------------------
// The de Rham gauge complexes G_1^r(X) with their f, v ladder maps.

struct ComplexTerm {
  uint32_t q = 0;
  bool twisted = false;
  const DeRhamModel* model = nullptr;
  TMat embed;                    // model-form coords x term dim
  std::vector<uint32_t> weight;  // per term coordinate (graded varieties)
  bool is_z = false;             // Z Omega^q term
};

struct DeRhamComplex {
  int64_t r = 0;
  std::vector<ComplexTerm> terms;  // positions 0..nvars
  std::vector<TMat> diff;          // positions 0..nvars-1 (term t -> t+1)
};

namespace detail {

inline TMat full_embed(const DeRhamModel& m, uint32_t q) {
  return tmat_identity(m.tab(), m.form_dim(q));
}

inline std::vector<uint32_t> term_weights(const DeRhamModel& m, uint32_t q) {
  std::vector<uint32_t> w(m.form_dim(q));
  for (size_t i = 0; i < w.size(); ++i) w[i] = m.form_weight(q, i);
  return w;
}

// kernel of d : Omega^q -> Omega^{q+1}, weight-blocked for graded varieties
inline TMat z_basis(const DeRhamModel& m, uint32_t q) {
  const auto& F = m.tab();
  const TMat& d = m.d_term(q);
  if (!m.variety().graded() || d.rows == 0) {
    if (d.rows == 0) return tmat_identity(F, m.form_dim(q));
    return tmat_kernel(F, d);
  }
  // per-weight kernels (d preserves weight)
  std::map<uint32_t, std::vector<size_t>> buckets;
  for (size_t j = 0; j < m.form_dim(q); ++j) buckets[m.form_weight(q, j)].push_back(j);
  std::vector<std::vector<uint32_t>> cols;
  for (auto& [w, idx] : buckets) {
    TMat sub = tmat_zero(d.rows, idx.size());
    for (size_t t = 0; t < idx.size(); ++t)
      for (size_t i = 0; i < d.rows; ++i) sub.at(i, t) = d.at(i, idx[t]);
    TMat ker = tmat_kernel(F, std::move(sub));
    for (size_t c = 0; c < ker.cols; ++c) {
      std::vector<uint32_t> col(m.form_dim(q), 0);
      for (size_t t = 0; t < idx.size(); ++t) col[idx[t]] = ker.at(t, c);
      cols.push_back(std::move(col));
    }
  }
  TMat out = tmat_zero(m.form_dim(q), cols.size());
  for (size_t c = 0; c < cols.size(); ++c)
    for (size_t i = 0; i < out.rows; ++i) out.at(i, c) = cols[c][i];
  return out;
}

}  // namespace detail

// G_1^r(X): the de Rham complex for r < 0; for 0 <= r <= dim the twisted
// complex spliced by dc at position r; sigma Omega^. for r > nvars.
inline DeRhamComplex build_G1(const DeRhamPair& P, int64_t r) {
  const auto& F = P.tab();
  uint32_t n = P.plain().nvars();
  DeRhamComplex C;
  C.r = r;
  for (uint32_t t = 0; t <= n; ++t) {
    ComplexTerm term;
    term.q = t;
    if (r < 0 || int64_t(t) > r) {
      term.twisted = false;
      term.model = &P.plain();
      term.embed = detail::full_embed(P.plain(), t);
      term.weight = detail::term_weights(P.plain(), t);
    } else if (int64_t(t) < r) {
      term.twisted = true;
      term.model = &P.sigma();
      term.embed = detail::full_embed(P.sigma(), t);
      term.weight = detail::term_weights(P.sigma(), t);
    } else {  // t == r: sigma Z Omega^r
      term.twisted = true;
      term.model = &P.sigma();
      term.is_z = true;
      term.embed = detail::z_basis(P.sigma(), t);
      term.weight.resize(term.embed.cols, 0);
      for (size_t c = 0; c < term.embed.cols; ++c) {
        uint32_t w = 0;
        for (size_t i = 0; i < term.embed.rows; ++i)
          if (term.embed.at(i, c)) w = std::max(w, P.sigma().form_weight(t, i));
        term.weight[c] = w;
      }
    }
    C.terms.push_back(std::move(term));
  }
  for (uint32_t t = 0; t < n; ++t) {
    const auto& src = C.terms[t];
    const auto& dst = C.terms[t + 1];
    size_t sdim = src.embed.cols, ddim = dst.embed.cols;
    TMat m = tmat_zero(ddim, sdim);
    if (int64_t(t) == r && r >= 0) {
      // splice: dc : sigma Z Omega^r -> Omega^{r+1}
      if (sdim > 0) {
        TMat cimg = P.cartier_c_many(t, src.embed);
        // d on plain model applied to each column
        const TMat& d = P.plain().d_term(t);
        m = tmat_mul(F, d, cimg);
      }
    } else if (int64_t(t) + 1 == r && r >= 0) {
      // d : sigma Omega^{r-1} -> sigma Z Omega^r (target is a subspace)
      const TMat& d = src.model->d_term(t);
      auto sol = tmat_solve_many(F, dst.embed, d);
      if (!sol) throw PreconditionError("build_G1: d does not land in Z (internal)");
      m = std::move(*sol);
    } else {
      // plain d within one model
      m = src.model->d_term(t);
    }
    C.diff.push_back(std::move(m));
  }
  return C;
}

// f : G_1^r -> G_1^{r+1} per position (0 for r < 0; identity low, inclusion
// at the splice, 0 above).
inline std::vector<TMat> gauge_map_f(const DeRhamPair& P, int64_t r,
                                     const DeRhamComplex& src, const DeRhamComplex& dst) {
  const auto& F = P.tab();
  uint32_t n = P.plain().nvars();
  std::vector<TMat> out;
  for (uint32_t t = 0; t <= n; ++t) {
    size_t sdim = src.terms[t].embed.cols, ddim = dst.terms[t].embed.cols;
    if (r < 0) {
      out.push_back(tmat_zero(ddim, sdim));
      continue;
    }
    if (int64_t(t) < r) {
      out.push_back(tmat_identity(F, sdim));
    } else if (int64_t(t) == r) {
      if (int64_t(t) == int64_t(n) && r >= int64_t(n)) {
        out.push_back(tmat_identity(F, sdim));  // top: Z Omega^n = Omega^n
        continue;
      }
      // inclusion sigma Z Omega^r -> sigma Omega^r; target may be Z again
      // when r+1 has its splice at r+1 > r, so target is the full term
      out.push_back(src.terms[t].embed);
    } else {
      out.push_back(tmat_zero(ddim, sdim));
    }
  }
  return out;
}

// v : G_1^{r+1} -> G_1^r per position (identity for r < -1; 0 low, Cartier c
// at position r+1, identity above).
inline std::vector<TMat> gauge_map_v(const DeRhamPair& P, int64_t r,
                                     const DeRhamComplex& src, const DeRhamComplex& dst) {
  const auto& F = P.tab();
  uint32_t n = P.plain().nvars();
  std::vector<TMat> out;
  for (uint32_t t = 0; t <= n; ++t) {
    size_t sdim = src.terms[t].embed.cols, ddim = dst.terms[t].embed.cols;
    if (r < -1) {
      out.push_back(tmat_identity(F, sdim));
      continue;
    }
    if (r >= int64_t(n)) {
      out.push_back(tmat_zero(ddim, sdim));  // v = p = 0 beyond the window
      continue;
    }
    if (int64_t(t) < r + 1) {
      out.push_back(tmat_zero(ddim, sdim));
    } else if (int64_t(t) == r + 1) {
      // c : sigma Z Omega^{r+1} -> Omega^{r+1}
      TMat cimg = sdim ? P.cartier_c_many(t, src.terms[t].embed)
                       : tmat_zero(P.plain().form_dim(t), 0);
      if (dst.terms[t].is_z) {
        auto sol = tmat_solve_many(F, dst.terms[t].embed, cimg);
        if (!sol) throw PreconditionError("gauge_map_v: c does not land in Z (internal)");
        out.push_back(std::move(*sol));
      } else {
        out.push_back(std::move(cimg));
      }
    } else {
      out.push_back(tmat_identity(F, sdim));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cohomology of the complexes and the gauge H_g^i(X, W_1).

struct CohomologyData {
  size_t dim = 0;
  TMat reps;                     // term coords x dim
  std::vector<uint32_t> weight;  // weight of each rep (graded varieties)
  TMat solver;                   // [image basis | reps] for class coordinates
  size_t imdim = 0;
};

inline CohomologyData complex_cohomology(const FqTab& F, const DeRhamComplex& C, uint32_t i) {
  CohomologyData out;
  size_t tdim = C.terms[i].embed.cols;
  TMat ker = [&] {
    if (i >= C.diff.size()) return tmat_identity(F, tdim);
    const TMat& d = C.diff[i];
    // weight-blocked kernels when the term weights are available and the
    // variety is graded; otherwise a global kernel
    if (C.terms[i].model->variety().graded()) {
      std::map<uint32_t, std::vector<size_t>> buckets;
      for (size_t j = 0; j < tdim; ++j) buckets[C.terms[i].weight[j]].push_back(j);
      std::vector<std::vector<uint32_t>> cols;
      for (auto& [w, idx] : buckets) {
        TMat sub = tmat_zero(d.rows, idx.size());
        for (size_t t = 0; t < idx.size(); ++t)
          for (size_t r2 = 0; r2 < d.rows; ++r2) sub.at(r2, t) = d.at(r2, idx[t]);
        TMat kk = tmat_kernel(F, std::move(sub));
        for (size_t c = 0; c < kk.cols; ++c) {
          std::vector<uint32_t> col(tdim, 0);
          for (size_t t = 0; t < idx.size(); ++t) col[idx[t]] = kk.at(t, c);
          cols.push_back(std::move(col));
        }
      }
      TMat k = tmat_zero(tdim, cols.size());
      for (size_t c = 0; c < cols.size(); ++c)
        for (size_t r2 = 0; r2 < tdim; ++r2) k.at(r2, c) = cols[c][r2];
      return k;
    }
    return tmat_kernel(F, d);
  }();
  TMat im = i == 0 ? tmat_zero(tdim, 0) : C.diff[i - 1];
  auto chosen = tmat_extend_basis(F, im, ker);
  out.dim = chosen.size();
  out.reps = tmat_zero(tdim, chosen.size());
  for (size_t c = 0; c < chosen.size(); ++c) {
    for (size_t r2 = 0; r2 < tdim; ++r2) out.reps.at(r2, c) = ker.at(r2, chosen[c]);
    uint32_t w = 0;
    for (size_t r2 = 0; r2 < tdim; ++r2)
      if (ker.at(r2, chosen[c])) w = std::max(w, C.terms[i].weight[r2]);
    out.weight.push_back(w);
  }
  out.imdim = im.cols;
  out.solver = tmat_zero(tdim, im.cols + out.dim);
  for (size_t r2 = 0; r2 < tdim; ++r2) {
    for (size_t j = 0; j < im.cols; ++j) out.solver.at(r2, j) = im.at(r2, j);
    for (size_t j = 0; j < out.dim; ++j) out.solver.at(r2, im.cols + j) = out.reps.at(r2, j);
  }
  return out;
}

// class coordinates of many closed columns at once
inline TMat class_coords_many(const FqTab& F, const CohomologyData& H, const TMat& cols) {
  if (H.dim == 0) return tmat_zero(0, cols.cols);
  auto sol = tmat_solve_many(F, H.solver, cols);
  if (!sol) throw PreconditionError("class_coords: column not closed (internal)");
  TMat out = tmat_zero(H.dim, cols.cols);
  for (size_t j = 0; j < cols.cols; ++j)
    for (size_t t = 0; t < H.dim; ++t) out.at(t, j) = sol->at(H.imdim + t, j);
  return out;
}

struct HgResult {
  PhiGauge gauge;       // n = 1 phi-module; phi bijective only up to truncation
  bool phi_truncated = false;
  std::vector<std::pair<int64_t, size_t>> dims;  // (r, dim H^i(G_1^r))
};

// H_g^i(X, W_1)^r = H^i of the global sections of G_1^r(X), assembled into a
// gauge with f, v induced by the ladder maps and phi induced by the identity
// identification of G^{+inf} with sigma Omega^.. Requires d = 1 so that the
// twisted k-structures coincide with the plain one.
inline HgResult hg_gauge(const AffineVariety& X, uint32_t i, uint32_t D, int64_t rmin_in = 0,
                         int64_t rmax_in = 0) {
  if (X.k->d() != 1)
    throw PreconditionError("hg_gauge: implemented over prime fields (d = 1)");
  DeRhamPair P(X, D);
  const auto& F = P.tab();
  uint32_t n = X.nvars;
  int64_t rmin = std::min<int64_t>(rmin_in, -1);
  int64_t rmax = std::max<int64_t>(rmax_in, int64_t(n) + 1);
  if (i > n) {
    // all components vanish
    auto ctx1 = WittContext::make(X.k, 1);
    Gauge z = zero_gauge(ctx1);
    SemilinearMap phi = make_map(z.comp[0], z.comp[0], 1, wmat_zero(*ctx1, 0, 0));
    return HgResult{make_phi_gauge(std::move(z), std::move(phi)), false, {}};
  }

  std::vector<DeRhamComplex> cx;
  std::vector<CohomologyData> H;
  for (int64_t r = rmin; r <= rmax; ++r) {
    cx.push_back(build_G1(P, r));
    H.push_back(complex_cohomology(F, cx.back(), i));
  }
  auto ctx1 = WittContext::make(X.k, 1);
  const auto& W1 = *ctx1;
  auto to_wmat = [&](const TMat& m) {
    WMat out = wmat_zero(W1, m.rows, m.cols);
    for (size_t a = 0; a < m.rows; ++a)
      for (size_t b = 0; b < m.cols; ++b) {
        WittElem x = W1.zero();
        x.a[0] = F.unpack(m.at(a, b));
        out.at(a, b) = x;
      }
    return out;
  };

  std::vector<WnModule> comp;
  HgResult out{PhiGauge{}, false, {}};
  for (size_t t = 0; t < H.size(); ++t) {
    comp.push_back(make_module(ctx1, std::vector<uint32_t>(H[t].dim, 1)));
    out.dims.emplace_back(rmin + int64_t(t), H[t].dim);
  }
  std::vector<SemilinearMap> fmap, vmap;
  for (size_t t = 0; t + 1 < H.size(); ++t) {
    int64_t r = rmin + int64_t(t);
    auto fpos = gauge_map_f(P, r, cx[t], cx[t + 1]);
    auto vpos = gauge_map_v(P, r, cx[t + 1], cx[t]);
    TMat fimg = tmat_mul(F, fpos[i], H[t].reps);
    TMat vimg = tmat_mul(F, vpos[i], H[t + 1].reps);
    fmap.push_back(make_map(comp[t], comp[t + 1], 0,
                            to_wmat(class_coords_many(F, H[t + 1], fimg))));
    vmap.push_back(make_map(comp[t + 1], comp[t], 0,
                            to_wmat(class_coords_many(F, H[t], vimg))));
  }
  // phi: reps of H^i(sigma Omega) with weight <= D are reinterpreted in the
  // plain window (identical labels); heavier classes are cut by truncation.
  TMat phimat = tmat_zero(H.front().dim, H.back().dim);
  {
    const auto& top = cx.back().terms[i];
    const auto& bot = cx.front().terms[i];
    TMat cols = tmat_zero(bot.embed.cols, H.back().dim);
    for (size_t c = 0; c < H.back().dim; ++c) {
      bool fits = true;
      std::vector<uint32_t> col(bot.embed.cols, 0);
      for (size_t j = 0; j < top.embed.cols && fits; ++j) {
        uint32_t x = H.back().reps.at(j, c);
        if (!x) continue;
        auto [opos, cidx] = top.model->form_label(i, j);
        // translate the sigma-model label into the plain model
        const Expo& alpha = top.model->coord().mono(top.model->coord().basis()[opos]);
        uint32_t deg = CoordModel::deg_of(alpha);
        if (deg + i > P.plain().wcap()) {
          fits = false;
          break;
        }
        size_t po = SIZE_MAX;
        const auto& pb = P.plain().coord();
        for (size_t s = 0; s < pb.dim(); ++s)
          if (pb.mono(pb.basis()[s]) == alpha) {
            po = s;
            break;
          }
        if (po == SIZE_MAX) {
          fits = false;
          break;
        }
        auto fp = P.plain().full_pos(i, po, cidx);
        if (!fp) {
          fits = false;
          break;
        }
        auto red_pos = fp;  // plain model has no form relations beyond quotient map
        std::vector<uint32_t> full(P.plain().full_form_dim(i), 0);
        full[*red_pos] = x;
        auto red = P.plain().to_form(i, std::move(full));
        for (size_t s = 0; s < red.size(); ++s) col[s] = F.add(col[s], red[s]);
      }
      if (!fits) {
        out.phi_truncated = true;
        continue;  // column stays zero
      }
      for (size_t s = 0; s < col.size(); ++s) cols.at(s, c) = col[s];
    }
    phimat = class_coords_many(F, H.front(), cols);
  }
  Gauge g = make_gauge(ctx1, rmin, rmax, comp, std::move(fmap), std::move(vmap));
  SemilinearMap phi = make_map(comp.back(), comp.front(), 1, to_wmat(phimat));
  out.gauge = make_phi_gauge(std::move(g), std::move(phi));
  return out;
}

inline WnModule gauge_cohomology(const AffineVariety& X, uint32_t i, int64_t r, uint32_t D) {
  DeRhamPair P(X, D);
  auto C = build_G1(P, r);
  auto H = complex_cohomology(P.tab(), C, i);
  auto ctx1 = WittContext::make(X.k, 1);
  return make_module(ctx1, std::vector<uint32_t>(H.dim, 1));
}

// Basis of closed / exact q-forms in the plain weight-D model.
inline TMat closed_forms(const AffineVariety& X, uint32_t q, uint32_t D) {
  DeRhamPair P(X, D);
  return detail::z_basis(P.plain(), q);
}

inline TMat exact_forms(const AffineVariety& X, uint32_t q, uint32_t D) {
  DeRhamPair P(X, D);
  if (q == 0) return tmat_zero(P.plain().form_dim(0), 0);
  return P.plain().d_term(q - 1);
}

}  // namespace gaugeforge
