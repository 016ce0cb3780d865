#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "gaugeforge/fq.hpp"
#include "gaugeforge/intpoly.hpp"

namespace gaugeforge {

// Universal Witt structure polynomials for a fixed (p, n), over the integers.
// S_i / P_i live in 2n variables x_0..x_{n-1}, y_0..y_{n-1}; the negation
// polynomials N_i in the n variables x_0..x_{n-1}. ghost_x[i] is the i-th
// ghost component w_i(x_0..x_i) in the same 2n-variable ring, ghost_1 its
// n-variable version.
struct WittStructurePolys {
  uint32_t p, n;
  std::vector<ZPoly> add;    // S_0..S_{n-1}
  std::vector<ZPoly> mul;    // P_0..P_{n-1}
  std::vector<ZPoly> neg;    // N_0..N_{n-1}
  std::vector<ZPoly> ghost2; // w_i in x-vars of the 2n-variable ring
  std::vector<ZPoly> ghost1; // w_i in the n-variable ring
};

namespace detail {

inline ZPoly ghost_poly(uint32_t p, uint32_t i, size_t nvars, size_t offset) {
  ZPoly w(nvars);
  mpz_class pj = 1;
  for (uint32_t j = 0; j <= i; ++j) {
    uint64_t e = 1;
    for (uint32_t k = 0; k < i - j; ++k) e *= p;
    w += ZPoly::variable(nvars, offset + j, uint32_t(e)) * ZPoly::constant(nvars, pj);
    pj *= p;
  }
  return w;
}

inline std::vector<ZPoly> solve_ghost_recursion(uint32_t p, uint32_t n,
                                                const std::vector<ZPoly>& target) {
  // Finds polys Q_i with ghost_i(Q_0..Q_i) = target_i, by exact division.
  std::vector<ZPoly> q;
  mpz_class pi = 1;
  for (uint32_t i = 0; i < n; ++i) {
    ZPoly acc = target[i];
    mpz_class pj = 1;
    for (uint32_t j = 0; j < i; ++j) {
      uint64_t e = 1;
      for (uint32_t k = 0; k < i - j; ++k) e *= p;
      acc -= q[j].pow(e) * ZPoly::constant(target[i].nvars(), pj);
      pj *= p;
    }
    q.push_back(acc.divexact(pi));
    pi *= p;
  }
  return q;
}

}  // namespace detail

inline std::shared_ptr<const WittStructurePolys> witt_structure_polys(uint32_t p,
                                                                      uint32_t n) {
  static std::mutex mu;
  static std::map<std::pair<uint32_t, uint32_t>, std::shared_ptr<const WittStructurePolys>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(p, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto sp = std::make_shared<WittStructurePolys>();
  sp->p = p;
  sp->n = n;
  size_t nv2 = 2 * size_t(n);
  std::vector<ZPoly> sum_target, mul_target, neg_target;
  for (uint32_t i = 0; i < n; ++i) {
    ZPoly wx = detail::ghost_poly(p, i, nv2, 0);
    ZPoly wy = detail::ghost_poly(p, i, nv2, n);
    sp->ghost2.push_back(wx);
    sum_target.push_back(wx + wy);
    mul_target.push_back(wx * wy);
    ZPoly w1 = detail::ghost_poly(p, i, n, 0);
    sp->ghost1.push_back(w1);
    neg_target.push_back(ZPoly(n) - w1);
  }
  sp->add = detail::solve_ghost_recursion(p, n, sum_target);
  sp->mul = detail::solve_ghost_recursion(p, n, mul_target);
  sp->neg = detail::solve_ghost_recursion(p, n, neg_target);
  cache[key] = sp;
  return sp;
}

// Length-n Witt vector over F_{p^d}; coordinates a[0..n-1].
struct WittElem {
  std::vector<FqElem> a;

  bool operator==(const WittElem& o) const { return a == o.a; }
  bool operator!=(const WittElem& o) const { return a != o.a; }
  bool operator<(const WittElem& o) const { return a < o.a; }
};

class WittContext;
using WCtxPtr = std::shared_ptr<const WittContext>;

class WittContext {
 public:
  static WCtxPtr make(FqCtxPtr field, uint32_t n) {
    if (!field || n < 1) throw PreconditionError("WittContext: need field and n >= 1");
    return WCtxPtr(new WittContext(std::move(field), n));
  }

  static WCtxPtr make(uint32_t p, uint32_t d, uint32_t n) {
    return make(FqContext::make(p, d), n);
  }

  const FqContext& field() const { return *field_; }
  const FqCtxPtr& field_ptr() const { return field_; }
  uint32_t p() const { return field_->p(); }
  uint32_t d() const { return field_->d(); }
  uint32_t n() const { return n_; }

  bool same(const WittContext& o) const {
    return n_ == o.n_ && field_->same(*o.field_);
  }

  // Card of W_n(F_q) = q^n; only valid when it fits 64 bits (desk scale).
  uint64_t card() const {
    uint64_t r = 1;
    for (uint32_t i = 0; i < n_; ++i) r *= field_->q();
    return r;
  }

  WittElem zero() const {
    return WittElem{std::vector<FqElem>(n_, field_->zero())};
  }

  WittElem one() const { return teichmuller(field_->one()); }

  WittElem teichmuller(const FqElem& c) const {
    WittElem r = zero();
    r.a[0] = c;
    return r;
  }

  bool is_zero(const WittElem& x) const {
    for (const auto& c : x.a)
      if (!field_->is_zero(c)) return false;
    return true;
  }

  WittElem add(const WittElem& x, const WittElem& y) const {
    return eval2(tables().add_ev, x, y);
  }

  WittElem neg(const WittElem& x) const { return eval1(tables().neg_ev, x); }

  WittElem sub(const WittElem& x, const WittElem& y) const {
    return add(x, neg(y));
  }

  WittElem mul(const WittElem& x, const WittElem& y) const {
    return eval2(tables().mul_ev, x, y);
  }

  WittElem from_int(int64_t m) const {
    bool negate = m < 0;
    uint64_t v = negate ? uint64_t(-(m + 1)) + 1 : uint64_t(m);
    WittElem acc = zero(), base = one();
    while (v) {
      if (v & 1) acc = add(acc, base);
      if (v >>= 1) base = add(base, base);
    }
    return negate ? neg(acc) : acc;
  }

  // sigma: componentwise p-th power (k perfect); a ring automorphism.
  WittElem frobenius(const WittElem& x) const {
    WittElem r = x;
    for (auto& c : r.a) c = field_->frobenius(c);
    return r;
  }

  WittElem frobenius_pow(const WittElem& x, int64_t s) const {
    WittElem r = x;
    for (auto& c : r.a) c = field_->frobenius_pow(c, s);
    return r;
  }

  WittElem verschiebung(const WittElem& x) const {
    WittElem r = zero();
    for (uint32_t i = 1; i < n_; ++i) r.a[i] = x.a[i - 1];
    return r;
  }

  // p^j x = V^j sigma^j x; in coordinates a shift with componentwise p^j powers.
  WittElem mul_pow_p(const WittElem& x, uint32_t j) const {
    if (j >= n_) return zero();
    WittElem r = zero();
    for (uint32_t i = j; i < n_; ++i)
      r.a[i] = field_->frobenius_pow(x.a[i - j], int64_t(j));
    return r;
  }

  // p-adic valuation; val(0) = n.
  uint32_t val(const WittElem& x) const {
    for (uint32_t i = 0; i < n_; ++i)
      if (!field_->is_zero(x.a[i])) return i;
    return n_;
  }

  bool is_unit(const WittElem& x) const { return !field_->is_zero(x.a[0]); }

  // Exact division by p^j; canonical representative (top j coords zero).
  // Defined only when val(x) >= j.
  WittElem div_pow_p(const WittElem& x, uint32_t j) const {
    if (j == 0) return x;
    if (val(x) < j) throw PreconditionError("div_pow_p: not divisible");
    WittElem r = zero();
    for (uint32_t i = 0; i + j < n_; ++i)
      r.a[i] = field_->frobenius_pow(x.a[i + j], -int64_t(j));
    return r;
  }

  // Reduce mod p^e (Witt truncation): zero out coordinates >= e.
  WittElem reduce_mod_pe(const WittElem& x, uint32_t e) const {
    WittElem r = x;
    for (uint32_t i = e; i < n_; ++i) r.a[i] = field_->zero();
    return r;
  }

  WittElem inv(const WittElem& x) const {
    if (!is_unit(x)) throw PreconditionError("inverse of a non-unit in W_n");
    WittElem y = teichmuller(field_->inv(x.a[0]));
    WittElem two = from_int(2);
    for (uint32_t i = 0; i <= n_ + 1; ++i) {
      WittElem xy = mul(x, y);
      if (xy == one()) return y;
      y = mul(y, sub(two, xy));
    }
    throw PreconditionError("inv: Newton iteration failed");  // unreachable
  }

  // x = p^val * unit; returns the canonical unit part (top coords of the
  // divided representative are zero). Undefined for x = 0.
  WittElem unit_part(const WittElem& x) const { return div_pow_p(x, val(x)); }

  // --- unramified coordinates -------------------------------------------
  // W_n(F_{p^d}) is a free Z/p^n-module on teich(g)^t, t < d, where g is the
  // residue generator. Used to flatten semilinear systems to Z/p^n.

  std::vector<uint64_t> to_unram(const WittElem& x) const {
    std::vector<uint64_t> out(d(), 0);
    WittElem cur = x;
    uint64_t pj = 1;
    for (uint32_t j = 0; j < n_; ++j) {
      FqElem digit = cur.a[0];
      WittElem sub_acc = zero();
      for (uint32_t t = 0; t < d(); ++t) {
        uint32_t coeff = digit.c[t];
        out[t] += pj * coeff;
        if (coeff)
          sub_acc = add(sub_acc, mul(from_int(coeff), teich_basis(t)));
      }
      cur = div_pow_p(sub(cur, sub_acc), 1);
      pj *= p();
    }
    return out;
  }

  WittElem from_unram(const std::vector<uint64_t>& coords) const {
    WittElem r = zero();
    for (uint32_t t = 0; t < d(); ++t)
      r = add(r, mul(from_int(int64_t(coords[t] % pn())), teich_basis(t)));
    return r;
  }

  uint64_t pn() const {
    uint64_t r = 1;
    for (uint32_t i = 0; i < n_; ++i) r *= p();
    return r;
  }

  // Enumeration over all q^n elements.
  uint64_t index_of(const WittElem& x) const {
    uint64_t idx = 0;
    for (uint32_t i = n_; i-- > 0;)
      idx = idx * field_->q() + field_->index_of(x.a[i]);
    return idx;
  }

  WittElem from_index(uint64_t idx) const {
    WittElem r = zero();
    for (uint32_t i = 0; i < n_; ++i) {
      r.a[i] = field_->from_index(idx % field_->q());
      idx /= field_->q();
    }
    return r;
  }

 private:
  // Structure polynomials with coefficients reduced mod p, flattened for
  // evaluation.
  struct EvalTerm {
    uint32_t coeff;
    std::vector<std::pair<uint32_t, uint32_t>> factors;  // (var, exp)
  };
  using EvalPoly = std::vector<EvalTerm>;

  struct Tables {
    std::vector<EvalPoly> add_ev, mul_ev, neg_ev;
  };

  WittContext(FqCtxPtr field, uint32_t n) : field_(std::move(field)), n_(n) {}

  static EvalPoly reduce_poly(const ZPoly& poly, uint32_t p) {
    EvalPoly out;
    for (const auto& [e, c] : poly.terms()) {
      mpz_class cm = c % p;
      if (cm < 0) cm += p;
      uint32_t cc = uint32_t(cm.get_ui());
      if (!cc) continue;
      EvalTerm t;
      t.coeff = cc;
      for (uint32_t v = 0; v < e.size(); ++v)
        if (e[v]) t.factors.emplace_back(v, e[v]);
      out.push_back(std::move(t));
    }
    return out;
  }

  const Tables& tables() const {
    std::call_once(tables_once_, [this]() {
      auto sp = witt_structure_polys(p(), n_);
      auto t = std::make_unique<Tables>();
      for (uint32_t i = 0; i < n_; ++i) {
        t->add_ev.push_back(reduce_poly(sp->add[i], p()));
        t->mul_ev.push_back(reduce_poly(sp->mul[i], p()));
        t->neg_ev.push_back(reduce_poly(sp->neg[i], p()));
      }
      tables_ = std::move(t);
    });
    return *tables_;
  }

  const WittElem& teich_basis(uint32_t t) const {
    std::call_once(basis_once_, [this]() {
      auto b = std::make_unique<std::vector<WittElem>>();
      WittElem w = one();
      WittElem g = teichmuller(field_->gen());
      for (uint32_t i = 0; i < d(); ++i) {
        b->push_back(w);
        w = mul(w, g);
      }
      teich_basis_ = std::move(b);
    });
    return (*teich_basis_)[t];
  }

  FqElem eval_terms(const EvalPoly& poly,
                    const std::vector<std::vector<FqElem>>& powers) const {
    FqElem acc = field_->zero();
    for (const auto& t : poly) {
      FqElem prod = field_->from_int(int64_t(t.coeff));
      for (auto [v, e] : t.factors) prod = field_->mul(prod, powers[v][e]);
      acc = field_->add(acc, prod);
    }
    return acc;
  }

  std::vector<std::vector<FqElem>> power_table(const std::vector<FqElem>& args) const {
    uint64_t maxe = 1;
    for (uint32_t i = 0; i + 1 < n_; ++i) maxe *= p();
    std::vector<std::vector<FqElem>> powers(args.size());
    for (size_t v = 0; v < args.size(); ++v) {
      powers[v].resize(size_t(maxe) + 1);
      powers[v][0] = field_->one();
      for (uint64_t e = 1; e <= maxe; ++e)
        powers[v][e] = field_->mul(powers[v][e - 1], args[v]);
    }
    return powers;
  }

  WittElem eval2(const std::vector<EvalPoly>& polys, const WittElem& x,
                 const WittElem& y) const {
    std::vector<FqElem> args;
    args.reserve(2 * n_);
    for (const auto& c : x.a) args.push_back(c);
    for (const auto& c : y.a) args.push_back(c);
    auto powers = power_table(args);
    WittElem r = zero();
    for (uint32_t i = 0; i < n_; ++i) r.a[i] = eval_terms(polys[i], powers);
    return r;
  }

  WittElem eval1(const std::vector<EvalPoly>& polys, const WittElem& x) const {
    auto powers = power_table(x.a);
    WittElem r = zero();
    for (uint32_t i = 0; i < n_; ++i) r.a[i] = eval_terms(polys[i], powers);
    return r;
  }

  FqCtxPtr field_;
  uint32_t n_;
  mutable std::once_flag tables_once_;
  mutable std::unique_ptr<Tables> tables_;
  mutable std::once_flag basis_once_;
  mutable std::unique_ptr<std::vector<WittElem>> teich_basis_;
};

}  // namespace gaugeforge
