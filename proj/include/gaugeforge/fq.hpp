#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "gaugeforge/errors.hpp"

namespace gaugeforge {

// Element of F_{p^d} in the polynomial basis 1, x, ..., x^{d-1} modulo a
// fixed monic irreducible polynomial. Plain data; all arithmetic lives on
// FqContext so elements stay cheap to copy and enumerate.
struct FqElem {
  std::vector<uint32_t> c;

  bool operator==(const FqElem& o) const { return c == o.c; }
  bool operator!=(const FqElem& o) const { return c != o.c; }
  bool operator<(const FqElem& o) const { return c < o.c; }
};

class FqContext;
using FqCtxPtr = std::shared_ptr<const FqContext>;

class FqContext {
 public:
  // Default defining polynomial: lexicographically smallest monic irreducible
  // of degree d over F_p. Deterministic across runs.
  static FqCtxPtr make(uint32_t p, uint32_t d) {
    return make(p, d, default_minpoly(p, d));
  }

  // minpoly holds c_0..c_d with c_d = 1; must be irreducible over F_p.
  static FqCtxPtr make(uint32_t p, uint32_t d, std::vector<uint32_t> minpoly) {
    if (p < 2 || !is_prime(p)) throw PreconditionError("p must be prime");
    if (d < 1) throw PreconditionError("extension degree must be >= 1");
    if (minpoly.size() != d + 1 || minpoly[d] != 1)
      throw PreconditionError("defining polynomial must be monic of degree d");
    for (auto& e : minpoly) e %= p;
    if (!poly_irreducible(p, minpoly))
      throw PreconditionError("defining polynomial is not irreducible");
    return FqCtxPtr(new FqContext(p, d, std::move(minpoly)));
  }

  uint32_t p() const { return p_; }
  uint32_t d() const { return d_; }
  const std::vector<uint32_t>& minpoly() const { return minpoly_; }

  uint64_t q() const {
    uint64_t r = 1;
    for (uint32_t i = 0; i < d_; ++i) r *= p_;
    return r;
  }

  bool same(const FqContext& o) const {
    return p_ == o.p_ && d_ == o.d_ && minpoly_ == o.minpoly_;
  }

  FqElem zero() const { return FqElem{std::vector<uint32_t>(d_, 0)}; }

  FqElem one() const { return from_int(1); }

  FqElem from_int(int64_t m) const {
    FqElem r = zero();
    int64_t v = m % int64_t(p_);
    if (v < 0) v += p_;
    r.c[0] = uint32_t(v);
    return r;
  }

  // Class of x; equals from_int(0)+x only meaningful for d >= 2, but defined
  // for d == 1 as the root of the degree-1 minpoly (i.e. -c_0).
  FqElem gen() const {
    if (d_ == 1) return from_int(-int64_t(minpoly_[0]));
    FqElem r = zero();
    r.c[1] = 1;
    return r;
  }

  bool is_zero(const FqElem& a) const {
    for (auto v : a.c)
      if (v) return false;
    return true;
  }

  FqElem add(const FqElem& a, const FqElem& b) const {
    FqElem r = a;
    for (uint32_t i = 0; i < d_; ++i) r.c[i] = (r.c[i] + b.c[i]) % p_;
    return r;
  }

  FqElem neg(const FqElem& a) const {
    FqElem r = a;
    for (uint32_t i = 0; i < d_; ++i) r.c[i] = (p_ - r.c[i]) % p_;
    return r;
  }

  FqElem sub(const FqElem& a, const FqElem& b) const { return add(a, neg(b)); }

  FqElem mul(const FqElem& a, const FqElem& b) const {
    std::vector<uint64_t> prod(2 * d_ - 1, 0);
    for (uint32_t i = 0; i < d_; ++i) {
      if (!a.c[i]) continue;
      for (uint32_t j = 0; j < d_; ++j)
        prod[i + j] = (prod[i + j] + uint64_t(a.c[i]) * b.c[j]) % p_;
    }
    // reduce mod minpoly: x^d = -(c_0 + ... + c_{d-1} x^{d-1})
    for (uint32_t k = 2 * d_ - 2; k + 1 > d_; --k) {
      uint64_t t = prod[k];
      if (!t) continue;
      prod[k] = 0;
      for (uint32_t j = 0; j < d_; ++j) {
        uint64_t s = t * (p_ - minpoly_[j]) % p_;
        prod[k - d_ + j] = (prod[k - d_ + j] + s) % p_;
      }
    }
    FqElem r = zero();
    for (uint32_t i = 0; i < d_; ++i) r.c[i] = uint32_t(prod[i]);
    return r;
  }

  FqElem scalar_mul(uint64_t s, const FqElem& a) const {
    FqElem r = a;
    for (uint32_t i = 0; i < d_; ++i)
      r.c[i] = uint32_t(uint64_t(r.c[i]) * (s % p_) % p_);
    return r;
  }

  FqElem pow(const FqElem& a, uint64_t e) const {
    FqElem r = one(), b = a;
    while (e) {
      if (e & 1) r = mul(r, b);
      b = mul(b, b);
      e >>= 1;
    }
    return r;
  }

  FqElem inv(const FqElem& a) const {
    if (is_zero(a)) throw PreconditionError("inverse of zero in F_q");
    return pow(a, q() - 2);
  }

  FqElem frobenius(const FqElem& a) const { return pow(a, p_); }

  // sigma^s with sigma : x -> x^p; s may be negative (sigma has order d).
  FqElem frobenius_pow(const FqElem& a, int64_t s) const {
    int64_t e = s % int64_t(d_);
    if (e < 0) e += d_;
    FqElem r = a;
    for (int64_t i = 0; i < e; ++i) r = frobenius(r);
    return r;
  }

  // Enumeration of all q elements, index in [0, q).
  uint64_t index_of(const FqElem& a) const {
    uint64_t idx = 0;
    for (uint32_t i = d_; i-- > 0;) idx = idx * p_ + a.c[i];
    return idx;
  }

  FqElem from_index(uint64_t idx) const {
    FqElem r = zero();
    for (uint32_t i = 0; i < d_; ++i) {
      r.c[i] = uint32_t(idx % p_);
      idx /= p_;
    }
    return r;
  }

  static bool is_prime(uint32_t n) {
    if (n < 2) return false;
    for (uint32_t f = 2; uint64_t(f) * f <= n; ++f)
      if (n % f == 0) return false;
    return true;
  }

 private:
  FqContext(uint32_t p, uint32_t d, std::vector<uint32_t> minpoly)
      : p_(p), d_(d), minpoly_(std::move(minpoly)) {}

  // --- polynomial arithmetic over F_p on coefficient vectors (low..high) ---

  static std::vector<uint32_t> poly_trim(std::vector<uint32_t> a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
    return a;
  }

  static std::vector<uint32_t> poly_mod(uint32_t p, std::vector<uint32_t> a,
                                        const std::vector<uint32_t>& m) {
    a = poly_trim(std::move(a));
    auto mm = poly_trim(m);
    if (mm.empty()) throw PreconditionError("poly_mod by zero");
    uint32_t lead_inv = mod_inv(p, mm.back());
    while (a.size() >= mm.size()) {
      uint64_t c = uint64_t(a.back()) * lead_inv % p;
      size_t shift = a.size() - mm.size();
      for (size_t i = 0; i < mm.size(); ++i) {
        uint64_t s = c * mm[i] % p;
        a[shift + i] = uint32_t((a[shift + i] + p - s) % p);
      }
      a = poly_trim(std::move(a));
    }
    return a;
  }

  static std::vector<uint32_t> poly_mulmod(uint32_t p,
                                           const std::vector<uint32_t>& a,
                                           const std::vector<uint32_t>& b,
                                           const std::vector<uint32_t>& m) {
    if (a.empty() || b.empty()) return {};
    std::vector<uint32_t> prod(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t j = 0; j < b.size(); ++j)
        prod[i + j] = uint32_t((prod[i + j] + uint64_t(a[i]) * b[j]) % p);
    return poly_mod(p, std::move(prod), m);
  }

  static std::vector<uint32_t> poly_powmod_xq(uint32_t p, uint64_t e,
                                              const std::vector<uint32_t>& m) {
    // x^(p^e) mod m by repeated p-th powering
    std::vector<uint32_t> x = poly_mod(p, {0, 1}, m);
    std::vector<uint32_t> r = x;
    for (uint64_t k = 0; k < e; ++k) {
      // r = r^p mod m
      std::vector<uint32_t> acc = {1};
      std::vector<uint32_t> base = r;
      uint32_t exp = p;
      while (exp) {
        if (exp & 1) acc = poly_mulmod(p, acc, base, m);
        base = poly_mulmod(p, base, base, m);
        exp >>= 1;
      }
      r = std::move(acc);
    }
    return r;
  }

  static std::vector<uint32_t> poly_gcd(uint32_t p, std::vector<uint32_t> a,
                                        std::vector<uint32_t> b) {
    a = poly_trim(std::move(a));
    b = poly_trim(std::move(b));
    while (!b.empty()) {
      auto r = poly_mod(p, a, b);
      a = std::move(b);
      b = std::move(r);
    }
    return a;
  }

  static uint32_t mod_inv(uint32_t p, uint32_t a) {
    // p prime, a != 0 mod p
    uint32_t r = 1, b = a % p, e = p - 2;
    while (e) {
      if (e & 1) r = uint32_t(uint64_t(r) * b % p);
      b = uint32_t(uint64_t(b) * b % p);
      e >>= 1;
    }
    return r;
  }

  // Rabin irreducibility test.
  static bool poly_irreducible(uint32_t p, const std::vector<uint32_t>& m) {
    uint32_t d = uint32_t(m.size()) - 1;
    if (d == 0) return false;
    if (d == 1) return true;
    // x^(p^d) == x mod m
    auto xqd = poly_powmod_xq(p, d, m);
    auto x = poly_mod(p, {0, 1}, m);
    {
      auto diff = xqd;
      diff.resize(std::max(diff.size(), x.size()), 0);
      for (size_t i = 0; i < x.size(); ++i) diff[i] = (diff[i] + p - x[i]) % p;
      if (!poly_trim(diff).empty()) return false;
    }
    // gcd(x^(p^(d/r)) - x, m) == const for every prime r | d
    for (uint32_t r = 2; r <= d; ++r) {
      if (d % r != 0 || !is_prime(r)) continue;
      auto xe = poly_powmod_xq(p, d / r, m);
      auto diff = xe;
      diff.resize(std::max(diff.size(), x.size()), 0);
      for (size_t i = 0; i < x.size(); ++i) diff[i] = (diff[i] + p - x[i]) % p;
      auto g = poly_gcd(p, m, poly_trim(diff));
      if (g.size() > 1) return false;
    }
    return true;
  }

  static std::vector<uint32_t> default_minpoly(uint32_t p, uint32_t d) {
    if (!is_prime(p)) throw PreconditionError("p must be prime");
    if (d == 0) throw PreconditionError("d must be >= 1");
    std::vector<uint32_t> m(d + 1, 0);
    m[d] = 1;
    // iterate lower coefficients as a base-p counter
    uint64_t total = 1;
    for (uint32_t i = 0; i < d; ++i) total *= p;
    for (uint64_t idx = 0; idx < total; ++idx) {
      uint64_t t = idx;
      for (uint32_t i = 0; i < d; ++i) {
        m[i] = uint32_t(t % p);
        t /= p;
      }
      if (poly_irreducible(p, m)) return m;
    }
    throw PreconditionError("no irreducible polynomial found");  // unreachable
  }

  uint32_t p_, d_;
  std::vector<uint32_t> minpoly_;
};

}  // namespace gaugeforge
