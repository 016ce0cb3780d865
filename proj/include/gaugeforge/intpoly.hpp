#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <vector>

#include "gaugeforge/errors.hpp"

namespace gaugeforge {

// Multivariate polynomial over Z, dense exponent vectors, sparse terms.
// Only used for the one-time Witt structure-polynomial computation and the
// ghost-identity oracle, so clarity beats speed.
class ZPoly {
 public:
  using Expo = std::vector<uint32_t>;

  explicit ZPoly(size_t nvars = 0) : nvars_(nvars) {}

  static ZPoly constant(size_t nvars, const mpz_class& c) {
    ZPoly r(nvars);
    if (c != 0) r.terms_[Expo(nvars, 0)] = c;
    return r;
  }

  static ZPoly variable(size_t nvars, size_t i, uint32_t exp = 1) {
    ZPoly r(nvars);
    Expo e(nvars, 0);
    e[i] = exp;
    r.terms_[e] = 1;
    return r;
  }

  size_t nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Expo, mpz_class>& terms() const { return terms_; }

  bool operator==(const ZPoly& o) const { return terms_ == o.terms_; }

  ZPoly& operator+=(const ZPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }

  ZPoly& operator-=(const ZPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }

  friend ZPoly operator+(ZPoly a, const ZPoly& b) { return a += b; }
  friend ZPoly operator-(ZPoly a, const ZPoly& b) { return a -= b; }

  friend ZPoly operator*(const ZPoly& a, const ZPoly& b) {
    ZPoly r(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Expo e = ea;
        for (size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }

  ZPoly& operator*=(const mpz_class& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  ZPoly pow(uint64_t e) const {
    ZPoly r = constant(nvars_, 1);
    ZPoly b = *this;
    while (e) {
      if (e & 1) r = r * b;
      if (e >>= 1) b = b * b;
    }
    return r;
  }

  // Exact division by an integer; throws if any coefficient is not divisible.
  ZPoly divexact(const mpz_class& s) const {
    ZPoly r(nvars_);
    for (const auto& [e, c] : terms_) {
      mpz_class q, rem;
      mpz_tdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), c.get_mpz_t(), s.get_mpz_t());
      if (rem != 0) throw PreconditionError("ZPoly::divexact: not divisible");
      r.terms_[e] = q;
    }
    return r;
  }

  // Substitute polynomials for the variables (args.size() == nvars()).
  ZPoly subst(const std::vector<ZPoly>& args) const {
    if (args.empty()) throw PreconditionError("ZPoly::subst: no arguments");
    size_t outvars = args[0].nvars();
    ZPoly r(outvars);
    for (const auto& [e, c] : terms_) {
      ZPoly t = constant(outvars, c);
      for (size_t i = 0; i < nvars_; ++i)
        if (e[i]) t = t * args[i].pow(e[i]);
      r += t;
    }
    return r;
  }

 private:
  void add_term(const Expo& e, const mpz_class& c) {
    if (c == 0) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
    } else {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  size_t nvars_;
  std::map<Expo, mpz_class> terms_;
};

}  // namespace gaugeforge
