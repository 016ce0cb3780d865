#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gaugeforge/fq.hpp"

namespace gaugeforge {

// Table-backed F_q arithmetic on packed element indices, for the dense
// linear algebra of the de Rham layer. Elements are their enumeration
// indices in [0, q); 0 is the zero element and tables are precomputed once.
class FqTab {
 public:
  explicit FqTab(FqCtxPtr ctx) : ctx_(std::move(ctx)), q_(uint32_t(ctx_->q())) {
    if (ctx_->q() > 4096) throw PreconditionError("FqTab: field too large for tables");
    add_.resize(size_t(q_) * q_);
    mul_.resize(size_t(q_) * q_);
    neg_.resize(q_);
    inv_.resize(q_, 0);
    frob_.resize(q_);
    frobinv_.resize(q_);
    for (uint32_t a = 0; a < q_; ++a) {
      FqElem ea = ctx_->from_index(a);
      neg_[a] = uint32_t(ctx_->index_of(ctx_->neg(ea)));
      frob_[a] = uint32_t(ctx_->index_of(ctx_->frobenius(ea)));
      frobinv_[a] = uint32_t(ctx_->index_of(ctx_->frobenius_pow(ea, -1)));
      if (a) inv_[a] = uint32_t(ctx_->index_of(ctx_->inv(ea)));
      for (uint32_t b = 0; b < q_; ++b) {
        FqElem eb = ctx_->from_index(b);
        add_[size_t(a) * q_ + b] = uint32_t(ctx_->index_of(ctx_->add(ea, eb)));
        mul_[size_t(a) * q_ + b] = uint32_t(ctx_->index_of(ctx_->mul(ea, eb)));
      }
    }
  }

  const FqCtxPtr& ctx() const { return ctx_; }
  uint32_t q() const { return q_; }
  uint32_t zero() const { return 0; }
  uint32_t one() const { return uint32_t(ctx_->index_of(ctx_->one())); }
  uint32_t add(uint32_t a, uint32_t b) const { return add_[size_t(a) * q_ + b]; }
  uint32_t mul(uint32_t a, uint32_t b) const { return mul_[size_t(a) * q_ + b]; }
  uint32_t sub(uint32_t a, uint32_t b) const { return add(a, neg_[b]); }
  uint32_t neg(uint32_t a) const { return neg_[a]; }
  uint32_t inv(uint32_t a) const {
    if (!a) throw PreconditionError("FqTab: inverse of zero");
    return inv_[a];
  }
  uint32_t frob(uint32_t a) const { return frob_[a]; }
  uint32_t frobinv(uint32_t a) const { return frobinv_[a]; }
  uint32_t pow_p(uint32_t a) const { return frob_[a]; }

  uint32_t pack(const FqElem& e) const { return uint32_t(ctx_->index_of(e)); }
  FqElem unpack(uint32_t a) const { return ctx_->from_index(a); }

 private:
  FqCtxPtr ctx_;
  uint32_t q_;
  std::vector<uint32_t> add_, mul_, neg_, inv_, frob_, frobinv_;
};

// Dense matrix of packed field elements; the map x -> M x on columns.
struct TMat {
  size_t rows = 0, cols = 0;
  std::vector<uint32_t> e;

  uint32_t& at(size_t i, size_t j) { return e[i * cols + j]; }
  uint32_t at(size_t i, size_t j) const { return e[i * cols + j]; }
  bool operator==(const TMat& o) const {
    return rows == o.rows && cols == o.cols && e == o.e;
  }
};

inline TMat tmat_zero(size_t r, size_t c) { return TMat{r, c, std::vector<uint32_t>(r * c, 0)}; }

inline TMat tmat_identity(const FqTab& F, size_t r) {
  TMat m = tmat_zero(r, r);
  for (size_t i = 0; i < r; ++i) m.at(i, i) = F.one();
  return m;
}

inline TMat tmat_mul(const FqTab& F, const TMat& a, const TMat& b) {
  TMat r = tmat_zero(a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t k = 0; k < a.cols; ++k) {
      uint32_t s = a.at(i, k);
      if (!s) continue;
      const uint32_t* brow = &b.e[k * b.cols];
      uint32_t* rrow = &r.e[i * b.cols];
      for (size_t j = 0; j < b.cols; ++j)
        if (brow[j]) rrow[j] = F.add(rrow[j], F.mul(s, brow[j]));
    }
  return r;
}

inline std::vector<uint32_t> tmat_apply(const FqTab& F, const TMat& m,
                                        const std::vector<uint32_t>& x) {
  std::vector<uint32_t> y(m.rows, 0);
  for (size_t i = 0; i < m.rows; ++i) {
    const uint32_t* row = &m.e[i * m.cols];
    uint32_t acc = 0;
    for (size_t j = 0; j < m.cols; ++j)
      if (row[j] && x[j]) acc = F.add(acc, F.mul(row[j], x[j]));
    y[i] = acc;
  }
  return y;
}

// In-place reduced row echelon; returns pivot column indices.
inline std::vector<size_t> tmat_rref(const FqTab& F, TMat& m) {
  std::vector<size_t> pivots;
  size_t lead = 0;
  for (size_t c = 0; c < m.cols && lead < m.rows; ++c) {
    size_t piv = lead;
    while (piv < m.rows && !m.at(piv, c)) ++piv;
    if (piv == m.rows) continue;
    if (piv != lead)
      for (size_t j = 0; j < m.cols; ++j) std::swap(m.at(lead, j), m.at(piv, j));
    uint32_t inv = F.inv(m.at(lead, c));
    if (inv != F.one()) {
      uint32_t* lrow = &m.e[lead * m.cols];
      for (size_t j = c; j < m.cols; ++j)
        if (lrow[j]) lrow[j] = F.mul(inv, lrow[j]);
    }
    const uint32_t* lrow = &m.e[lead * m.cols];
    for (size_t i = 0; i < m.rows; ++i) {
      if (i == lead) continue;
      uint32_t s = m.at(i, c);
      if (!s) continue;
      uint32_t ns = F.neg(s);
      uint32_t* irow = &m.e[i * m.cols];
      for (size_t j = c; j < m.cols; ++j)
        if (lrow[j]) irow[j] = F.add(irow[j], F.mul(ns, lrow[j]));
    }
    pivots.push_back(c);
    ++lead;
  }
  return pivots;
}

inline size_t tmat_rank(const FqTab& F, TMat m) { return tmat_rref(F, m).size(); }

// Basis of { x : M x = 0 } as columns.
inline TMat tmat_kernel(const FqTab& F, TMat m) {
  auto pivots = tmat_rref(F, m);
  std::vector<bool> is_pivot(m.cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<size_t> free_cols;
  for (size_t c = 0; c < m.cols; ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  TMat ker = tmat_zero(m.cols, free_cols.size());
  for (size_t t = 0; t < free_cols.size(); ++t) {
    size_t fc = free_cols[t];
    ker.at(fc, t) = F.one();
    for (size_t r = 0; r < pivots.size(); ++r)
      ker.at(pivots[r], t) = F.neg(m.at(r, fc));
  }
  return ker;
}

// Solve M X = B for all columns of B at once (one elimination); any column
// that is inconsistent yields nullopt.
inline std::optional<TMat> tmat_solve_many(const FqTab& F, const TMat& m, const TMat& b) {
  size_t rows = m.rows, cols = m.cols, extra = b.cols;
  TMat aug = tmat_zero(rows, cols + extra);
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) aug.at(i, j) = m.at(i, j);
    for (size_t j = 0; j < extra; ++j) aug.at(i, cols + j) = b.at(i, j);
  }
  std::vector<size_t> pivots;
  size_t lead = 0;
  for (size_t c = 0; c < cols && lead < rows; ++c) {  // pivots only in the M block
    size_t piv = lead;
    while (piv < rows && !aug.at(piv, c)) ++piv;
    if (piv == rows) continue;
    if (piv != lead)
      for (size_t j = 0; j < aug.cols; ++j) std::swap(aug.at(lead, j), aug.at(piv, j));
    uint32_t inv = F.inv(aug.at(lead, c));
    uint32_t* lrow = &aug.e[lead * aug.cols];
    if (inv != F.one())
      for (size_t j = c; j < aug.cols; ++j)
        if (lrow[j]) lrow[j] = F.mul(inv, lrow[j]);
    for (size_t i = 0; i < rows; ++i) {
      if (i == lead) continue;
      uint32_t s = aug.at(i, c);
      if (!s) continue;
      uint32_t ns = F.neg(s);
      uint32_t* irow = &aug.e[i * aug.cols];
      for (size_t j = c; j < aug.cols; ++j)
        if (lrow[j]) irow[j] = F.add(irow[j], F.mul(ns, lrow[j]));
    }
    pivots.push_back(c);
    ++lead;
  }
  // rows below the pivot count must vanish on the B block
  for (size_t i = pivots.size(); i < rows; ++i)
    for (size_t j = 0; j < aug.cols; ++j)
      if (aug.at(i, j)) {
        if (j >= cols) return std::nullopt;  // inconsistent column
        break;
      }
  TMat x = tmat_zero(cols, extra);
  for (size_t r = 0; r < pivots.size(); ++r)
    for (size_t j = 0; j < extra; ++j) x.at(pivots[r], j) = aug.at(r, cols + j);
  return x;
}

inline std::optional<std::vector<uint32_t>> tmat_solve(const FqTab& F, const TMat& m,
                                                       const std::vector<uint32_t>& b) {
  TMat bb = tmat_zero(b.size(), 1);
  for (size_t i = 0; i < b.size(); ++i) bb.at(i, 0) = b[i];
  auto x = tmat_solve_many(F, m, bb);
  if (!x) return std::nullopt;
  std::vector<uint32_t> out(m.cols);
  for (size_t i = 0; i < m.cols; ++i) out[i] = x->at(i, 0);
  return out;
}

// Incremental echelon set: feed vectors one at a time; insert() reduces the
// vector against the current echelon rows and keeps it when independent.
class EchelonSet {
 public:
  EchelonSet(const FqTab& F, size_t ambient) : F_(F), ambient_(ambient) {}

  size_t rank() const { return rows_.size(); }

  // Returns true when the vector was independent (and absorbed).
  bool insert(std::vector<uint32_t> v) {
    reduce(v);
    size_t lead = ambient_;
    for (size_t i = 0; i < ambient_; ++i)
      if (v[i]) {
        lead = i;
        break;
      }
    if (lead == ambient_) return false;
    uint32_t inv = F_.inv(v[lead]);
    if (inv != F_.one())
      for (auto& x : v) x = x ? F_.mul(inv, x) : 0;
    rows_.push_back(std::move(v));
    leads_.push_back(lead);
    return true;
  }

  bool contains(std::vector<uint32_t> v) const {
    reduce(v);
    for (auto x : v)
      if (x) return false;
    return true;
  }

 private:
  void reduce(std::vector<uint32_t>& v) const {
    for (size_t r = 0; r < rows_.size(); ++r) {
      uint32_t s = v[leads_[r]];
      if (!s) continue;
      uint32_t ns = F_.neg(s);
      const auto& row = rows_[r];
      for (size_t j = leads_[r]; j < ambient_; ++j)
        if (row[j]) v[j] = F_.add(v[j], F_.mul(ns, row[j]));
    }
  }

  const FqTab& F_;
  size_t ambient_;
  std::vector<std::vector<uint32_t>> rows_;
  std::vector<size_t> leads_;
};

// Indices of columns of `cand` that extend the span of `base`'s columns.
inline std::vector<size_t> tmat_extend_basis(const FqTab& F, const TMat& base,
                                             const TMat& cand) {
  size_t amb = base.rows ? base.rows : cand.rows;
  EchelonSet ech(F, amb);
  for (size_t j = 0; j < base.cols; ++j) {
    std::vector<uint32_t> v(amb);
    for (size_t i = 0; i < amb; ++i) v[i] = base.at(i, j);
    ech.insert(std::move(v));
  }
  std::vector<size_t> chosen;
  for (size_t j = 0; j < cand.cols; ++j) {
    std::vector<uint32_t> v(amb);
    for (size_t i = 0; i < amb; ++i) v[i] = cand.at(i, j);
    if (ech.insert(std::move(v))) chosen.push_back(j);
  }
  return chosen;
}

}  // namespace gaugeforge
