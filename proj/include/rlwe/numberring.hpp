#pragma once
#include "ffield.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Rings of integers of the two families handled by the workbench:
//
//   FamilyRing  Z[zeta_p, sqrt(d)], integral basis
//                 1, zeta, ..., zeta^{p-2}, sqrt(d), zeta sqrt(d), ..., zeta^{p-2} sqrt(d)
//   CycloRing   Z[zeta_m], m a power of two, power basis 1, zeta, ..., zeta^{n-1}, n = m/2
//
// Elements are coefficient vectors over these bases, least degree first.
namespace rlwe::ring {

using ffield::FieldCtx;
using ffield::Fq2Elem;
using ffield::i64;
using ffield::u64;

struct FamilyRing
{
  u64 p = 0; // odd prime
  i64 d = 0; // squarefree, d = 2 or 3 mod 4, gcd(d, p) = 1
  u64 q = 0; // modulus, q = 1 mod p, (d/q) = -1

  u64 family_n() const { return p - 1; }
  std::size_t degree() const { return 2 * (p - 1); }
  bool operator==(const FamilyRing&) const = default;
};

struct CycloRing
{
  u64 m = 0;     // power of two
  u64 q = 0;     // q = 1 mod m
  u64 alpha = 0; // primitive m-th root of unity mod q

  std::size_t degree() const { return m / 2; }
  bool operator==(const CycloRing&) const = default;
};

using Ring = std::variant<FamilyRing, CycloRing>;

inline std::size_t
degree(const Ring& ring)
{
  return std::visit([](const auto& r) { return r.degree(); }, ring);
}

inline u64
modulus(const Ring& ring)
{
  return std::visit([](const auto& r) { return r.q; }, ring);
}

// Coefficients over the fixed integral basis; reduced into [0, q) when the
// element lives in R/qR, signed when it is a lattice point.
struct RingElem
{
  std::vector<i64> coeffs;

  RingElem() = default;
  explicit RingElem(std::size_t n)
    : coeffs(n, 0)
  {
  }
  explicit RingElem(std::vector<i64> c)
    : coeffs(std::move(c))
  {
  }

  std::size_t size() const { return coeffs.size(); }
  bool operator==(const RingElem&) const = default;
};

// A FamilyRing with the default prime above q: zeta_p -> the first element of
// order p found, sqrt(d) -> sqrt(d mod q).
inline FamilyRing
make_family_ring(u64 p, i64 d, u64 q)
{
  if (p < 3 || !ffield::is_prime(p)) {
    throw std::invalid_argument("FamilyRing: p must be an odd prime");
  }
  if (d <= 1) {
    throw std::invalid_argument("FamilyRing: d must be > 1");
  }
  if (q < 3 || !ffield::is_prime(q) || (q - 1) % p != 0) {
    throw std::invalid_argument("FamilyRing: q must be a prime with q = 1 mod p");
  }
  return { p, d, q };
}

// A CycloRing whose prime above q is the smallest-generator primitive m-th root.
inline CycloRing
make_cyclo_ring(u64 m, u64 q)
{
  if (m < 4 || (m & (m - 1)) != 0) {
    throw std::invalid_argument("CycloRing: m must be a power of two, at least 4");
  }
  if (q < 3 || !ffield::is_prime(q) || (q - 1) % m != 0) {
    throw std::invalid_argument("CycloRing: q must be a prime with q = 1 mod m");
  }
  return { m, q, ffield::find_order_element(m, q) };
}

// Field context realizing R/qR -> F_{q^2} for a FamilyRing.
inline FieldCtx
make_field_ctx(const FamilyRing& ring)
{
  FieldCtx ctx(ring.q, ring.d);
  ctx.set_alpha(ffield::find_order_element(ring.p, ring.q), ring.p);
  return ctx;
}

namespace detail {

inline void
check_lengths(const RingElem& x, const RingElem& y, std::size_t deg)
{
  if (x.size() != deg || y.size() != deg) {
    throw std::invalid_argument("ring_mul: operand length does not match ring degree " + std::to_string(deg));
  }
}

// Product in Z_q[X]/Phi_p(X) of two length-(p-1) vectors: cyclic product
// modulo X^p - 1, then fold X^{p-1} = -(1 + X + ... + X^{p-2}).
inline std::vector<u64>
mul_mod_phi_p(std::span<const u64> x, std::span<const u64> y, u64 p, u64 q)
{
  std::vector<u64> cyc(p, 0);
  const std::size_t n = p - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] == 0) {
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = (i + j) % p;
      cyc[k] = ffield::add_mod(cyc[k], ffield::mul_mod(x[i], y[j], q), q);
    }
  }
  std::vector<u64> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ffield::sub_mod(cyc[i], cyc[n], q);
  }
  return out;
}

inline std::vector<u64>
reduced(std::span<const i64> c, u64 q)
{
  std::vector<u64> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i] = ffield::reduce(c[i], q);
  }
  return out;
}

} // namespace detail

// Product in R/qR; output coefficients in [0, q).
inline RingElem
ring_mul(const RingElem& x, const RingElem& y, const FamilyRing& ring)
{
  const std::size_t n = ring.family_n();
  detail::check_lengths(x, y, ring.degree());
  const u64 q = ring.q;
  const auto xr = detail::reduced(x.coeffs, q);
  const auto yr = detail::reduced(y.coeffs, q);
  const std::span<const u64> x1(xr.data(), n), x2(xr.data() + n, n);
  const std::span<const u64> y1(yr.data(), n), y2(yr.data() + n, n);

  const auto a = detail::mul_mod_phi_p(x1, y1, ring.p, q);
  const auto b = detail::mul_mod_phi_p(x2, y2, ring.p, q);
  const auto c = detail::mul_mod_phi_p(x1, y2, ring.p, q);
  const auto e = detail::mul_mod_phi_p(x2, y1, ring.p, q);
  const u64 d_red = ffield::reduce(ring.d, q);

  RingElem out(ring.degree());
  for (std::size_t i = 0; i < n; ++i) {
    out.coeffs[i] = static_cast<i64>(ffield::add_mod(a[i], ffield::mul_mod(d_red, b[i], q), q));
    out.coeffs[n + i] = static_cast<i64>(ffield::add_mod(c[i], e[i], q));
  }
  return out;
}

// Negacyclic product modulo X^n + 1.
inline RingElem
ring_mul(const RingElem& x, const RingElem& y, const CycloRing& ring)
{
  const std::size_t n = ring.degree();
  detail::check_lengths(x, y, n);
  const u64 q = ring.q;
  const auto xr = detail::reduced(x.coeffs, q);
  const auto yr = detail::reduced(y.coeffs, q);
  std::vector<u64> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (xr[i] == 0) {
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const u64 prod = ffield::mul_mod(xr[i], yr[j], q);
      const std::size_t k = i + j;
      if (k < n) {
        acc[k] = ffield::add_mod(acc[k], prod, q);
      } else {
        acc[k - n] = ffield::sub_mod(acc[k - n], prod, q);
      }
    }
  }
  RingElem out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.coeffs[i] = static_cast<i64>(acc[i]);
  }
  return out;
}

inline RingElem
ring_mul(const RingElem& x, const RingElem& y, const Ring& ring)
{
  return std::visit([&](const auto& r) { return ring_mul(x, y, r); }, ring);
}

inline RingElem
ring_add(const RingElem& x, const RingElem& y, u64 q)
{
  if (x.size() != y.size()) {
    throw std::invalid_argument("ring_add: length mismatch");
  }
  RingElem out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.coeffs[i] = static_cast<i64>(ffield::add_mod(ffield::reduce(x.coeffs[i], q), ffield::reduce(y.coeffs[i], q), q));
  }
  return out;
}

inline RingElem
ring_sub(const RingElem& x, const RingElem& y, u64 q)
{
  if (x.size() != y.size()) {
    throw std::invalid_argument("ring_sub: length mismatch");
  }
  RingElem out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.coeffs[i] = static_cast<i64>(ffield::sub_mod(ffield::reduce(x.coeffs[i], q), ffield::reduce(y.coeffs[i], q), q));
  }
  return out;
}

// Adjusted canonical embedding. Every embedding of either family is complex,
// so the output is (sqrt2 Re sigma, sqrt2 Im sigma) per conjugate pair, in the
// order:
//   FamilyRing  sigma_{a,+}, sigma_{a,-} for a = 1 .. (p-1)/2, where
//               sigma_{a,e}: zeta -> exp(2 pi i a / p), sqrt(d) -> e sqrt(d)
//   CycloRing   sigma_a for odd a = 1, 3, ..., n-1, zeta -> exp(2 pi i a / m)
inline std::vector<double>
canonical_embed(const RingElem& x, const FamilyRing& ring)
{
  const std::size_t n = ring.family_n();
  if (x.size() != ring.degree()) {
    throw std::invalid_argument("canonical_embed: length does not match ring degree");
  }
  const double sqrt_d = std::sqrt(static_cast<double>(ring.d));
  std::vector<double> out;
  out.reserve(ring.degree());
  for (u64 a = 1; a <= (ring.p - 1) / 2; ++a) {
    double re1 = 0, im1 = 0, re2 = 0, im2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = 2 * std::numbers::pi * static_cast<double>((a * i) % ring.p) / static_cast<double>(ring.p);
      re1 += static_cast<double>(x.coeffs[i]) * std::cos(theta);
      im1 += static_cast<double>(x.coeffs[i]) * std::sin(theta);
      re2 += static_cast<double>(x.coeffs[n + i]) * std::cos(theta);
      im2 += static_cast<double>(x.coeffs[n + i]) * std::sin(theta);
    }
    for (double sign : { 1.0, -1.0 }) {
      out.push_back(std::numbers::sqrt2 * (re1 + sign * sqrt_d * re2));
      out.push_back(std::numbers::sqrt2 * (im1 + sign * sqrt_d * im2));
    }
  }
  return out;
}

inline std::vector<double>
canonical_embed(const RingElem& x, const CycloRing& ring)
{
  const std::size_t n = ring.degree();
  if (x.size() != n) {
    throw std::invalid_argument("canonical_embed: length does not match ring degree");
  }
  std::vector<double> out;
  out.reserve(n);
  for (u64 a = 1; a < n; a += 2) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = 2 * std::numbers::pi * static_cast<double>((a * i) % ring.m) / static_cast<double>(ring.m);
      re += static_cast<double>(x.coeffs[i]) * std::cos(theta);
      im += static_cast<double>(x.coeffs[i]) * std::sin(theta);
    }
    out.push_back(std::numbers::sqrt2 * re);
    out.push_back(std::numbers::sqrt2 * im);
  }
  return out;
}

inline std::vector<double>
canonical_embed(const RingElem& x, const Ring& ring)
{
  return std::visit([&](const auto& r) { return canonical_embed(x, r); }, ring);
}

// Dense row-major square matrix.
struct Matrix
{
  std::size_t n = 0;
  std::vector<double> a;

  explicit Matrix(std::size_t dim = 0)
    : n(dim)
    , a(dim * dim, 0.0)
  {
  }
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

inline RingElem
basis_element(std::size_t index, std::size_t deg)
{
  RingElem e(deg);
  e.coeffs.at(index) = 1;
  return e;
}

// Gram matrix <iota(b_i), iota(b_j)> of the embedded integral basis.
template<typename R>
Matrix
gram_matrix(const R& ring)
{
  const std::size_t deg = ring.degree();
  std::vector<std::vector<double>> rows;
  rows.reserve(deg);
  for (std::size_t i = 0; i < deg; ++i) {
    rows.push_back(canonical_embed(basis_element(i, deg), ring));
  }
  Matrix g(deg);
  for (std::size_t i = 0; i < deg; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < deg; ++k) {
        s += rows[i][k] * rows[j][k];
      }
      g(i, j) = g(j, i) = s;
    }
  }
  return g;
}

inline Matrix
gram_matrix(const Ring& ring)
{
  return std::visit([](const auto& r) { return gram_matrix(r); }, ring);
}

struct LogDet
{
  double log_abs = 0; // natural log of |det|
  int sign = 1;       // 0 for a singular matrix
};

// LU with partial pivoting.
inline LogDet
log_determinant(Matrix m)
{
  LogDet out;
  const std::size_t n = m.n;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) {
        piv = r;
      }
    }
    if (m(piv, col) == 0.0) {
      return { 0, 0 };
    }
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(m(piv, k), m(col, k));
      }
      out.sign = -out.sign;
    }
    const double pivot = m(col, col);
    out.log_abs += std::log(std::abs(pivot));
    if (pivot < 0) {
      out.sign = -out.sign;
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / pivot;
      if (f == 0.0) {
        continue;
      }
      for (std::size_t k = col; k < n; ++k) {
        m(r, k) -= f * m(col, k);
      }
    }
  }
  return out;
}

inline double
determinant(const Matrix& m)
{
  const LogDet ld = log_determinant(m);
  return ld.sign * std::exp(ld.log_abs);
}

// ln |disc(K)|: p^{2(p-2)} (4d)^{p-1} for the family, n^n for Z[zeta_m].
inline double
log_abs_discriminant(const FamilyRing& ring)
{
  const double p = static_cast<double>(ring.p);
  return 2.0 * (p - 2) * std::log(p) + (p - 1) * std::log(4.0 * static_cast<double>(ring.d));
}

inline double
log_abs_discriminant(const CycloRing& ring)
{
  const double n = static_cast<double>(ring.degree());
  return n * std::log(n);
}

inline double
log_abs_discriminant(const Ring& ring)
{
  return std::visit([](const auto& r) { return log_abs_discriminant(r); }, ring);
}

// r / |disc|^{1/(2 deg)}.
template<typename R>
double
scaled_width_r0(double r, const R& ring)
{
  if (!(r > 0)) {
    throw std::invalid_argument("scaled_width_r0: width must be positive");
  }
  return r / std::exp(log_abs_discriminant(ring) / (2.0 * static_cast<double>(ring.degree())));
}

// Inverse of scaled_width_r0.
template<typename R>
double
width_for_r0(double r0, const R& ring)
{
  return r0 * std::exp(log_abs_discriminant(ring) / (2.0 * static_cast<double>(ring.degree())));
}

// Reduction modulo the prime above q fixed by ctx: zeta_p -> alpha_p,
// sqrt(d) -> sqrt(d_red). For the family ring the image is
// (x1(alpha), x2(alpha)) for x = x1 + x2 sqrt(d).
inline Fq2Elem
reduce_mod_prime(const RingElem& x, const FamilyRing& ring, const FieldCtx& ctx)
{
  if (ctx.q() != ring.q || !ctx.alpha_p() || ctx.alpha_order() != ring.p ||
      ctx.d_red() != ffield::reduce(ring.d, ring.q)) {
    throw std::invalid_argument("reduce_mod_prime: field context is inconsistent with the ring");
  }
  const std::size_t n = ring.family_n();
  if (x.size() != ring.degree()) {
    throw std::invalid_argument("reduce_mod_prime: length does not match ring degree");
  }
  const u64 q = ring.q;
  const u64 alpha = *ctx.alpha_p();
  u64 u = 0, v = 0, pw = 1;
  for (std::size_t i = 0; i < n; ++i) {
    u = ffield::add_mod(u, ffield::mul_mod(ffield::reduce(x.coeffs[i], q), pw, q), q);
    v = ffield::add_mod(v, ffield::mul_mod(ffield::reduce(x.coeffs[n + i], q), pw, q), q);
    pw = ffield::mul_mod(pw, alpha, q);
  }
  return { u, v };
}

// zeta_m -> alpha; image in F_q.
inline u64
reduce_mod_prime(const RingElem& x, const CycloRing& ring)
{
  if (x.size() != ring.degree()) {
    throw std::invalid_argument("reduce_mod_prime: length does not match ring degree");
  }
  if (ffield::pow_mod(ring.alpha, ring.degree(), ring.q) != ring.q - 1) {
    throw std::invalid_argument("reduce_mod_prime: alpha is not a primitive m-th root of unity");
  }
  const u64 q = ring.q;
  u64 acc = 0, pw = 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc = ffield::add_mod(acc, ffield::mul_mod(ffield::reduce(x.coeffs[i], q), pw, q), q);
    pw = ffield::mul_mod(pw, ring.alpha, q);
  }
  return acc;
}

// Uniform view over both families: the cyclotomic image sits in F_q,
// embedded as (u, 0).
inline Fq2Elem
reduce_to_field(const RingElem& x, const Ring& ring, const FieldCtx* ctx)
{
  if (const auto* fr = std::get_if<FamilyRing>(&ring)) {
    if (ctx == nullptr) {
      throw std::invalid_argument("reduce_to_field: family ring needs a field context");
    }
    return reduce_mod_prime(x, *fr, *ctx);
  }
  return { reduce_mod_prime(x, std::get<CycloRing>(ring)), 0 };
}

} // namespace rlwe::ring
