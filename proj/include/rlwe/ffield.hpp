#pragma once
#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Exact arithmetic in F_q and in the quadratic extension F_q[x]/(x^2 - d).
namespace rlwe::ffield {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

constexpr u64
mul_mod(u64 a, u64 b, u64 m)
{
  return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

constexpr u64
add_mod(u64 a, u64 b, u64 m)
{
  const u64 s = a + b;
  return (s >= m || s < a) ? s - m : s;
}

constexpr u64
sub_mod(u64 a, u64 b, u64 m)
{
  return a >= b ? a - b : m - (b - a);
}

constexpr u64
pow_mod(u64 base, u64 exp, u64 m)
{
  u64 result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) {
      result = mul_mod(result, base, m);
    }
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Signed integer reduced into [0, m).
constexpr u64
reduce(i64 a, u64 m)
{
  const i64 r = a % static_cast<i64>(m);
  return static_cast<u64>(r < 0 ? r + static_cast<i64>(m) : r);
}

// Inverse of a modulo m by extended Euclid; throws if gcd(a, m) != 1.
inline u64
inv_mod(u64 a, u64 m)
{
  i64 old_r = static_cast<i64>(a % m), r = static_cast<i64>(m);
  i64 old_s = 1, s = 0;
  while (r != 0) {
    const i64 quot = old_r / r;
    const i64 tmp_r = old_r - quot * r;
    old_r = r;
    r = tmp_r;
    const i64 tmp_s = old_s - quot * s;
    old_s = s;
    s = tmp_s;
  }
  if (old_r != 1) {
    throw std::domain_error("inv_mod: element is not invertible");
  }
  return reduce(old_s, m);
}

namespace detail {

inline bool
strong_probable_prime(u64 n, u64 base)
{
  u64 d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  u64 x = pow_mod(base, d, n);
  if (x == 1 || x == n - 1) {
    return true;
  }
  for (unsigned i = 1; i < s; ++i) {
    x = mul_mod(x, x, n);
    if (x == n - 1) {
      return true;
    }
  }
  return false;
}

} // namespace detail

// Deterministic for all 64-bit n: trial division below 2^20, then the
// first twelve prime bases (sufficient for n < 3.3e24).
inline bool
is_prime(u64 n)
{
  if (n < 2) {
    return false;
  }
  constexpr u64 trial_limit = u64{ 1 } << 20;
  for (u64 p : { 2u, 3u, 5u, 7u, 11u, 13u }) {
    if (n % p == 0) {
      return n == p;
    }
  }
  for (u64 i = 17; i * i <= n && i < trial_limit; i += 2) {
    if (n % i == 0) {
      return false;
    }
  }
  if (n < trial_limit * trial_limit) {
    return true;
  }
  for (u64 base : { 2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u, 37u }) {
    if (!detail::strong_probable_prime(n, base)) {
      return false;
    }
  }
  return true;
}

// Distinct prime divisors of n by trial division, ascending.
inline std::vector<u64>
distinct_prime_factors(u64 n)
{
  std::vector<u64> out;
  for (u64 f = 2; f * f <= n; ++f) {
    if (n % f == 0) {
      out.push_back(f);
      while (n % f == 0) {
        n /= f;
      }
    }
  }
  if (n > 1) {
    out.push_back(n);
  }
  return out;
}

// Legendre symbol (a/q) by Euler's criterion.
inline int
legendre(i64 a, u64 q)
{
  if (q < 3 || !is_prime(q)) {
    throw std::invalid_argument("legendre: modulus " + std::to_string(q) + " is not an odd prime");
  }
  const u64 r = reduce(a, q);
  if (r == 0) {
    return 0;
  }
  return pow_mod(r, (q - 1) / 2, q) == 1 ? 1 : -1;
}

inline u64
smallest_nonresidue(u64 q)
{
  for (u64 a = 2; a < q; ++a) {
    if (legendre(static_cast<i64>(a), q) == -1) {
      return a;
    }
  }
  throw std::invalid_argument("smallest_nonresidue: no nonresidue modulo " + std::to_string(q));
}

// Element u + v*sqrt(d) of F_{q^2}; both coordinates live in [0, q).
struct Fq2Elem
{
  u64 u = 0;
  u64 v = 0;

  constexpr bool in_base_field() const { return v == 0; }
  friend constexpr auto operator<=>(const Fq2Elem&, const Fq2Elem&) = default;
};

class FieldCtx
{
public:
  // Quadratic extension built from the smallest nonresidue modulo q.
  explicit FieldCtx(u64 q)
    : FieldCtx(q, static_cast<i64>(check_prime(q) ? smallest_nonresidue(q) : 0))
  {
  }

  // Quadratic extension F_q[sqrt(d)]; d must be a nonresidue modulo q.
  FieldCtx(u64 q, i64 d)
    : q_(q)
  {
    check_prime(q);
    if (legendre(d, q) != -1) {
      throw std::invalid_argument("FieldCtx: " + std::to_string(d) + " is not a quadratic nonresidue mod " +
                                  std::to_string(q));
    }
    d_red_ = reduce(d, q);
  }

  u64 q() const { return q_; }
  u64 d_red() const { return d_red_; }
  const std::optional<u64>& alpha_p() const { return alpha_p_; }
  u64 alpha_order() const { return alpha_order_; }

  // Attach an element of exact multiplicative order `order` as the image of
  // the chosen root of unity.
  FieldCtx& set_alpha(u64 alpha, u64 order)
  {
    bool exact = order >= 2 && pow_mod(alpha, order, q_) == 1;
    for (u64 f : distinct_prime_factors(order)) {
      exact = exact && pow_mod(alpha, order / f, q_) != 1;
    }
    if (!exact) {
      throw std::invalid_argument("FieldCtx::set_alpha: element does not have order " + std::to_string(order));
    }
    alpha_p_ = alpha % q_;
    alpha_order_ = order;
    return *this;
  }

  Fq2Elem from_base(u64 a) const { return { a % q_, 0 }; }
  Fq2Elem sqrt_d() const { return { 0, 1 }; }

  Fq2Elem add(Fq2Elem x, Fq2Elem y) const { return { add_mod(x.u, y.u, q_), add_mod(x.v, y.v, q_) }; }
  Fq2Elem sub(Fq2Elem x, Fq2Elem y) const { return { sub_mod(x.u, y.u, q_), sub_mod(x.v, y.v, q_) }; }
  Fq2Elem neg(Fq2Elem x) const { return sub({ 0, 0 }, x); }

  Fq2Elem mul(Fq2Elem x, Fq2Elem y) const
  {
    const u64 uu = add_mod(mul_mod(x.u, y.u, q_), mul_mod(d_red_, mul_mod(x.v, y.v, q_), q_), q_);
    const u64 vv = add_mod(mul_mod(x.u, y.v, q_), mul_mod(x.v, y.u, q_), q_);
    return { uu, vv };
  }

  Fq2Elem scale(Fq2Elem x, u64 c) const { return { mul_mod(x.u, c, q_), mul_mod(x.v, c, q_) }; }

  // Norm to F_q: x * x^q = u^2 - d v^2.
  u64 norm(Fq2Elem x) const
  {
    return sub_mod(mul_mod(x.u, x.u, q_), mul_mod(d_red_, mul_mod(x.v, x.v, q_), q_), q_);
  }

  Fq2Elem inv(Fq2Elem x) const
  {
    const u64 n = norm(x);
    if (n == 0) {
      throw std::domain_error("FieldCtx::inv: zero has no inverse");
    }
    const u64 n_inv = inv_mod(n, q_);
    return { mul_mod(x.u, n_inv, q_), mul_mod(sub_mod(0, x.v, q_), n_inv, q_) };
  }

  Fq2Elem div(Fq2Elem x, Fq2Elem y) const { return mul(x, inv(y)); }

  Fq2Elem pow(Fq2Elem x, u64 e) const
  {
    Fq2Elem r{ 1 % q_, 0 };
    while (e > 0) {
      if (e & 1) {
        r = mul(r, x);
      }
      x = mul(x, x);
      e >>= 1;
    }
    return r;
  }

  // x^q; sqrt(d)^q = d^((q-1)/2) sqrt(d) = -sqrt(d).
  Fq2Elem frobenius(Fq2Elem x) const { return { x.u, sub_mod(0, x.v, q_) }; }

  u64 trace(Fq2Elem x) const { return add_mod(x.u, x.u, q_); }

private:
  static bool check_prime(u64 q)
  {
    if (q < 3 || !is_prime(q)) {
      throw std::invalid_argument("FieldCtx: modulus " + std::to_string(q) + " is not an odd prime");
    }
    return true;
  }

  u64 q_;
  u64 d_red_ = 0;
  std::optional<u64> alpha_p_;
  u64 alpha_order_ = 0;
};

inline Fq2Elem
frobenius(Fq2Elem x, const FieldCtx& ctx)
{
  return ctx.frobenius(x);
}

inline u64
trace(Fq2Elem x, const FieldCtx& ctx)
{
  return ctx.trace(x);
}

// One representative per additive coset of F_q in F_{q^2}: t_j = j*sqrt(d).
inline std::vector<Fq2Elem>
coset_reps(const FieldCtx& ctx)
{
  std::vector<Fq2Elem> reps;
  reps.reserve(ctx.q());
  for (u64 j = 0; j < ctx.q(); ++j) {
    reps.push_back({ 0, j });
  }
  return reps;
}

// Element of exact order `order` in F_q^*, taken as g^((q-1)/order) for the
// first g that does not collapse to a smaller order.
inline u64
find_order_element(u64 order, u64 q)
{
  if (order < 2 || (q - 1) % order != 0) {
    throw std::invalid_argument("find_order_element: " + std::to_string(order) + " does not divide q-1 = " +
                                std::to_string(q - 1));
  }
  const std::vector<u64> prime_factors = distinct_prime_factors(order);
  for (u64 g = 2; g < q; ++g) {
    const u64 x = pow_mod(g, (q - 1) / order, q);
    bool exact = true;
    for (u64 f : prime_factors) {
      if (pow_mod(x, order / f, q) == 1) {
        exact = false;
        break;
      }
    }
    if (exact) {
      return x;
    }
  }
  throw std::domain_error("find_order_element: no element found");
}

// Image of zeta_p: an element of order p in F_q (requires q = 1 mod p).
inline u64
find_order_p_element(u64 p, const FieldCtx& ctx)
{
  if (!is_prime(p)) {
    throw std::invalid_argument("find_order_p_element: p is not prime");
  }
  return find_order_element(p, ctx.q());
}

// Multiplicative order of x in F_q^* (x != 0).
inline u64
multiplicative_order(u64 x, u64 q)
{
  x %= q;
  if (x == 0) {
    throw std::domain_error("multiplicative_order: zero");
  }
  u64 order = q - 1;
  for (u64 f : distinct_prime_factors(q - 1)) {
    while (order % f == 0 && pow_mod(x, order / f, q) == 1) {
      order /= f;
    }
  }
  return order;
}

// All elements of exact order m in F_q^*, ascending.
inline std::vector<u64>
elements_of_order(u64 m, u64 q)
{
  const u64 g = find_order_element(m, q);
  std::vector<u64> out;
  u64 x = 1;
  for (u64 e = 0; e < m; ++e) {
    if (std::gcd(e, m) == 1) {
      out.push_back(x);
    }
    x = mul_mod(x, g, q);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// All elements of exact order m in F_{q^2}^* (m must divide q^2 - 1).
inline std::vector<Fq2Elem>
elements_of_order(u64 m, const FieldCtx& ctx)
{
  const u64 q = ctx.q();
  const u64 group = q * q - 1;
  if (m < 2 || group % m != 0) {
    throw std::invalid_argument("elements_of_order: order does not divide q^2-1");
  }
  const std::vector<u64> prime_factors = distinct_prime_factors(m);
  std::optional<Fq2Elem> gen;
  for (u64 v = 1; v < q && !gen; ++v) {
    for (u64 u = 0; u < q && !gen; ++u) {
      const Fq2Elem x = ctx.pow({ u, v }, group / m);
      bool exact = true;
      for (u64 f : prime_factors) {
        if (ctx.pow(x, m / f) == Fq2Elem{ 1, 0 }) {
          exact = false;
          break;
        }
      }
      if (exact) {
        gen = x;
      }
    }
  }
  if (!gen) {
    throw std::domain_error("elements_of_order: no element found");
  }
  std::vector<Fq2Elem> out;
  Fq2Elem x{ 1, 0 };
  for (u64 e = 0; e < m; ++e) {
    if (std::gcd(e, m) == 1) {
      out.push_back(x);
    }
    x = ctx.mul(x, *gen);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Generator of F_{q^2}^*.
inline Fq2Elem
primitive_element(const FieldCtx& ctx)
{
  const u64 q = ctx.q();
  const u64 group = q * q - 1;
  const std::vector<u64> prime_factors = distinct_prime_factors(group);
  for (u64 v = 1; v < q; ++v) {
    for (u64 u = 0; u < q; ++u) {
      bool generator = true;
      for (u64 f : prime_factors) {
        if (ctx.pow({ u, v }, group / f) == Fq2Elem{ 1, 0 }) {
          generator = false;
          break;
        }
      }
      if (generator) {
        return { u, v };
      }
    }
  }
  throw std::domain_error("primitive_element: none found");
}

} // namespace rlwe::ffield
