#pragma once
#include "ffield.hpp"
#include "numberring.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Parameter space of the vulnerable family K = Q(zeta_p, sqrt(d)) with a
// prime q of residue degree 2.
namespace rlwe::family {

using ffield::i64;
using ffield::u64;

inline constexpr u64 kTrialLimit = 1'000'000;

namespace detail {

inline bool
is_perfect_square(u64 n)
{
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) {
    --r;
  }
  while ((r + 1) * (r + 1) <= n) {
    ++r;
  }
  return r * r == n;
}

} // namespace detail

// Trial division up to 10^6. A leftover cofactor c has every prime factor
// above 10^6, so for c < 10^18 it is squarefree unless it is a perfect
// square; anything beyond that is undecided.
inline bool
is_squarefree(u64 n)
{
  if (n == 0) {
    return false;
  }
  for (u64 f = 2; f <= kTrialLimit && f * f <= n; ++f) {
    if (n % f == 0) {
      n /= f;
      if (n % f == 0) {
        return false;
      }
    }
  }
  if (n == 1 || ffield::is_prime(n)) {
    return true;
  }
  if (detail::is_perfect_square(n)) {
    return false;
  }
  // every prime factor exceeds kTrialLimit, so below kTrialLimit^3 n is a product of two distinct primes
  if (n / kTrialLimit / kTrialLimit < kTrialLimit) {
    return true;
  }
  throw std::runtime_error("is_squarefree: cofactor " + std::to_string(n) + " too large to decide");
}

struct FamilyParams
{
  u64 p = 0;
  i64 d = 0;
  u64 q = 0;

  std::size_t degree() const { return 2 * (p - 1); }
  ring::FamilyRing ring() const { return { p, d, q }; }
  double log2_disc() const { return ring::log_abs_discriminant(ring()) / std::log(2.0); }
  // |disc|^{1/(2 deg)}: r = r0 * this
  double r0_scale() const { return ring::width_for_r0(1.0, ring()); }
};

struct Validation
{
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Conditions on d alone (plus gcd with p).
inline std::vector<std::string>
d_violations(u64 p, i64 d)
{
  std::vector<std::string> out;
  if (d <= 1) {
    out.push_back("d must be > 1");
    return out;
  }
  if (!is_squarefree(static_cast<u64>(d))) {
    out.push_back("d is not squarefree");
  }
  if (d % 4 != 2 && d % 4 != 3) {
    out.push_back("d must be 2 or 3 mod 4");
  }
  if (p != 0 && std::gcd(static_cast<u64>(d), p) != 1) {
    out.push_back("d is not coprime to p");
  }
  return out;
}

inline Validation
validate(u64 p, i64 d, u64 q)
{
  Validation v;
  const bool p_ok = p >= 3 && ffield::is_prime(p);
  if (!p_ok) {
    v.violations.push_back("p is not an odd prime");
  }
  for (auto& s : d_violations(p_ok ? p : 0, d)) {
    v.violations.push_back(std::move(s));
  }
  const bool q_ok = q >= 3 && ffield::is_prime(q);
  if (!q_ok) {
    v.violations.push_back("q is not an odd prime");
  }
  if (p_ok && q % p != 1) {
    v.violations.push_back("q is not 1 mod p");
  }
  if (q_ok && d > 1 && ffield::legendre(d, q) != -1) {
    v.violations.push_back("d is not a quadratic nonresidue mod q (legendre(d, q) = " +
                           std::to_string(ffield::legendre(d, q)) + ")");
  }
  return v;
}

// Throws std::invalid_argument listing every violated condition.
inline FamilyParams
require_valid(u64 p, i64 d, u64 q)
{
  const auto v = validate(p, d, q);
  if (!v.ok()) {
    std::string msg = "invalid (p, d, q) = (" + std::to_string(p) + ", " + std::to_string(d) + ", " +
                      std::to_string(q) + "):";
    for (const auto& s : v.violations) {
      msg += " " + s + ";";
    }
    msg.pop_back();
    throw std::invalid_argument(msg);
  }
  return { p, d, q };
}

// Primes q in [q_min, q_max] with q = 1 mod p and (d/q) = -1, ascending.
inline std::vector<u64>
search_q(u64 p, i64 d, u64 q_min, u64 q_max)
{
  if (p < 3 || !ffield::is_prime(p)) {
    throw std::invalid_argument("search_q: p is not an odd prime");
  }
  if (const auto bad = d_violations(p, d); !bad.empty()) {
    throw std::invalid_argument("search_q: " + bad.front());
  }
  std::vector<u64> out;
  if (q_max < q_min) {
    return out;
  }
  // first q >= q_min with q = 1 mod p
  u64 q = q_min <= 1 ? 1 : q_min + (p - (q_min - 1) % p) % p;
  for (; q <= q_max; q += p) {
    if (q >= 3 && ffield::is_prime(q) && ffield::legendre(d, q) == -1) {
      out.push_back(q);
    }
    if (q > q_max - p) {
      break;
    }
  }
  return out;
}

// d' = d + 4kq for k in [1, k_max] that pass validate.
inline std::vector<i64>
extend_d(u64 p, u64 q, i64 d, u64 k_max)
{
  require_valid(p, d, q);
  std::vector<i64> out;
  for (u64 k = 1; k <= k_max; ++k) {
    const i64 dk = d + static_cast<i64>(4 * k * q);
    if (validate(p, dk, q).ok()) {
      out.push_back(dk);
    }
  }
  return out;
}

} // namespace rlwe::family
