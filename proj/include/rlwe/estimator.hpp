#pragma once
#include "attack.hpp"
#include "ffield.hpp"
#include "numberring.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "sampler.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Security estimator for 2-power cyclotomic rings: the cosine-product bound
// eps(m, q, k) on the distance between the reduced P_{m,k} error and uniform.
namespace rlwe::estimator {

using ffield::FieldCtx;
using ffield::Fq2Elem;
using ffield::i64;
using ffield::u64;

inline constexpr double kFlushLog2 = -1100.0;

// Running sum of 2^x values kept as (max exponent, scaled sum).
class Log2Sum
{
public:
  void add(double x)
  {
    if (x < kFlushLog2) {
      return;
    }
    if (x <= max_) {
      sum_ += std::exp2(x - max_);
    } else {
      sum_ = sum_ * std::exp2(max_ - x) + 1.0;
      max_ = x;
    }
  }

  void merge(const Log2Sum& o)
  {
    if (o.sum_ == 0) {
      return;
    }
    if (sum_ == 0) {
      *this = o;
      return;
    }
    if (o.max_ <= max_) {
      sum_ += o.sum_ * std::exp2(o.max_ - max_);
    } else {
      sum_ = sum_ * std::exp2(max_ - o.max_) + o.sum_;
      max_ = o.max_;
    }
  }

  double log2() const { return sum_ == 0 ? -std::numeric_limits<double>::infinity() : max_ + std::log2(sum_); }

private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0;
};

// Fourier transform of V_k reduced mod q at y: cos(pi y / q)^k.
inline double
nu_hat(u64 y, u64 q, unsigned k)
{
  if (k < 2 || k % 2 != 0) {
    throw std::invalid_argument("nu_hat: k must be even and at least 2");
  }
  return std::pow(std::cos(std::numbers::pi * static_cast<double>(y % q) / static_cast<double>(q)), k);
}

namespace detail {

inline void
check_m(u64 m)
{
  if (m < 4 || (m & (m - 1)) != 0) {
    throw std::invalid_argument("estimator: m must be a power of two, at least 4");
  }
}

inline void
check_k(unsigned k)
{
  if (k < 2 || k % 2 != 0) {
    throw std::invalid_argument("estimator: k must be even and at least 2");
  }
}

// log2 |cos(pi t / q)| for t in [0, q).
inline std::vector<double>
log2_cos_table(u64 q)
{
  std::vector<double> t(q);
  for (u64 i = 0; i < q; ++i) {
    t[i] = std::log2(std::abs(std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(q))));
  }
  return t;
}

// Representatives g^j of the cosets of mu_m in a cyclic group of order `group`.
template<typename T, typename Mul>
std::vector<T>
orbit_reps(T g, T one, u64 group, u64 m, Mul mul)
{
  std::vector<T> reps;
  reps.reserve(group / m);
  T x = one;
  for (u64 j = 0; j < group / m; ++j) {
    reps.push_back(x);
    x = mul(x, g);
  }
  return reps;
}

inline u64
generator_mod(u64 q)
{
  return ffield::find_order_element(q - 1, q);
}

} // namespace detail

// log2 of (1/2) sum_{y != 0} prod_{i<n} cos(pi alpha^i y / q)^k, n = m/2.
// Every term is invariant under y -> alpha y (alpha^n = -1 and |cos| is even),
// so the sum is m times the sum over coset representatives of <alpha>.
inline double
epsilon_for_alpha(u64 m, u64 q, unsigned k, u64 alpha, unsigned workers = 1)
{
  detail::check_m(m);
  detail::check_k(k);
  if (!ffield::is_prime(q) || (q - 1) % m != 0) {
    throw std::invalid_argument("epsilon_for_alpha: q must be a prime with q = 1 mod m");
  }
  if (ffield::multiplicative_order(alpha % q, q) != m) {
    throw std::invalid_argument("epsilon_for_alpha: alpha does not have order m");
  }
  const u64 n = m / 2;
  const auto table = detail::log2_cos_table(q);
  const auto reps = detail::orbit_reps<u64>(detail::generator_mod(q), 1, q - 1, m,
                                            [q](u64 x, u64 y) { return ffield::mul_mod(x, y, q); });
  std::vector<Log2Sum> partial(std::max(1u, workers));
  parallel_for(reps.size(), workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    for (std::size_t j = begin; j < end; ++j) {
      u64 t = reps[j];
      double acc = 0;
      for (u64 i = 0; i < n; ++i) {
        acc += table[t];
        t = ffield::mul_mod(t, alpha, q);
      }
      partial[w].add(k * acc);
    }
  });
  Log2Sum total;
  for (const auto& p : partial) {
    total.merge(p);
  }
  return total.log2() + std::log2(static_cast<double>(m)) - 1.0;
}

// Same sum over every y != 0 with no orbit reduction.
inline double
epsilon_for_alpha_direct(u64 m, u64 q, unsigned k, u64 alpha)
{
  const auto table = detail::log2_cos_table(q);
  Log2Sum total;
  for (u64 y = 1; y < q; ++y) {
    u64 t = y;
    double acc = 0;
    for (u64 i = 0; i < m / 2; ++i) {
      acc += table[t];
      t = ffield::mul_mod(t, alpha, q);
    }
    total.add(k * acc);
  }
  return total.log2() - 1.0;
}

// Degree-2 variant: alpha of order m in F_{q^2}, y over F_{q^2} \ {0},
// cos(pi Tr(alpha^i y) / q) for i = 1..n.
inline double
epsilon_deg2_for_alpha(u64 m, const FieldCtx& ctx, unsigned k, Fq2Elem alpha, unsigned workers = 1)
{
  detail::check_m(m);
  detail::check_k(k);
  const u64 q = ctx.q();
  const u64 group = q * q - 1;
  if (group % m != 0 || (q - 1) % m == 0) {
    throw std::invalid_argument("epsilon_deg2: need m | q^2-1 and m not dividing q-1");
  }
  if (ctx.pow(alpha, m) != Fq2Elem{ 1, 0 } || ctx.pow(alpha, m / 2) == Fq2Elem{ 1, 0 }) {
    throw std::invalid_argument("epsilon_deg2: alpha does not have order m");
  }
  const u64 n = m / 2;
  const auto table = detail::log2_cos_table(q);
  const auto reps = detail::orbit_reps<Fq2Elem>(ffield::primitive_element(ctx), { 1, 0 }, group, m,
                                                [&ctx](Fq2Elem x, Fq2Elem y) { return ctx.mul(x, y); });
  std::vector<Log2Sum> partial(std::max(1u, workers));
  parallel_for(reps.size(), workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    for (std::size_t j = begin; j < end; ++j) {
      Fq2Elem t = reps[j];
      double acc = 0;
      for (u64 i = 1; i <= n; ++i) {
        t = ctx.mul(t, alpha);
        acc += table[ctx.trace(t)];
      }
      partial[w].add(k * acc);
    }
  });
  Log2Sum total;
  for (const auto& p : partial) {
    total.merge(p);
  }
  return total.log2() + std::log2(static_cast<double>(m)) - 1.0;
}

inline double
epsilon_deg2_for_alpha_direct(u64 m, const FieldCtx& ctx, unsigned k, Fq2Elem alpha)
{
  const u64 q = ctx.q();
  const auto table = detail::log2_cos_table(q);
  Log2Sum total;
  for (u64 yv = 0; yv < q; ++yv) {
    for (u64 yu = 0; yu < q; ++yu) {
      if (yu == 0 && yv == 0) {
        continue;
      }
      Fq2Elem t{ yu, yv };
      double acc = 0;
      for (u64 i = 1; i <= m / 2; ++i) {
        t = ctx.mul(t, alpha);
        acc += table[ctx.trace(t)];
      }
      total.add(k * acc);
    }
  }
  return total.log2() - 1.0;
}

// beta = (1 + sqrt(q)/m) / 2
inline double
cyclo_beta(u64 m, u64 q)
{
  return (1.0 + std::sqrt(static_cast<double>(q)) / static_cast<double>(m)) / 2.0;
}

// log2((q-1)/2 * beta^{km/4}) without checking the bound's hypotheses.
inline double
bound_formula(u64 m, u64 q, unsigned k)
{
  return std::log2((static_cast<double>(q) - 1.0) / 2.0) +
         static_cast<double>(k) * static_cast<double>(m) / 4.0 * std::log2(cyclo_beta(m, q));
}

inline double
theoretical_bound(u64 m, u64 q, unsigned k)
{
  detail::check_m(m);
  detail::check_k(k);
  if (!ffield::is_prime(q) || (q - 1) % m != 0) {
    throw std::invalid_argument("theoretical_bound: q must be a prime with q = 1 mod m");
  }
  if (q >= m * m) {
    throw std::invalid_argument("theoretical_bound: requires q < m^2");
  }
  return bound_formula(m, q, k);
}

struct EstimateReport
{
  u64 m = 0;
  u64 q = 0;
  unsigned k = 0;
  int residue_degree = 1;
  std::vector<double> log2_eps_by_alpha;
  double log2_eps = 0;
  // set when q < m^2; for degree 2 the closed form is evaluated outside the
  // the bound's hypotheses
  std::optional<double> log2_bound;
  double beta = 0;
  double runtime_ms = 0;

  long long neg_floor_log2_eps() const { return -static_cast<long long>(std::floor(log2_eps)); }
};

inline EstimateReport
epsilon(u64 m, u64 q, unsigned k, unsigned workers = 1)
{
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_m(m);
  detail::check_k(k);
  if (!ffield::is_prime(q) || (q - 1) % m != 0) {
    throw std::invalid_argument("epsilon: q must be a prime with q = 1 mod m (no primitive m-th root mod q)");
  }
  EstimateReport rep;
  rep.m = m;
  rep.q = q;
  rep.k = k;
  rep.residue_degree = 1;
  rep.log2_eps = -std::numeric_limits<double>::infinity();
  for (u64 alpha : ffield::elements_of_order(m, q)) {
    const double e = epsilon_for_alpha(m, q, k, alpha, workers);
    rep.log2_eps_by_alpha.push_back(e);
    rep.log2_eps = std::max(rep.log2_eps, e);
  }
  rep.beta = cyclo_beta(m, q);
  if (q < m * m) {
    rep.log2_bound = bound_formula(m, q, k);
  }
  rep.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline EstimateReport
epsilon_deg2(u64 m, u64 q, unsigned k, unsigned workers = 1)
{
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_m(m);
  detail::check_k(k);
  if (!ffield::is_prime(q)) {
    throw std::invalid_argument("epsilon_deg2: q = " + std::to_string(q) + " is not prime");
  }
  if ((q * q - 1) % m != 0 || (q - 1) % m == 0) {
    throw std::invalid_argument("epsilon_deg2: need m | q^2-1 and m not dividing q-1");
  }
  const FieldCtx ctx(q);
  EstimateReport rep;
  rep.m = m;
  rep.q = q;
  rep.k = k;
  rep.residue_degree = 2;
  rep.log2_eps = -std::numeric_limits<double>::infinity();
  for (const Fq2Elem& alpha : ffield::elements_of_order(m, ctx)) {
    const double e = epsilon_deg2_for_alpha(m, ctx, k, alpha, workers);
    rep.log2_eps_by_alpha.push_back(e);
    rep.log2_eps = std::max(rep.log2_eps, e);
  }
  rep.beta = cyclo_beta(m, q);
  if (q < m * m) {
    rep.log2_bound = bound_formula(m, q, k);
  }
  rep.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Exact pmf of sum_{i<n} alpha^i e_i mod q with e_i ~ V_k, as integer weights
// summing to 2^{kn}.
inline std::vector<unsigned __int128>
reduced_error_weights(u64 m, u64 q, unsigned k, u64 alpha)
{
  const u64 n = m / 2;
  std::vector<unsigned __int128> pmf(q, 0);
  pmf[0] = 1;
  std::vector<u64> binom(k + 1, 1);
  for (unsigned j = 1; j <= k; ++j) {
    binom[j] = binom[j - 1] * (k - j + 1) / j;
  }
  u64 a = 1;
  for (u64 i = 0; i < n; ++i) {
    std::vector<unsigned __int128> next(q, 0);
    for (unsigned j = 0; j <= k; ++j) {
      const i64 t = static_cast<i64>(j) - static_cast<i64>(k / 2);
      const u64 shift = ffield::mul_mod(a, ffield::reduce(t, q), q);
      for (u64 x = 0; x < q; ++x) {
        if (pmf[x] != 0) {
          next[ffield::add_mod(x, shift, q)] += pmf[x] * binom[j];
        }
      }
    }
    pmf = std::move(next);
    a = ffield::mul_mod(a, alpha, q);
  }
  return pmf;
}

// Max over alpha of (1/2) sum_a |P(a) - 1/q|, computed exactly.
inline double
brute_force_distance(u64 m, u64 q, unsigned k)
{
  detail::check_m(m);
  detail::check_k(k);
  if (!ffield::is_prime(q) || (q - 1) % m != 0) {
    throw std::invalid_argument("brute_force_distance: q must be a prime with q = 1 mod m");
  }
  if (static_cast<double>(m / 2) * std::log2(k + 1.0) > 24.0) {
    throw std::invalid_argument("brute_force_distance: instance too large");
  }
  const unsigned bits = static_cast<unsigned>(k * (m / 2));
  const unsigned __int128 total = static_cast<unsigned __int128>(1) << bits;
  double best = 0;
  for (u64 alpha : ffield::elements_of_order(m, q)) {
    const auto w = reduced_error_weights(m, q, k, alpha);
    unsigned __int128 dev = 0;
    for (u64 x = 0; x < q; ++x) {
      const unsigned __int128 scaled = w[x] * q;
      dev += scaled > total ? scaled - total : total - scaled;
    }
    // dev / (2 q 2^{kn})
    best = std::max(best, std::ldexp(static_cast<double>(dev) / (2.0 * static_cast<double>(q)), -static_cast<int>(bits)));
  }
  return best;
}

// max_{y != 0} |sum_{j<m} exp(2 pi i alpha^j y / q)|
inline double
gauss_sum_check(u64 m, u64 q, u64 alpha)
{
  if (ffield::multiplicative_order(alpha % q, q) != m) {
    throw std::invalid_argument("gauss_sum_check: alpha does not have order m");
  }
  double best = 0;
  for (u64 y = 1; y < q; ++y) {
    std::complex<double> s = 0;
    u64 t = y;
    for (u64 j = 0; j < m; ++j) {
      s += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(q));
      t = ffield::mul_mod(t, alpha, q);
    }
    best = std::max(best, std::abs(s));
  }
  return best;
}

struct EmpiricalResult
{
  double chi2 = 0;
  double critical = 0;
  std::size_t samples = 0;
  bool uniform = false;
};

// Draws `count` RLWE samples on Z[zeta_m] / q with the given error, reduces
// b - s a at the prime above q fixed by the ring's root, and tests the q bins
// for uniformity.
inline EmpiricalResult
empirical_uniformity(u64 m, u64 q, const sampler::ErrorSpec& error, u64 count, u64 seed, double confidence = 0.99,
                     unsigned workers = 1)
{
  const ring::CycloRing cr = ring::make_cyclo_ring(m, q);
  const auto inst = oracle::make_instance(cr, error, seed);
  const auto set = oracle::draw_rlwe(inst, count, workers);
  const u64 s = ring::reduce_mod_prime(inst.secret, cr);
  std::vector<std::uint64_t> counts(q, 0);
  for (const auto& rec : set.records) {
    const u64 a = ring::reduce_mod_prime(rec.a, cr);
    const u64 b = ring::reduce_mod_prime(rec.b, cr);
    ++counts[ffield::sub_mod(b, ffield::mul_mod(s, a, q), q)];
  }
  EmpiricalResult r;
  r.samples = count;
  r.chi2 = attack::chi_square_uniform(counts);
  r.critical = attack::critical_value(q - 1, confidence);
  r.uniform = r.chi2 <= r.critical;
  return r;
}

} // namespace rlwe::estimator
