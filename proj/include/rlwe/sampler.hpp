#pragma once
#include "numberring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

// Randomness for the workbench. Gaussian widths follow rho_r(x) = exp(-|x|^2 / r^2)
// throughout; only tail_bound/compute_beta use the pi-normalized constant C_s.
namespace rlwe::sampler {

using ffield::i64;
using ffield::u64;
using ring::CycloRing;
using ring::FamilyRing;
using ring::Ring;
using ring::RingElem;

constexpr u64
splitmix64(u64 x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded 64-bit stream. Children are derived as splitmix(seed ^ splitmix(index)),
// so a worker's stream depends only on (seed, index).
class Rng
{
public:
  explicit Rng(u64 seed)
    : seed_(seed)
    , engine_(splitmix64(seed))
  {
  }

  u64 seed() const { return seed_; }
  Rng fork(u64 index) const { return Rng(splitmix64(seed_ ^ splitmix64(index + 0x632be59bd9b4e019ULL))); }

  u64 next() { return engine_(); }

  // Uniform in [0, bound) by rejection.
  u64 uniform_below(u64 bound)
  {
    if (bound == 0) {
      throw std::invalid_argument("Rng::uniform_below: empty range");
    }
    const u64 limit = std::numeric_limits<u64>::max() - std::numeric_limits<u64>::max() % bound;
    u64 x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  u64 seed_;
  std::mt19937_64 engine_;
};

struct GaussianSpec
{
  double r = 1.0;

  // Integer support bound: ceil(10 r) + 1. Mass beyond it is below exp(-100).
  i64 tail_cut() const { return static_cast<i64>(std::ceil(10.0 * r)) + 1; }
};

struct BinomialSpec
{
  unsigned k = 2;
};

// Degenerate error used by tests: e = 0.
struct ZeroError
{};

using ErrorSpec = std::variant<GaussianSpec, BinomialSpec, ZeroError>;

// Inverse-CDF sampler for the centered D_{Z,r} over [-cut, cut].
class DGaussZ
{
public:
  explicit DGaussZ(GaussianSpec spec)
    : spec_(spec)
  {
    if (!(spec.r > 0)) {
      throw std::invalid_argument("DGaussZ: width must be positive");
    }
    lo_ = -spec.tail_cut();
    const i64 hi = spec.tail_cut();
    double total = 0;
    for (i64 t = lo_; t <= hi; ++t) {
      const double w = std::exp(-static_cast<double>(t * t) / (spec.r * spec.r));
      pmf_.push_back(w);
      total += w;
    }
    double acc = 0;
    for (double& w : pmf_) {
      w /= total;
      acc += w;
      cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
  }

  const GaussianSpec& spec() const { return spec_; }
  i64 support_min() const { return lo_; }
  i64 support_max() const { return lo_ + static_cast<i64>(pmf_.size()) - 1; }

  // Exact (truncated) probability of t.
  double pmf(i64 t) const
  {
    if (t < lo_ || t > support_max()) {
      return 0.0;
    }
    return pmf_[static_cast<std::size_t>(t - lo_)];
  }

  i64 operator()(Rng& rng) const
  {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return lo_ + static_cast<i64>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

private:
  GaussianSpec spec_;
  i64 lo_ = 0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

inline i64
sample_dgauss_z(const GaussianSpec& spec, Rng& rng)
{
  return DGaussZ(spec)(rng);
}

// D_{Z,c,s} for an arbitrary center by rejection from the uniform law on
// [c - 10s - 1, c + 10s + 1], acceptance normalized to the nearest integer.
inline i64
sample_dgauss_z_centered(double center, double s, Rng& rng)
{
  const double tau = 10.0 * s + 1.0;
  const i64 lo = static_cast<i64>(std::ceil(center - tau));
  const i64 hi = static_cast<i64>(std::floor(center + tau));
  const u64 span = static_cast<u64>(hi - lo + 1);
  const double near = center - std::round(center);
  const double inv_s2 = 1.0 / (s * s);
  for (;;) {
    const i64 x = lo + static_cast<i64>(rng.uniform_below(span));
    const double dx = static_cast<double>(x) - center;
    if (rng.uniform01() < std::exp(-(dx * dx - near * near) * inv_s2)) {
      return x;
    }
  }
}

// Exact P(V_k = t) = C(k, t + k/2) / 2^k.
inline double
binomial_vk_pmf(unsigned k, i64 t)
{
  const i64 half = static_cast<i64>(k / 2);
  if (t < -half || t > half) {
    return 0.0;
  }
  const unsigned j = static_cast<unsigned>(t + half);
  double c = 1.0;
  for (unsigned i = 1; i <= j; ++i) {
    c = c * static_cast<double>(k - j + i) / static_cast<double>(i);
  }
  return std::ldexp(c, -static_cast<int>(k));
}

// (sum of k fair bits) - k/2.
inline i64
sample_binomial_vk(const BinomialSpec& spec, Rng& rng)
{
  if (spec.k < 2 || spec.k % 2 != 0) {
    throw std::invalid_argument("sample_binomial_vk: k must be even and at least 2");
  }
  i64 sum = 0;
  unsigned left = spec.k;
  while (left > 0) {
    const unsigned take = std::min(left, 64u);
    u64 bits = rng.next();
    if (take < 64) {
      bits &= (u64{ 1 } << take) - 1;
    }
    sum += std::popcount(bits);
    left -= take;
  }
  return sum - static_cast<i64>(spec.k / 2);
}

// Randomized nearest-plane (Klein) sampler over one lattice block given by
// its Gram matrix; level i draws from D_{Z, c_i, s / |b*_i|}.
class KleinBlock
{
public:
  explicit KleinBlock(const ring::Matrix& gram)
    : n_(gram.n)
    , chol_(gram.n)
  {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = gram(i, j);
        for (std::size_t k = 0; k < j; ++k) {
          s -= chol_(i, k) * chol_(j, k);
        }
        if (i == j) {
          if (!(s > 0)) {
            throw std::invalid_argument("KleinBlock: Gram matrix is not positive definite");
          }
          chol_(i, i) = std::sqrt(s);
        } else {
          chol_(i, j) = s / chol_(j, j);
        }
      }
    }
  }

  std::size_t dimension() const { return n_; }
  double gs_norm(std::size_t i) const { return chol_(i, i); }
  double min_gs_norm() const
  {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      m = std::min(m, chol_(i, i));
    }
    return m;
  }
  double max_gs_norm() const
  {
    double m = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      m = std::max(m, chol_(i, i));
    }
    return m;
  }

  // Writes coefficients to out[0..n).
  void sample(double s, Rng& rng, std::span<i64> out) const
  {
    std::vector<double> target(n_, 0.0);
    for (std::size_t ii = n_; ii-- > 0;) {
      const double center = target[ii] / chol_(ii, ii);
      const i64 z = sample_dgauss_z_centered(center, s / chol_(ii, ii), rng);
      out[ii] = z;
      if (z != 0) {
        for (std::size_t k = 0; k <= ii; ++k) {
          target[k] -= static_cast<double>(z) * chol_(ii, k);
        }
      }
    }
  }

private:
  std::size_t n_;
  ring::Matrix chol_; // lower triangular, row i = coordinates of b_i
};

struct LatticeSample
{
  RingElem e;
  bool below_fidelity_floor = false;
};

// Per-level width under which the nearest-plane output is flagged.
inline constexpr double kFidelityFloor = 4.0;

// Discrete Gaussian D_{iota(R), r} in coefficient coordinates.
//
// FamilyRing: R = V + W with iota(V) orthogonal to iota(W); each block is
// sampled independently by the nearest-plane sampler over its own Gram
// matrix. CycloRing: iota scales coefficient norms by sqrt(n), so by default
// the n coefficients are independent D_{Z, r / sqrt(n)}; the nearest-plane
// path is kept for cross-checking.
class LatticeSampler
{
public:
  enum class Method
  {
    automatic,
    nearest_plane
  };

  explicit LatticeSampler(const Ring& ring, Method method = Method::automatic)
    : ring_(ring)
  {
    if (const auto* fr = std::get_if<FamilyRing>(&ring)) {
      const ring::Matrix g = ring::gram_matrix(*fr);
      const std::size_t n = fr->family_n();
      ring::Matrix gv(n), gw(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          gv(i, j) = g(i, j);
          gw(i, j) = g(n + i, n + j);
        }
      }
      blocks_.emplace_back(gv);
      blocks_.emplace_back(gw);
    } else if (method == Method::nearest_plane) {
      blocks_.emplace_back(ring::gram_matrix(std::get<CycloRing>(ring)));
    }
  }

  const Ring& ring() const { return ring_; }

  // Smallest per-level width for a given r.
  double min_level_width(double r) const
  {
    if (blocks_.empty()) {
      return r / std::sqrt(static_cast<double>(ring::degree(ring_)));
    }
    double w = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
      w = std::min(w, r / b.max_gs_norm());
    }
    return w;
  }

  LatticeSample sample(const GaussianSpec& spec, Rng& rng) const
  {
    const std::size_t deg = ring::degree(ring_);
    LatticeSample out{ RingElem(deg), min_level_width(spec.r) < kFidelityFloor };
    if (blocks_.empty()) {
      const DGaussZ coeff({ spec.r / std::sqrt(static_cast<double>(deg)) });
      for (auto& c : out.e.coeffs) {
        c = coeff(rng);
      }
      return out;
    }
    std::size_t offset = 0;
    for (const auto& b : blocks_) {
      b.sample(spec.r, rng, std::span<i64>(out.e.coeffs.data() + offset, b.dimension()));
      offset += b.dimension();
    }
    return out;
  }

  // Per-coefficient sampler for repeated draws on a cyclotomic ring.
  LatticeSample sample(const DGaussZ& coeff, Rng& rng) const
  {
    const std::size_t deg = ring::degree(ring_);
    LatticeSample out{ RingElem(deg), coeff.spec().r < kFidelityFloor };
    for (auto& c : out.e.coeffs) {
      c = coeff(rng);
    }
    return out;
  }

private:
  Ring ring_;
  std::vector<KleinBlock> blocks_;
};

inline LatticeSample
sample_lattice_gauss(const Ring& ring, const GaussianSpec& spec, Rng& rng)
{
  return LatticeSampler(ring).sample(spec, rng);
}

// log of C_s^n with C_s = s sqrt(2 pi e) exp(-pi s^2), s = c / r.
inline double
log_tail_bound(double c, double r, std::size_t n)
{
  if (!(r > 0) || !(c > r / std::sqrt(2 * std::numbers::pi))) {
    throw std::invalid_argument("tail_bound: need c > r / sqrt(2 pi)");
  }
  const double s = c / r;
  const double log_cs = std::log(s) + 0.5 * std::log(2 * std::numbers::pi * std::numbers::e) - std::numbers::pi * s * s;
  return std::min(0.0, static_cast<double>(n) * log_cs);
}

// Upper bound on P(|v| > c sqrt(n)) for v ~ D_{Lambda, r}.
inline double
tail_bound(double c, double r, std::size_t n)
{
  return std::exp(log_tail_bound(c, r, n));
}

// ln beta, beta = min((sqrt(4 pi e d) / r * exp(-2 pi d / r^2))^n, 1).
inline double
log_beta(i64 d, double r, std::size_t family_n)
{
  const double dd = static_cast<double>(d);
  if (!(r > 0) || !(r < 2 * std::sqrt(std::numbers::pi * dd))) {
    throw std::invalid_argument("compute_beta: need 0 < r < 2 sqrt(pi d)");
  }
  const double inner = 0.5 * std::log(4 * std::numbers::pi * std::numbers::e * dd) - std::log(r) -
                       2 * std::numbers::pi * dd / (r * r);
  return std::min(0.0, static_cast<double>(family_n) * inner);
}

// Probability bound that the sqrt(d)-component of a family error is nonzero.
inline double
compute_beta(i64 d, double r, std::size_t family_n)
{
  return std::exp(log_beta(d, r, family_n));
}

} // namespace rlwe::sampler
