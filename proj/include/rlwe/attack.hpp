#pragma once
#include "ffield.hpp"
#include "numberring.hpp"
#include "oracle.hpp"
#include "parallel.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Chi-square attacks on RLWE modulo a prime of residue degree 2:
// the two-bin attack over all q^2 guesses, and the coset attack that loops
// over the q additive cosets of F_q in F_{q^2}.
namespace rlwe::attack {

using ffield::FieldCtx;
using ffield::Fq2Elem;
using ffield::u64;

enum class Verdict
{
  guess,
  not_rlwe,
  insufficient_samples
};

inline const char*
to_string(Verdict v)
{
  switch (v) {
    case Verdict::guess:
      return "GUESS";
    case Verdict::not_rlwe:
      return "NOT-RLWE";
    case Verdict::insufficient_samples:
      return "INSUFFICIENT-SAMPLES";
  }
  return "?";
}

struct AttackConfig
{
  // Critical chi-square value; the attack's default when unset.
  std::optional<double> threshold;
  // Family-wise false-alarm level used for the default threshold.
  double family_alpha = 0.01;
  std::size_t min_samples = 2;
  unsigned workers = 1;
};

struct AttackOutcome
{
  Verdict verdict = Verdict::not_rlwe;
  std::vector<Fq2Elem> candidates; // exactly one for Verdict::guess
  std::vector<double> chi2_by_index;
  std::size_t samples_used = 0;
  std::uint64_t guess_iterations = 0;
  double threshold = 0;
  double elapsed_ms = 0;

  std::optional<Fq2Elem> guess() const
  {
    if (verdict == Verdict::guess) {
      return candidates.front();
    }
    return std::nullopt;
  }
};

// Sum of (obs - exp)^2 / exp.
inline double
chi_square(std::span<const std::uint64_t> counts, std::span<const double> expected)
{
  if (counts.size() != expected.size() || counts.size() < 2) {
    throw std::invalid_argument("chi_square: need two or more bins of matching length");
  }
  double stat = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(expected[i] > 0)) {
      throw std::invalid_argument("chi_square: expected count of bin " + std::to_string(i) + " is not positive");
    }
    const double diff = static_cast<double>(counts[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

// Chi-square against the uniform law on counts.size() bins.
inline double
chi_square_uniform(std::span<const std::uint64_t> counts)
{
  std::uint64_t total = 0;
  for (auto c : counts) {
    total += c;
  }
  const std::vector<double> expected(counts.size(), static_cast<double>(total) / static_cast<double>(counts.size()));
  return chi_square(counts, expected);
}

// Quantile of the chi-square distribution with `dof` degrees of freedom.
inline double
critical_value(std::size_t dof, double confidence)
{
  if (dof < 1) {
    throw std::invalid_argument("critical_value: dof must be at least 1");
  }
  if (!(confidence > 0 && confidence < 1)) {
    throw std::invalid_argument("critical_value: confidence must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(static_cast<double>(dof)), confidence);
}

// Default coset-attack threshold: each of the q tests at level alpha / q.
inline double
coset_threshold(u64 q, double family_alpha)
{
  return critical_value(q - 1, 1.0 - family_alpha / static_cast<double>(q));
}

// Two-bin statistic for `in_base` of n samples landing in F_q.
inline double
two_bin_statistic(std::uint64_t in_base, std::uint64_t n, u64 q)
{
  const double expected_base = static_cast<double>(n) / static_cast<double>(q);
  const std::array<std::uint64_t, 2> counts{ in_base, n - in_base };
  const std::array<double, 2> expected{ expected_base, static_cast<double>(n) - expected_base };
  return chi_square(counts, expected);
}

// Default two-bin threshold. With ~N/q expected hits the chi-square law is a
// poor tail model, so the cut is taken from the exact Binomial(N, 1/q) upper
// tail at level alpha / q^2 and expressed as a chi-square value.
inline double
two_bin_threshold(std::uint64_t n, u64 q, double family_alpha)
{
  const double level = family_alpha / (static_cast<double>(q) * static_cast<double>(q));
  const boost::math::binomial_distribution<double> null_law(static_cast<double>(n), 1.0 / static_cast<double>(q));
  std::uint64_t c = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) / static_cast<double>(q)));
  // smallest c with P(C >= c) <= level
  while (c < n && boost::math::cdf(boost::math::complement(null_law, static_cast<double>(c) - 1.0)) > level) {
    ++c;
  }
  return two_bin_statistic(c - 1, n, q);
}

using ReducedSample = std::pair<Fq2Elem, Fq2Elem>; // (rho(a), rho(b))

// Applies the reduction map to every record. The set must come from a
// family ring whose data matches ctx.
inline std::vector<ReducedSample>
reduce_samples(const oracle::SampleSet& set, const FieldCtx& ctx)
{
  const ring::Ring r = oracle::ring_from_header(set.header);
  const auto* fr = std::get_if<ring::FamilyRing>(&r);
  if (fr == nullptr) {
    throw std::invalid_argument("attack: sample ring has residue degree 1 at q; a degree-2 family ring is required");
  }
  std::vector<ReducedSample> out;
  out.reserve(set.records.size());
  for (const auto& rec : set.records) {
    out.emplace_back(ring::reduce_mod_prime(rec.a, *fr, ctx), ring::reduce_mod_prime(rec.b, *fr, ctx));
  }
  return out;
}

namespace detail {

inline double
ms_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline void
decide(AttackOutcome& out, std::vector<Fq2Elem> flagged)
{
  std::sort(flagged.begin(), flagged.end());
  flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
  out.candidates = std::move(flagged);
  if (out.candidates.empty()) {
    out.verdict = Verdict::not_rlwe;
  } else if (out.candidates.size() == 1) {
    out.verdict = Verdict::guess;
  } else {
    out.verdict = Verdict::insufficient_samples;
  }
}

} // namespace detail

// Two-bin attack: for every guess g in F_{q^2}, bins e_g = rho(b) - g rho(a)
// into F_q versus its complement. Guess index is g.u + q * g.v.
inline AttackOutcome
two_bin_attack(std::span<const ReducedSample> samples, const FieldCtx& ctx, const AttackConfig& config)
{
  const auto t0 = std::chrono::steady_clock::now();
  const u64 q = ctx.q();
  const std::size_t n = samples.size();
  if (n < std::max<std::size_t>(config.min_samples, 1)) {
    throw std::invalid_argument("two_bin_attack: " + std::to_string(n) + " samples, need at least " +
                                std::to_string(config.min_samples));
  }
  AttackOutcome out;
  out.samples_used = n;
  out.threshold = config.threshold ? *config.threshold : two_bin_threshold(n, q, config.family_alpha);
  out.chi2_by_index.assign(q * q, 0.0);

  std::vector<u64> a_u(n), a_v(n), b_v(n);
  for (std::size_t i = 0; i < n; ++i) {
    a_u[i] = samples[i].first.u;
    a_v[i] = samples[i].first.v;
    b_v[i] = samples[i].second.v;
  }
  std::vector<std::uint64_t> iterations(std::max(1u, config.workers), 0);
  // The sqrt(d)-coordinate of rho(b) - g rho(a) is b_v - g_u a_v - g_v a_u;
  // for fixed g_v it decreases by a_v each time g_u advances.
  parallel_for(q, config.workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<u64> coord(n);
    for (std::size_t gv = begin; gv < end; ++gv) {
      for (std::size_t i = 0; i < n; ++i) {
        coord[i] = ffield::sub_mod(b_v[i], ffield::mul_mod(gv, a_u[i], q), q);
      }
      for (u64 gu = 0; gu < q; ++gu) {
        std::uint64_t in_base = 0;
        for (std::size_t i = 0; i < n; ++i) {
          in_base += coord[i] == 0;
          coord[i] = ffield::sub_mod(coord[i], a_v[i], q);
        }
        out.chi2_by_index[gu + q * gv] = two_bin_statistic(in_base, n, q);
        ++iterations[w];
      }
    }
  });
  for (auto c : iterations) {
    out.guess_iterations += c;
  }

  std::vector<Fq2Elem> flagged;
  for (u64 idx = 0; idx < q * q; ++idx) {
    if (out.chi2_by_index[idx] > out.threshold) {
      flagged.push_back({ idx % q, idx / q });
    }
  }
  detail::decide(out, std::move(flagged));
  out.elapsed_ms = detail::ms_since(t0);
  return out;
}

// Improved attack: for each coset representative t_j computes
//   m_j = (conj(b) - b - conj(a t_j) + a t_j) / (conj(a) - a)  in F_q
// over the samples with rho(a) outside F_q, tests the m_j for uniformity,
// and for each flagged coset proposes (modal m_j) + t_j.
inline AttackOutcome
coset_attack(std::span<const ReducedSample> samples, const FieldCtx& ctx, const AttackConfig& config)
{
  const auto t0 = std::chrono::steady_clock::now();
  const u64 q = ctx.q();
  if (samples.size() < std::max<std::size_t>(config.min_samples, 1)) {
    throw std::invalid_argument("coset_attack: " + std::to_string(samples.size()) + " samples, need at least " +
                                std::to_string(config.min_samples));
  }
  struct Prepared
  {
    Fq2Elem a;
    Fq2Elem b_diff;   // conj(b) - b
    Fq2Elem a_diff_inv; // 1 / (conj(a) - a)
  };
  std::vector<Prepared> prep;
  prep.reserve(samples.size());
  for (const auto& [a, b] : samples) {
    if (a.in_base_field()) {
      continue;
    }
    prep.push_back({ a, ctx.sub(ctx.frobenius(b), b), ctx.inv(ctx.sub(ctx.frobenius(a), a)) });
  }

  AttackOutcome out;
  out.samples_used = prep.size();
  out.threshold = config.threshold ? *config.threshold : coset_threshold(q, config.family_alpha);
  if (prep.empty()) {
    out.verdict = Verdict::insufficient_samples;
    out.elapsed_ms = detail::ms_since(t0);
    return out;
  }

  const std::vector<Fq2Elem> reps = ffield::coset_reps(ctx);
  out.chi2_by_index.assign(q, 0.0);
  std::vector<std::vector<Fq2Elem>> proposals(q);
  std::vector<std::uint64_t> iterations(std::max(1u, config.workers), 0);
  parallel_for(q, config.workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<std::uint64_t> counts(q);
    for (std::size_t j = begin; j < end; ++j) {
      std::fill(counts.begin(), counts.end(), 0);
      const Fq2Elem t = reps[j];
      for (const auto& s : prep) {
        const Fq2Elem at = ctx.mul(s.a, t);
        const Fq2Elem num = ctx.sub(s.b_diff, ctx.sub(ctx.frobenius(at), at));
        const Fq2Elem m = ctx.mul(num, s.a_diff_inv);
        if (!m.in_base_field()) {
          throw std::logic_error("coset_attack: m_j left the prime field");
        }
        ++counts[m.u];
      }
      out.chi2_by_index[j] = chi_square_uniform(counts);
      ++iterations[w];
      if (out.chi2_by_index[j] > out.threshold) {
        const std::uint64_t top = *std::max_element(counts.begin(), counts.end());
        for (u64 s0 = 0; s0 < q; ++s0) {
          if (counts[s0] == top) {
            proposals[j].push_back(ctx.add(ctx.from_base(s0), t));
          }
        }
      }
    }
  });
  for (auto c : iterations) {
    out.guess_iterations += c;
  }

  std::vector<Fq2Elem> flagged;
  for (const auto& p : proposals) {
    flagged.insert(flagged.end(), p.begin(), p.end());
  }
  detail::decide(out, std::move(flagged));
  out.elapsed_ms = detail::ms_since(t0);
  return out;
}

inline AttackOutcome
two_bin_attack(const oracle::SampleSet& set, const FieldCtx& ctx, const AttackConfig& config)
{
  const auto reduced = reduce_samples(set, ctx);
  return two_bin_attack(reduced, ctx, config);
}

inline AttackOutcome
coset_attack(const oracle::SampleSet& set, const FieldCtx& ctx, const AttackConfig& config)
{
  const auto reduced = reduce_samples(set, ctx);
  return coset_attack(reduced, ctx, config);
}

// {verdict, candidate, chi2_by_index, samples_used, elapsed_ms, ...}
inline nlohmann::ordered_json
to_json(const AttackOutcome& out)
{
  nlohmann::ordered_json j;
  j["verdict"] = to_string(out.verdict);
  if (const auto g = out.guess()) {
    j["candidate"] = { g->u, g->v };
  } else {
    j["candidate"] = nullptr;
  }
  j["chi2_by_index"] = out.chi2_by_index;
  j["samples_used"] = out.samples_used;
  j["elapsed_ms"] = out.elapsed_ms;
  j["guess_iterations"] = out.guess_iterations;
  j["threshold"] = out.threshold;
  auto cands = nlohmann::ordered_json::array();
  for (const auto& c : out.candidates) {
    cands.push_back({ c.u, c.v });
  }
  j["candidates"] = cands;
  return j;
}

} // namespace rlwe::attack
