#include <rlwe/attack.hpp>
#include <rlwe/estimator.hpp>
#include <rlwe/family.hpp>
#include <rlwe/oracle.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

using namespace rlwe;
using ffield::i64;
using ffield::u64;
using ordered_json = nlohmann::ordered_json;

namespace {

// Thrown for bad flag combinations; maps to exit code 2.
struct UsageError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct Common
{
  std::string out;
  std::string format = "csv";
  unsigned workers = default_workers();
};

void
add_common(CLI::App* app, Common& c, const std::string& default_format)
{
  c.format = default_format;
  app->add_option("--out", c.out, "write machine output here instead of stdout");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({ "json", "csv", "human" }));
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

void
emit(const Common& c, const std::string& text)
{
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open '" + c.out + "' for writing");
  }
  f << text;
}

std::string
fmt(double x, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// ---- find-params ----

struct FindParams
{
  Common common;
  u64 p = 0;
  i64 d = 0;
  std::optional<u64> q_min, q_max, q;
  std::optional<u64> extend_k;
  double r0 = 1.0;
};

int
run_find_params(const FindParams& f)
{
  std::vector<family::FamilyParams> rows;
  if (f.extend_k) {
    if (!f.q) {
      throw UsageError("--extend-k needs --q");
    }
    for (i64 dk : family::extend_d(f.p, *f.q, f.d, *f.extend_k)) {
      rows.push_back({ f.p, dk, *f.q });
    }
  } else {
    if (!f.q_min || !f.q_max) {
      throw UsageError("give --q-min and --q-max (or --q with --extend-k)");
    }
    for (u64 q : family::search_q(f.p, f.d, *f.q_min, *f.q_max)) {
      rows.push_back(family::require_valid(f.p, f.d, q));
    }
  }
  std::ostringstream out;
  if (f.common.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back({ { "p", r.p },
                      { "d", r.d },
                      { "q", r.q },
                      { "deg", r.degree() },
                      { "log2_disc", r.log2_disc() },
                      { "suggested_r_for_r0", f.r0 * r.r0_scale() } });
    }
    out << arr.dump(2) << '\n';
  } else {
    out << "p,d,q,deg,log2_disc,suggested_r_for_r0\n";
    for (const auto& r : rows) {
      out << r.p << ',' << r.d << ',' << r.q << ',' << r.degree() << ',' << fmt(r.log2_disc(), 10) << ','
          << fmt(f.r0 * r.r0_scale(), 8) << '\n';
    }
  }
  emit(f.common, out.str());
  std::cerr << rows.size() << " parameter set(s)\n";
  return 0;
}

// ---- gen-samples ----

struct GenSamples
{
  Common common;
  std::optional<u64> p, m;
  std::optional<i64> d;
  u64 q = 0;
  std::optional<double> r, r0;
  std::optional<unsigned> k;
  bool zero = false;
  bool uniform = false;
  std::optional<u64> count;
  u64 seed = 0;
};

ring::Ring
ring_from_flags(std::optional<u64> p, std::optional<i64> d, std::optional<u64> m, u64 q)
{
  if (m && !p && !d) {
    return ring::make_cyclo_ring(*m, q);
  }
  if (p && d && !m) {
    family::require_valid(*p, *d, q);
    return ring::make_family_ring(*p, *d, q);
  }
  throw UsageError("give either --p and --d (family ring) or --m (cyclotomic ring)");
}

int
run_gen_samples(const GenSamples& g)
{
  const ring::Ring ring = ring_from_flags(g.p, g.d, g.m, g.q);
  const int kinds = (g.r ? 1 : 0) + (g.r0 ? 1 : 0) + (g.k ? 1 : 0) + (g.zero ? 1 : 0);
  if (kinds > 1) {
    throw UsageError("--r, --r0, --k and --zero are mutually exclusive");
  }
  if (kinds == 0 && !g.uniform) {
    throw UsageError("give an error distribution: --r, --r0, --k or --zero");
  }
  sampler::ErrorSpec error = sampler::ZeroError{};
  if (g.r || g.r0) {
    const double r = g.r ? *g.r : std::visit([&](const auto& rr) { return ring::width_for_r0(*g.r0, rr); }, ring);
    error = sampler::GaussianSpec{ r };
    const double level = sampler::LatticeSampler(ring).min_level_width(r);
    if (level < sampler::kFidelityFloor) {
      std::cerr << "warning: smallest per-level width " << fmt(level) << " is below " << sampler::kFidelityFloor
                << "\n";
    }
  } else if (g.k) {
    error = sampler::BinomialSpec{ *g.k };
  }
  const u64 count = g.count ? *g.count : 10 * g.q;
  const auto inst = oracle::make_instance(ring, error, g.seed);
  const auto set = g.uniform ? oracle::draw_uniform(inst, count, g.common.workers)
                             : oracle::draw_rlwe(inst, count, g.common.workers);
  emit(g.common, oracle::to_string(set));
  std::cerr << "wrote " << count << (g.uniform ? " uniform" : " RLWE") << " samples, deg "
            << ring::degree(ring) << ", q " << g.q << "\n";
  return 0;
}

// ---- attack ----

struct Attack
{
  Common common;
  std::string in;
  std::string kind = "coset";
  std::optional<double> threshold;
  double alpha = 0.01;
};

int
run_attack(const Attack& a)
{
  const auto set = oracle::load(a.in);
  const ring::Ring ring = oracle::ring_from_header(set.header);
  const auto* fr = std::get_if<ring::FamilyRing>(&ring);
  if (fr == nullptr) {
    throw std::runtime_error("attack needs a family-ring sample file (residue degree 2 at q)");
  }
  const auto ctx = ring::make_field_ctx(*fr);
  attack::AttackConfig cfg;
  cfg.threshold = a.threshold;
  cfg.family_alpha = a.alpha;
  cfg.workers = a.common.workers;
  const auto outcome = a.kind == "two-bin" ? attack::two_bin_attack(set, ctx, cfg) : attack::coset_attack(set, ctx, cfg);

  auto report = attack::to_json(outcome);
  report["attack"] = a.kind;
  std::optional<bool> matches;
  if (const auto guess = outcome.guess(); guess && !set.header.secret_hash.empty()) {
    try {
      const auto inst = oracle::regenerate_instance(set.header);
      matches = ring::reduce_mod_prime(inst.secret, *fr, ctx) == *guess;
    } catch (const std::exception& e) {
      std::cerr << "warning: cannot check candidate against commitment: " << e.what() << "\n";
    }
  }
  report["matches_secret"] = matches ? ordered_json(*matches) : ordered_json(nullptr);
  emit(a.common, report.dump(a.common.format == "human" ? 2 : -1) + "\n");

  std::cerr << a.kind << ": " << attack::to_string(outcome.verdict);
  if (const auto guess = outcome.guess()) {
    std::cerr << " (" << guess->u << ", " << guess->v << ")";
  }
  if (matches) {
    std::cerr << (*matches ? ", matches secret commitment" : ", does NOT match secret commitment");
  }
  std::cerr << "; " << outcome.samples_used << " samples, " << outcome.guess_iterations << " guess iterations, "
            << fmt(outcome.elapsed_ms) << " ms\n";
  return 0;
}

// ---- estimate ----

struct Estimate
{
  Common common;
  u64 m = 0;
  u64 q = 0;
  unsigned k = 2;
  int degree = 1;
  bool empirical = false;
  std::optional<double> r0;
  std::optional<u64> count;
  u64 seed = 0;
  double confidence = 0.99;
};

int
run_estimate(const Estimate& e)
{
  const auto rep = e.degree == 2 ? estimator::epsilon_deg2(e.m, e.q, e.k, e.common.workers)
                                 : estimator::epsilon(e.m, e.q, e.k, e.common.workers);
  std::optional<estimator::EmpiricalResult> emp;
  if (e.empirical) {
    if (e.degree != 1) {
      throw UsageError("--empirical supports --degree 1 only");
    }
    const sampler::ErrorSpec err = e.r0 ? sampler::ErrorSpec(sampler::GaussianSpec{
                                            ring::width_for_r0(*e.r0, ring::make_cyclo_ring(e.m, e.q)) })
                                        : sampler::ErrorSpec(sampler::BinomialSpec{ e.k });
    emp = estimator::empirical_uniformity(e.m, e.q, err, e.count ? *e.count : 10 * e.q, e.seed, e.confidence,
                                          e.common.workers);
  }

  std::ostringstream out;
  if (e.common.format == "json") {
    ordered_json j;
    j["m"] = rep.m;
    j["q"] = rep.q;
    j["k"] = rep.k;
    j["degree"] = rep.residue_degree;
    j["neg_floor_log2_eps"] = rep.neg_floor_log2_eps();
    j["log2_eps"] = rep.log2_eps;
    j["log2_bound"] = rep.log2_bound ? ordered_json(*rep.log2_bound) : ordered_json(nullptr);
    j["beta"] = rep.beta;
    j["runtime_ms"] = rep.runtime_ms;
    j["log2_eps_by_alpha"] = rep.log2_eps_by_alpha;
    if (emp) {
      j["empirical"] = { { "chi2", emp->chi2 },
                         { "critical", emp->critical },
                         { "samples", emp->samples },
                         { "uniform", emp->uniform } };
    }
    out << j.dump(2) << '\n';
  } else {
    out << "m,q,k,degree,neg_floor_log2_eps,log2_bound,beta,runtime_ms";
    if (emp) {
      out << ",chi2,critical,uniform";
    }
    out << '\n'
        << rep.m << ',' << rep.q << ',' << rep.k << ',' << rep.residue_degree << ',' << rep.neg_floor_log2_eps()
        << ',' << (rep.log2_bound ? fmt(*rep.log2_bound, 8) : "") << ',' << fmt(rep.beta, 8) << ','
        << fmt(rep.runtime_ms, 6);
    if (emp) {
      out << ',' << fmt(emp->chi2, 8) << ',' << fmt(emp->critical, 8) << ',' << (emp->uniform ? "yes" : "no");
    }
    out << '\n';
  }
  emit(e.common, out.str());
  std::cerr << "eps(" << e.m << ", " << e.q << ", " << e.k << ") = 2^" << fmt(rep.log2_eps, 8)
            << ", -floor(log2 eps) = " << rep.neg_floor_log2_eps();
  if (rep.log2_bound) {
    std::cerr << ", bound 2^" << fmt(*rep.log2_bound, 8);
  }
  std::cerr << "\n";
  if (emp) {
    std::cerr << "chi2 = " << fmt(emp->chi2) << " vs " << fmt(emp->critical) << ", uniform: "
              << (emp->uniform ? "yes" : "no") << "\n";
  }
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "RLWE attack and estimator workbench" };
  app.require_subcommand(1);

  FindParams fp;
  auto* find = app.add_subcommand("find-params", "search primes q for (p, d), or extend d by multiples of 4q");
  add_common(find, fp.common, "csv");
  find->add_option("--p", fp.p, "odd prime p")->required();
  find->add_option("--d", fp.d, "squarefree d")->required();
  find->add_option("--q-min", fp.q_min);
  find->add_option("--q-max", fp.q_max);
  find->add_option("--q", fp.q);
  find->add_option("--extend-k", fp.extend_k, "list d + 4kq for k = 1..K");
  find->add_option("--r0", fp.r0, "target scaled width for the suggested r column");

  GenSamples gs;
  auto* gen = app.add_subcommand("gen-samples", "draw an RLWE (or uniform) sample set");
  add_common(gen, gs.common, "json");
  gen->add_option("--p", gs.p);
  gen->add_option("--d", gs.d);
  gen->add_option("--m", gs.m, "cyclotomic index (power of two)");
  gen->add_option("--q", gs.q)->required();
  gen->add_option("--r", gs.r, "Gaussian width");
  gen->add_option("--r0", gs.r0, "scaled Gaussian width");
  gen->add_option("--k", gs.k, "shifted binomial V_k errors");
  gen->add_flag("--zero", gs.zero, "zero error");
  gen->add_flag("--uniform", gs.uniform, "uniform decoy samples");
  gen->add_option("--count", gs.count, "number of samples (default 10q)");
  gen->add_option("--seed", gs.seed);

  Attack at;
  auto* atk = app.add_subcommand("attack", "run a chi-square attack on a sample file");
  add_common(atk, at.common, "json");
  atk->add_option("--in", at.in, "sample file")->required();
  atk->add_option("--attack", at.kind)->check(CLI::IsMember({ "coset", "two-bin" }));
  atk->add_option("--threshold", at.threshold, "critical chi-square value");
  atk->add_option("--alpha", at.alpha, "family-wise false-alarm level for the default threshold");

  Estimate es;
  auto* est = app.add_subcommand("estimate", "epsilon(m, q, k) for 2-power cyclotomics");
  add_common(est, es.common, "csv");
  est->add_option("--m", es.m)->required();
  est->add_option("--q", es.q)->required();
  est->add_option("--k", es.k);
  est->add_option("--degree", es.degree)->check(CLI::IsMember({ 1, 2 }));
  est->add_flag("--empirical", es.empirical, "also run the reduced-error chi-square experiment");
  est->add_option("--r0", es.r0, "scaled Gaussian width for --empirical (default: V_k errors)");
  est->add_option("--count", es.count, "samples for --empirical (default 10q)");
  est->add_option("--seed", es.seed);
  est->add_option("--confidence", es.confidence);

  // long-form flags only
  for (CLI::App* sub : { &app, find, gen, atk, est }) {
    sub->allow_windows_style_options(false);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*find) {
      return run_find_params(fp);
    }
    if (*gen) {
      return run_gen_samples(gs);
    }
    if (*atk) {
      return run_attack(at);
    }
    return run_estimate(es);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
