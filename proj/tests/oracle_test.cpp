#include <rlwe/attack.hpp>
#include <rlwe/oracle.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace {

using namespace rlwe;
using namespace rlwe::oracle;
using ffield::Fq2Elem;

const ring::FamilyRing kSmall = ring::make_family_ring(3, 2, 13);

TEST(Instance, SecretReducedAndSeeded)
{
  const auto a = make_instance(kSmall, sampler::GaussianSpec{ 1.0 }, 11);
  const auto b = make_instance(kSmall, sampler::GaussianSpec{ 1.0 }, 11);
  const auto c = make_instance(kSmall, sampler::GaussianSpec{ 1.0 }, 12);
  EXPECT_EQ(a.secret, b.secret);
  EXPECT_NE(a.secret, c.secret);
  for (auto x : a.secret.coeffs) {
    EXPECT_GE(x, 0);
    EXPECT_LT(x, 13);
  }
}

TEST(DrawRlwe, ZeroSecretZeroError)
{
  auto inst = make_instance(kSmall, sampler::ZeroError{}, 1);
  inst.secret = ring::RingElem(4);
  const auto set = draw_rlwe(inst, 50);
  ASSERT_EQ(set.records.size(), 50u);
  for (const auto& r : set.records) {
    EXPECT_EQ(r.b, ring::RingElem(4));
  }
  EXPECT_THROW(draw_rlwe(inst, 0), std::invalid_argument);
}

TEST(DrawRlwe, ReductionReplay)
{
  const ring::FamilyRing fr = ring::make_family_ring(43, 4871, 173);
  const auto ctx = ring::make_field_ctx(fr);
  const auto inst = make_instance(fr, sampler::GaussianSpec{ 694.94 }, 3);
  const auto set = draw_rlwe(inst, 100);
  const Fq2Elem s = ring::reduce_mod_prime(inst.secret, fr, ctx);
  sampler::Rng root(inst.seed);
  const ErrorSource err(inst);
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& r = set.records[i];
    // replay record i's stream up to the error draw
    sampler::Rng rng = root.fork(i + 1);
    (void)uniform_elem(84, 173, rng);
    const auto e = err(rng).e;
    const Fq2Elem lhs = ctx.sub(ring::reduce_mod_prime(r.b, fr, ctx), ctx.mul(ring::reduce_mod_prime(r.a, fr, ctx), s));
    EXPECT_EQ(lhs, ring::reduce_mod_prime(e, fr, ctx));
  }
}

TEST(DrawRlwe, ReducedAIsUniformOverFq2)
{
  const auto ctx = ring::make_field_ctx(kSmall);
  const auto inst = make_instance(kSmall, sampler::GaussianSpec{ 1.0 }, 4);
  const auto set = draw_rlwe(inst, 10000);
  std::vector<std::uint64_t> counts(169, 0);
  for (const auto& r : set.records) {
    const Fq2Elem a = ring::reduce_mod_prime(r.a, kSmall, ctx);
    ++counts[a.u + 13 * a.v];
  }
  const double stat = attack::chi_square_uniform(counts);
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(168), stat));
  EXPECT_GT(p, 0.01);
}

TEST(DrawRlwe, BinomialErrorStatistics)
{
  const ring::CycloRing cr = ring::make_cyclo_ring(16, 97);
  const auto inst = make_instance(cr, sampler::BinomialSpec{ 4 }, 5);
  const auto set = draw_rlwe(inst, 5000);
  std::vector<double> hist(5, 0);
  for (const auto& r : set.records) {
    const auto e = ring::ring_sub(r.b, ring::ring_mul(r.a, inst.secret, cr), 97);
    for (i64 c : e.coeffs) {
      const i64 t = c > 48 ? c - 97 : c;
      ASSERT_LE(std::abs(t), 2);
      hist[static_cast<std::size_t>(t + 2)] += 1;
    }
  }
  double stat = 0;
  const double n = 5000.0 * 8;
  for (int t = -2; t <= 2; ++t) {
    const double e = n * sampler::binomial_vk_pmf(4, t);
    stat += (hist[t + 2] - e) * (hist[t + 2] - e) / e;
  }
  EXPECT_GT(boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(4), stat)), 0.01);
}

TEST(DrawRlwe, IndependentOfWorkerCount)
{
  const auto inst = make_instance(ring::make_family_ring(43, 4871, 173), sampler::GaussianSpec{ 694.94 }, 6);
  EXPECT_EQ(to_string(draw_rlwe(inst, 40, 1)), to_string(draw_rlwe(inst, 40, 4)));
  EXPECT_EQ(to_string(draw_uniform(inst, 40, 1)), to_string(draw_uniform(inst, 40, 3)));
}

TEST(DrawUniform, CountAndGuessInvariance)
{
  const auto ctx = ring::make_field_ctx(kSmall);
  const auto inst = make_instance(kSmall, sampler::GaussianSpec{ 1.0 }, 7);
  const auto set = draw_uniform(inst, 1000);
  EXPECT_EQ(set.records.size(), 1000u);
  EXPECT_EQ(set.header.count, 1000u);
  EXPECT_EQ(set.header.error_kind, "uniform");
  EXPECT_TRUE(set.header.secret_hash.empty());
  attack::AttackConfig cfg;
  const auto out = attack::two_bin_attack(set, ctx, cfg);
  for (double chi2 : out.chi2_by_index) {
    EXPECT_LE(chi2, out.threshold);
  }
  EXPECT_EQ(out.verdict, attack::Verdict::not_rlwe);
}

TEST(Serialization, RoundTripIsByteIdentical)
{
  const auto inst = make_instance(kSmall, sampler::GaussianSpec{ 2.5 }, 8);
  const auto set = draw_rlwe(inst, 20);
  const std::string text = to_string(set);
  std::istringstream in(text);
  const auto back = load(in);
  EXPECT_EQ(back, set);
  EXPECT_EQ(to_string(back), text);

  const auto path = std::filesystem::temp_directory_path() / "rlwe_oracle_roundtrip.jsonl";
  save(set, path.string());
  EXPECT_EQ(to_string(load(path.string())), text);
  std::filesystem::remove(path);
}

TEST(Serialization, HeaderLayout)
{
  const auto inst = make_instance(kSmall, sampler::BinomialSpec{ 4 }, 9);
  const auto text = to_string(draw_rlwe(inst, 1));
  const auto header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header.rfind("{\"schema_version\":1,\"ring_kind\":\"family\",\"p\":3,\"d\":2,\"q\":13,"
                         "\"error_kind\":\"binomial\",\"width_or_k\":4,\"seed\":9,\"count\":1,\"secret_hash\":\"",
                         0),
            0u);
  EXPECT_EQ(make_header(inst, 1).secret_hash, secret_hash(inst.secret, 13));
  EXPECT_EQ(secret_hash(inst.secret, 13).size(), 64u);

  const auto cyc = make_instance(ring::make_cyclo_ring(8, 17), sampler::GaussianSpec{ 1.5 }, 2);
  const auto ct = to_string(draw_rlwe(cyc, 1));
  EXPECT_NE(ct.find("\"ring_kind\":\"cyclo\",\"m\":8,\"q\":17,\"error_kind\":\"gaussian\",\"width_or_k\":1.5"),
            std::string::npos);
}

TEST(Serialization, SecretHashKnownVector)
{
  // SHA-256 of eight zero bytes
  EXPECT_EQ(secret_hash(ring::RingElem(1), 13), "af5570f5a1810b7af78caf4bc70a660f0df51e42baf91d4de5b2328de0e83dfc");
}

TEST(Serialization, HeaderOnlyLoads)
{
  auto set = draw_rlwe(make_instance(kSmall, sampler::ZeroError{}, 1), 1);
  set.records.clear();
  set.header.count = 0;
  std::istringstream in(to_string(set));
  const auto back = load(in);
  EXPECT_TRUE(back.records.empty());
  EXPECT_EQ(back.header, set.header);
}

TEST(Serialization, Errors)
{
  const auto set = draw_rlwe(make_instance(kSmall, sampler::ZeroError{}, 1), 3);
  const std::string text = to_string(set);
  const auto header = text.substr(0, text.find('\n') + 1);

  std::istringstream short_rec(header + "{\"a\":[1,2,3,4],\"b\":[0,0,0,0]}\n{\"a\":[1,2,3],\"b\":[0,0,0,0]}\n");
  try {
    load(short_rec);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
  }

  std::istringstream bad_json(header + "{\"a\":[1,2\n");
  EXPECT_THROW(load(bad_json), ParseError);

  std::istringstream out_of_range(header + "{\"a\":[1,2,3,13],\"b\":[0,0,0,0]}\n");
  EXPECT_THROW(load(out_of_range), ParseError);

  std::istringstream count_mismatch(header + "{\"a\":[1,2,3,4],\"b\":[0,0,0,0]}\n");
  EXPECT_THROW(load(count_mismatch), ParseError);

  std::istringstream empty("");
  EXPECT_THROW(load(empty), ParseError);

  std::istringstream bad_header("{\"schema_version\":7}\n");
  try {
    load(bad_header);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(load(std::string("/nonexistent/file.jsonl")), std::runtime_error);
}

TEST(Commitment, RegenerateInstance)
{
  const auto inst = make_instance(ring::make_family_ring(43, 4871, 173), sampler::GaussianSpec{ 694.94 }, 10);
  const auto set = draw_rlwe(inst, 2);
  const auto again = regenerate_instance(set.header);
  EXPECT_EQ(again.secret, inst.secret);
  auto tampered = set.header;
  tampered.seed += 1;
  EXPECT_THROW(regenerate_instance(tampered), std::runtime_error);
}

} // namespace
