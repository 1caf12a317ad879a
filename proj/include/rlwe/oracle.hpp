#pragma once
#include "numberring.hpp"
#include "parallel.hpp"
#include "sampler.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// RLWE sample sets: generation for a fixed instance and the line-delimited
// JSON file format.
//
// Line 1 is the header object, keys in this order:
//   schema_version, ring_kind ("family" | "cyclo"), p, d (family only),
//   m (cyclo only), q, error_kind ("gaussian" | "binomial" | "zero" | "uniform"),
//   width_or_k, seed, count, secret_hash
// Every following line is {"a": [...], "b": [...]} with coefficients in [0, q).
namespace rlwe::oracle {

using ffield::i64;
using ffield::u64;
using ring::CycloRing;
using ring::FamilyRing;
using ring::Ring;
using ring::RingElem;
using sampler::ErrorSpec;
using sampler::Rng;

inline constexpr int kSchemaVersion = 1;

struct RlweInstance
{
  Ring ring;
  ErrorSpec error;
  RingElem secret; // coefficients in [0, q)
  u64 seed = 0;
};

struct SampleHeader
{
  int schema_version = kSchemaVersion;
  std::string ring_kind;
  std::optional<u64> p;
  std::optional<i64> d;
  std::optional<u64> m;
  u64 q = 0;
  std::string error_kind;
  double width_or_k = 0;
  u64 seed = 0;
  u64 count = 0;
  std::string secret_hash;

  bool operator==(const SampleHeader&) const = default;
};

struct SampleRecord
{
  RingElem a;
  RingElem b;

  bool operator==(const SampleRecord&) const = default;
};

struct SampleSet
{
  SampleHeader header;
  std::vector<SampleRecord> records;

  bool operator==(const SampleSet&) const = default;
};

class ParseError : public std::runtime_error
{
public:
  ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what)
    , line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// Hex SHA-256 of the coefficients, each as 8 little-endian bytes.
inline std::string
secret_hash(const RingElem& secret, u64 q)
{
  std::vector<unsigned char> bytes;
  bytes.reserve(secret.size() * 8);
  for (i64 c : secret.coeffs) {
    u64 v = ffield::reduce(c, q);
    for (int i = 0; i < 8; ++i) {
      bytes.push_back(static_cast<unsigned char>(v & 0xff));
      v >>= 8;
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("secret_hash: SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline RingElem
uniform_elem(std::size_t deg, u64 q, Rng& rng)
{
  RingElem x(deg);
  for (auto& c : x.coeffs) {
    c = static_cast<i64>(rng.uniform_below(q));
  }
  return x;
}

// Instance whose secret is drawn uniformly from the seed's first stream.
inline RlweInstance
make_instance(const Ring& ring, const ErrorSpec& error, u64 seed)
{
  Rng rng = Rng(seed).fork(0);
  RingElem secret = uniform_elem(ring::degree(ring), ring::modulus(ring), rng);
  return { ring, error, std::move(secret), seed };
}

inline SampleHeader
make_header(const RlweInstance& inst, u64 count)
{
  SampleHeader h;
  h.q = ring::modulus(inst.ring);
  if (const auto* fr = std::get_if<FamilyRing>(&inst.ring)) {
    h.ring_kind = "family";
    h.p = fr->p;
    h.d = fr->d;
  } else {
    h.ring_kind = "cyclo";
    h.m = std::get<CycloRing>(inst.ring).m;
  }
  std::visit(
    [&](const auto& e) {
      using E = std::decay_t<decltype(e)>;
      if constexpr (std::is_same_v<E, sampler::GaussianSpec>) {
        h.error_kind = "gaussian";
        h.width_or_k = e.r;
      } else if constexpr (std::is_same_v<E, sampler::BinomialSpec>) {
        h.error_kind = "binomial";
        h.width_or_k = e.k;
      } else {
        h.error_kind = "zero";
        h.width_or_k = 0;
      }
    },
    inst.error);
  h.seed = inst.seed;
  h.count = count;
  h.secret_hash = secret_hash(inst.secret, h.q);
  return h;
}

// Draws the error for one record.
class ErrorSource
{
public:
  explicit ErrorSource(const RlweInstance& inst)
    : inst_(inst)
  {
    if (const auto* g = std::get_if<sampler::GaussianSpec>(&inst.error)) {
      lattice_.emplace(inst.ring);
      if (const auto* cr = std::get_if<CycloRing>(&inst.ring)) {
        coeff_.emplace(sampler::GaussianSpec{ g->r / std::sqrt(static_cast<double>(cr->degree())) });
      }
    }
  }

  sampler::LatticeSample operator()(Rng& rng) const
  {
    const std::size_t deg = ring::degree(inst_.ring);
    if (const auto* g = std::get_if<sampler::GaussianSpec>(&inst_.error)) {
      return coeff_ ? lattice_->sample(*coeff_, rng) : lattice_->sample(*g, rng);
    }
    sampler::LatticeSample out{ RingElem(deg), false };
    if (const auto* b = std::get_if<sampler::BinomialSpec>(&inst_.error)) {
      for (auto& c : out.e.coeffs) {
        c = sampler::sample_binomial_vk(*b, rng);
      }
    }
    return out;
  }

private:
  const RlweInstance& inst_;
  std::optional<sampler::LatticeSampler> lattice_;
  std::optional<sampler::DGaussZ> coeff_;
};

// Record i uses the stream Rng(seed).fork(i + 1), so content depends only on
// (instance, count) and not on the worker count.
inline SampleSet
draw_rlwe(const RlweInstance& inst, u64 count, unsigned workers = 1)
{
  if (count < 1) {
    throw std::invalid_argument("draw_rlwe: count must be at least 1");
  }
  const std::size_t deg = ring::degree(inst.ring);
  const u64 q = ring::modulus(inst.ring);
  SampleSet set{ make_header(inst, count), std::vector<SampleRecord>(count) };
  const ErrorSource error(inst);
  const Rng root(inst.seed);
  parallel_for(count, workers, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = root.fork(i + 1);
      RingElem a = uniform_elem(deg, q, rng);
      const auto e = error(rng);
      RingElem b = ring::ring_add(ring::ring_mul(a, inst.secret, inst.ring), e.e, q);
      set.records[i] = { std::move(a), std::move(b) };
    }
  });
  return set;
}

// Decoy set: both coordinates uniform. Uses a stream disjoint from draw_rlwe.
inline SampleSet
draw_uniform(const RlweInstance& inst, u64 count, unsigned workers = 1)
{
  if (count < 1) {
    throw std::invalid_argument("draw_uniform: count must be at least 1");
  }
  const std::size_t deg = ring::degree(inst.ring);
  const u64 q = ring::modulus(inst.ring);
  SampleHeader h = make_header(inst, count);
  h.error_kind = "uniform";
  h.width_or_k = 0;
  h.secret_hash.clear();
  SampleSet set{ h, std::vector<SampleRecord>(count) };
  const Rng root(sampler::splitmix64(inst.seed ^ 0x756e69666f726d00ULL));
  parallel_for(count, workers, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = root.fork(i);
      RingElem a = uniform_elem(deg, q, rng);
      RingElem b = uniform_elem(deg, q, rng);
      set.records[i] = { std::move(a), std::move(b) };
    }
  });
  return set;
}

// Ring described by a header (cyclotomic rings use the canonical root).
inline Ring
ring_from_header(const SampleHeader& h)
{
  if (h.ring_kind == "family") {
    if (!h.p || !h.d) {
      throw std::invalid_argument("family header needs p and d");
    }
    return ring::make_family_ring(*h.p, *h.d, h.q);
  }
  if (h.ring_kind == "cyclo") {
    if (!h.m) {
      throw std::invalid_argument("cyclo header needs m");
    }
    return ring::make_cyclo_ring(*h.m, h.q);
  }
  throw std::invalid_argument("unknown ring_kind '" + h.ring_kind + "'");
}

inline std::optional<ErrorSpec>
error_from_header(const SampleHeader& h)
{
  if (h.error_kind == "gaussian") {
    return sampler::GaussianSpec{ h.width_or_k };
  }
  if (h.error_kind == "binomial") {
    return sampler::BinomialSpec{ static_cast<unsigned>(h.width_or_k) };
  }
  if (h.error_kind == "zero") {
    return sampler::ZeroError{};
  }
  return std::nullopt;
}

// Rebuilds the generating instance from a header; the secret is re-derived
// from the seed and checked against the commitment.
inline RlweInstance
regenerate_instance(const SampleHeader& h)
{
  const auto err = error_from_header(h);
  if (!err) {
    throw std::invalid_argument("regenerate_instance: header has no error distribution");
  }
  RlweInstance inst = make_instance(ring_from_header(h), *err, h.seed);
  if (secret_hash(inst.secret, h.q) != h.secret_hash) {
    throw std::runtime_error("regenerate_instance: secret commitment does not match");
  }
  return inst;
}

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json
header_to_json(const SampleHeader& h)
{
  ordered_json j;
  j["schema_version"] = h.schema_version;
  j["ring_kind"] = h.ring_kind;
  if (h.p) {
    j["p"] = *h.p;
  }
  if (h.d) {
    j["d"] = *h.d;
  }
  if (h.m) {
    j["m"] = *h.m;
  }
  j["q"] = h.q;
  j["error_kind"] = h.error_kind;
  if (h.error_kind == "gaussian") {
    j["width_or_k"] = h.width_or_k;
  } else {
    j["width_or_k"] = static_cast<u64>(h.width_or_k);
  }
  j["seed"] = h.seed;
  j["count"] = h.count;
  j["secret_hash"] = h.secret_hash;
  return j;
}

inline SampleHeader
header_from_json(const nlohmann::json& j)
{
  SampleHeader h;
  h.schema_version = j.at("schema_version").get<int>();
  if (h.schema_version != kSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version " + std::to_string(h.schema_version));
  }
  h.ring_kind = j.at("ring_kind").get<std::string>();
  if (j.contains("p")) {
    h.p = j.at("p").get<u64>();
  }
  if (j.contains("d")) {
    h.d = j.at("d").get<i64>();
  }
  if (j.contains("m")) {
    h.m = j.at("m").get<u64>();
  }
  h.q = j.at("q").get<u64>();
  h.error_kind = j.at("error_kind").get<std::string>();
  h.width_or_k = j.at("width_or_k").get<double>();
  h.seed = j.at("seed").get<u64>();
  h.count = j.at("count").get<u64>();
  h.secret_hash = j.at("secret_hash").get<std::string>();
  return h;
}

inline RingElem
elem_from_json(const nlohmann::json& j, std::size_t deg, u64 q, std::size_t record, const char* key)
{
  if (!j.is_array()) {
    throw std::invalid_argument(std::string("record ") + std::to_string(record) + ": '" + key + "' is not an array");
  }
  if (j.size() != deg) {
    throw std::invalid_argument("record " + std::to_string(record) + ": '" + key + "' has length " +
                                std::to_string(j.size()) + ", expected " + std::to_string(deg));
  }
  RingElem x(deg);
  for (std::size_t i = 0; i < deg; ++i) {
    const i64 c = j[i].get<i64>();
    if (c < 0 || static_cast<u64>(c) >= q) {
      throw std::invalid_argument("record " + std::to_string(record) + ": coefficient out of range [0, q)");
    }
    x.coeffs[i] = c;
  }
  return x;
}

} // namespace detail

inline void
save(const SampleSet& set, std::ostream& out)
{
  out << detail::header_to_json(set.header).dump() << '\n';
  for (const auto& rec : set.records) {
    detail::ordered_json j;
    j["a"] = rec.a.coeffs;
    j["b"] = rec.b.coeffs;
    out << j.dump() << '\n';
  }
}

inline void
save(const SampleSet& set, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  save(set, out);
  if (!out) {
    throw std::runtime_error("write to '" + path + "' failed");
  }
}

inline SampleSet
load(std::istream& in)
{
  SampleSet set;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header");
  }
  ++lineno;
  std::size_t deg = 0;
  try {
    set.header = detail::header_from_json(nlohmann::json::parse(line));
    deg = ring::degree(ring_from_header(set.header));
  } catch (const std::exception& e) {
    throw ParseError(lineno, std::string("bad header: ") + e.what());
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const std::size_t index = set.records.size();
    try {
      const auto j = nlohmann::json::parse(line);
      set.records.push_back({ detail::elem_from_json(j.at("a"), deg, set.header.q, index, "a"),
                              detail::elem_from_json(j.at("b"), deg, set.header.q, index, "b") });
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (set.records.size() != set.header.count) {
    throw ParseError(lineno, "header count " + std::to_string(set.header.count) + " but " +
                               std::to_string(set.records.size()) + " records");
  }
  return set;
}

inline SampleSet
load(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  return load(in);
}

inline std::string
to_string(const SampleSet& set)
{
  std::ostringstream out;
  save(set, out);
  return out.str();
}

} // namespace rlwe::oracle
