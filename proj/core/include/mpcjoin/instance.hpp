#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"

namespace mpcjoin {

using Value = std::uint32_t;

// Row-major set of tuples of one arity.
struct Relation {
  std::string name;
  std::size_t arity = 0;
  std::vector<Value> data;

  std::size_t size() const { return arity == 0 ? 0 : data.size() / arity; }
  std::span<const Value> tuple(std::size_t i) const { return {data.data() + i * arity, arity}; }
  void add(std::span<const Value> t) { data.insert(data.end(), t.begin(), t.end()); }
  bool has_duplicates() const;
};

// One relation per atom, aligned with the query's atom order.
struct Instance {
  std::vector<Relation> relations;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;

  const Relation& operator[](std::size_t j) const { return relations[j]; }
  std::vector<std::uint64_t> sizes() const;
  Statistics statistics(const ConjunctiveQuery& q) const;
};

// splitmix64 finalizer and per-index sub-seed derivation.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// a-dimensional matching of m tuples: each column is an independent uniform
// injection [m] -> [n].
Relation random_matching_relation(const std::string& name, std::size_t arity, std::uint64_t m, std::uint64_t n,
                                  std::uint64_t seed);
Instance random_matching_db(const ConjunctiveQuery& q, const Statistics& stats, std::uint64_t seed);

// Column distribution for skewed_db.
struct ColumnSpec {
  enum class Kind { kMatching, kConstant, kZipf, kHeavy };
  Kind kind = Kind::kMatching;
  Value constant = 0;
  double zipf_exponent = 1.0;
  std::size_t zipf_values = 0;
  // kHeavy: exact (value, frequency) placements; other rows take distinct
  // fresh values.
  std::vector<std::pair<Value, std::uint64_t>> heavy;

  static ColumnSpec matching() { return {}; }
  static ColumnSpec constant_value(Value h);
  static ColumnSpec zipf(double s, std::size_t values);
  static ColumnSpec heavy_hitters(std::vector<std::pair<Value, std::uint64_t>> placements);
};
using SkewSpec = std::vector<std::vector<ColumnSpec>>;  // [atom][position]

// Instance realizing the per-column distributions; duplicate tuples are
// resampled on the resamplable (zipf) columns.
Instance skewed_db(const ConjunctiveQuery& q, const Statistics& stats, const SkewSpec& spec, std::uint64_t seed);

struct DegreeProfile {
  std::vector<std::size_t> positions;
  std::map<std::vector<Value>, std::uint64_t> frequency;
  std::uint64_t max_degree = 0;

  // {J : d_J >= threshold}, ascending by J.
  std::vector<std::pair<std::vector<Value>, std::uint64_t>> at_least(std::uint64_t threshold) const;
};
DegreeProfile degree_profile(const Relation& r, const std::vector<std::size_t>& positions);

struct PaleyZygmundResult {
  double mu = 0;         // expected output size
  double empirical = 0;  // P(|q(I)| > alpha mu)
  double bound = 0;      // (1 - alpha)^2 mu / (mu + 1)
  double sigma = 0;      // binomial standard error at the bound
  bool pass = false;
};
PaleyZygmundResult paley_zygmund_check(const ConjunctiveQuery& q, const Statistics& stats, double alpha,
                                       std::size_t trials, std::uint64_t seed);

// "# name arity m n" header, then one space-separated tuple per line.
void write_relation(std::ostream& out, const Relation& r, std::uint64_t n);
Relation read_relation(std::istream& in, std::uint64_t* n = nullptr);

}  // namespace mpcjoin
