#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"

namespace mpcjoin {

// One keyed hash per variable: h_i(v) = mulhi(mix64(seed_i ^ v), p_i).
class HashFamily {
 public:
  HashFamily(std::uint64_t seed, std::vector<std::uint64_t> ranges);

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& ranges() const { return ranges_; }
  std::uint64_t variable_seed(std::size_t var) const { return seeds_[var]; }
  std::uint64_t operator()(std::size_t var, Value v) const;

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> ranges_;
  std::vector<std::uint64_t> seeds_;
};

// Grid of prod p_i servers; id = mixed-radix number with variable 0 most
// significant.
std::uint64_t grid_size(const std::vector<std::uint64_t>& shares);
std::uint64_t server_id(const std::vector<std::uint64_t>& coordinates, const std::vector<std::uint64_t>& shares);
std::vector<std::uint64_t> server_coordinates(std::uint64_t id, const std::vector<std::uint64_t>& shares);

// Sorted server ids of the subcube that must receive tuple t of `atom`.
// Empty when a repeated variable hashes to two different coordinates.
std::vector<std::uint64_t> destination_subcube(const Atom& atom, std::span<const Value> t, const HashFamily& h);

// Received data per server and relation for one round.
struct LoadReport {
  std::string query;
  std::uint64_t p = 0;                       // nominal cluster size
  std::vector<std::uint64_t> shares;         // empty for non-grid rounds
  std::vector<std::string> relations;
  std::vector<std::size_t> arity;
  std::vector<std::uint64_t> input_tuples;   // m_j
  std::vector<std::uint64_t> sent;           // copies sent per relation
  std::uint64_t bits_per_value = 1;
  std::vector<std::vector<std::uint64_t>> tuples;  // [server][relation]
  std::string bound_id;
  double bound_bits = 0;

  static LoadReport empty(const std::vector<std::string>& relations, const std::vector<std::size_t>& arity,
                          std::uint64_t servers, std::uint64_t n);

  std::size_t servers() const { return tuples.size(); }
  std::uint64_t server_tuples(std::size_t s) const;
  std::uint64_t server_bits(std::size_t s) const;
  std::uint64_t max_tuples() const;           // total tuples on the busiest server
  std::uint64_t max_bits() const;
  std::uint64_t max_relation_tuples(std::size_t j) const;
  std::uint64_t max_relation_tuples() const;  // max over servers and relations
  std::vector<double> replication() const;    // sent_j / m_j

  // Adds `other` server-by-server (other may have fewer servers).
  void accumulate(const LoadReport& other, std::size_t server_offset = 0);

  std::string to_json() const;
  std::string to_csv() const;
};

struct OneRoundResult {
  TupleSet output;  // sorted, deduplicated
  LoadReport report;
};

// Routing only: counts what every server would receive.
LoadReport route_one_round(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations, std::uint64_t n,
                           const std::vector<std::uint64_t>& shares, std::uint64_t p, std::uint64_t seed);

// Routing plus local evaluation on each server's fragment. `threads` only
// changes wall time; outputs and reports are identical for any value.
OneRoundResult run_one_round(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                             std::uint64_t n, const std::vector<std::uint64_t>& shares, std::uint64_t p,
                             std::uint64_t seed, unsigned threads = 1, std::uint64_t budget = kDefaultJoinBudget);
OneRoundResult run_one_round(const ConjunctiveQuery& q, const Instance& instance, const ShareAssignment& shares,
                             std::uint64_t seed, unsigned threads = 1);

std::vector<const Relation*> relation_pointers(const Instance& instance);

}  // namespace mpcjoin
