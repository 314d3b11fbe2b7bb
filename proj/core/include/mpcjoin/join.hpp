#pragma once

#include <cstdint>
#include <vector>

#include "mpcjoin/instance.hpp"
#include "mpcjoin/query.hpp"

namespace mpcjoin {

// Output tuples over the query's variables, row-major.
struct TupleSet {
  std::size_t width = 0;
  std::vector<Value> data;

  std::size_t size() const { return width == 0 ? 0 : data.size() / width; }
  void append(const TupleSet& other) { data.insert(data.end(), other.data.begin(), other.data.end()); }
  void sort_unique();
  friend bool operator==(const TupleSet&, const TupleSet&) = default;
};

inline constexpr std::uint64_t kDefaultJoinBudget = 100'000'000;

// Backtracking join over atoms in a connected order, probing sorted indexes
// on the already-bound variables. relations[j] feeds atom j. Throws
// GuardError when more than `budget` partial bindings are explored.
TupleSet evaluate_join(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                       std::uint64_t budget = kDefaultJoinBudget);
std::uint64_t count_join(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                         std::uint64_t budget = kDefaultJoinBudget);

// Ground truth q(I), sorted and deduplicated.
TupleSet oracle_eval(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t budget = kDefaultJoinBudget);
std::uint64_t oracle_count(const ConjunctiveQuery& q, const Instance& instance,
                           std::uint64_t budget = kDefaultJoinBudget);

}  // namespace mpcjoin
