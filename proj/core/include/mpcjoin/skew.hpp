#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/rational.hpp"

namespace mpcjoin {

// Values of one variable whose frequency reaches m_j / p^e in some relation.
struct HeavyHitterCatalog {
  struct Entry {
    std::size_t atom = 0;
    std::string relation;
    std::uint64_t m = 0;
    std::vector<std::pair<Value, std::uint64_t>> hitters;  // ascending by value
  };

  std::string variable;
  int var = -1;
  std::uint64_t p = 1;
  Rational exponent = 1;     // threshold m_j / p^exponent, ties are heavy
  std::vector<Entry> entries;  // relations containing the variable, in atom order
  std::vector<Value> heavy;    // union over relations, ascending
  // Frequency of each heavy value in every atom (0 where the atom lacks it).
  std::map<Value, std::vector<std::uint64_t>> frequency;

  bool contains(Value v) const;
  std::size_t size() const { return heavy.size(); }
  std::string to_csv() const;
};

// freq * p^e >= m, compared exactly.
bool reaches_threshold(std::uint64_t freq, std::uint64_t m, std::uint64_t p, const Rational& exponent);

HeavyHitterCatalog detect_heavy_hitters(const ConjunctiveQuery& q, const Instance& instance,
                                        const std::string& variable, std::uint64_t p,
                                        const Rational& exponent = 1);
HeavyHitterCatalog detect_heavy_hitters(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                                        int var, std::uint64_t p, const Rational& exponent = 1);

// S_1(z, x_1), ..., S_l(z, x_l) with distinct private variables.
struct StarShape {
  int center = -1;
  std::vector<int> leaves;              // leaf variable of atom j
  std::vector<std::size_t> center_pos;  // position of z in atom j
};
StarShape star_shape(const ConjunctiveQuery& q);  // throws PreconditionError otherwise

struct StarAllocation {
  struct Pool {
    Value hitter = 0;
    std::vector<std::uint64_t> per_vertex;  // p_{h,u}, aligned with `vertices`
    std::uint64_t servers = 0;              // p_h
    std::uint64_t first_server = 0;         // offset in the virtual id space
    std::vector<std::uint64_t> m;           // m_j(h)
    std::vector<std::uint64_t> shares;      // per query variable, center share 1
  };

  StarShape shape;
  std::uint64_t p = 1;
  std::vector<std::vector<int>> vertices;  // pk(q_z) = {0,1}^l \ 0
  std::vector<Pool> pools;
  std::uint64_t light_servers = 0;         // the light pool occupies [0, p)
  std::uint64_t total_servers = 0;
  std::uint64_t server_budget = 0;         // (l + 1) |pk(q_z)| p

  double heavy_load_tuples = 0;  // max_I (sum_h prod_{j in I} m_j(h) / p)^{1/|I|}
  double heavy_load_bits = 0;
  double light_load_tuples = 0;  // max_j m_j / p
  double light_load_bits = 0;

  std::string to_json() const;
};

// max over nonempty I of (sum_h prod_{j in I} sizes[h][j] / p)^{1/|I|}.
double star_heavy_load(const std::vector<std::vector<double>>& sizes, std::uint64_t p);

StarAllocation star_skew_plan(const ConjunctiveQuery& q, const HeavyHitterCatalog& catalog, const Statistics& stats,
                              std::uint64_t p);

struct SkewRun {
  TupleSet output;
  LoadReport report;           // all virtual servers
  std::vector<std::string> case_names;
  std::vector<LoadReport> cases;  // per path, same relation order
};

SkewRun execute_star_skew(const ConjunctiveQuery& q, const Instance& instance, const StarAllocation& plan,
                          std::uint64_t seed);

// Triangle R(x,y), S(y,z), T(z,x) with the light / Case 1 / Case 2 split.
struct TrianglePrediction {
  double light = 0;                 // m / p^{2/3}
  std::vector<double> pair_terms;   // sqrt(sum_h m_a(h) m_b(h) / p) for x, y, z
  double total = 0;                 // max of the above
};

struct TriangleRun {
  SkewRun run;
  TrianglePrediction prediction_tuples;
  std::vector<std::uint64_t> outputs_per_case;  // light, case1 xy/yz/zx, case2 x/y/z
};

// Checks that q is a triangle (three binary atoms forming a 3-cycle).
TriangleRun triangle_skew_execute(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t p,
                                  std::uint64_t seed);

// x-statistics: for each atom, the frequency of every x-projection.
struct XStatistics {
  std::vector<int> x;                                  // sorted variable indices
  std::vector<std::vector<int>> atom_x;                // x-variables of atom j, in x order
  std::vector<std::map<std::vector<Value>, std::uint64_t>> frequency;  // per atom
  std::vector<std::size_t> arity;
  std::uint64_t n = 0;
};
XStatistics x_statistics(const ConjunctiveQuery& q, const Instance& instance, const std::vector<int>& x);

struct SkewLowerBound {
  double bits = 0;
  std::vector<Rational> witness;  // saturating packing vertex attaining the max
  double constant = 0;            // min_j (a_j - d_j) / (4 a_j)
};

// max over saturating packing vertices u of the residual query of
// constant * (sum_h prod_j M_j(h_j)^{u_j} / p)^{1/sum u}, in bits.
SkewLowerBound skew_lower_bound(const ConjunctiveQuery& q, const XStatistics& stats, std::uint64_t p);

}  // namespace mpcjoin
