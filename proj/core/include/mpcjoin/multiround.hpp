#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/rational.hpp"

namespace mpcjoin {

struct Gamma1Params {
  std::uint64_t k_eps = 0;  // 2 floor(1 / (1 - eps)), longest path in Gamma^1
  std::uint64_t m_eps = 0;  // floor(2 / (1 - eps))
};
Gamma1Params gamma1_params(const Rational& eps);

// tau*(q) <= 1 / (1 - eps), exactly.
bool in_gamma1(const ConjunctiveQuery& q, const Rational& eps);

// Atom order along a path (L_k shape) or a cycle (C_k shape) of binary
// atoms; nullopt for other shapes.
std::optional<std::vector<int>> path_order(const ConjunctiveQuery& q);
std::optional<std::vector<int>> cycle_order(const ConjunctiveQuery& q);

// One operator of a multi-round plan: a query over base atoms and views of
// earlier nodes, evaluated in one HyperCube round.
struct PlanNode {
  int id = 0;
  int round = 1;
  // Inputs in atom order of `query`: node id >= 0 for a view, -(j + 1) for base atom j.
  std::vector<int> inputs;
  ConjunctiveQuery query;             // variables named after q's, ascending by q index
  std::vector<int> variables;         // q variable indices of the output, ascending
  std::vector<int> base_atoms;        // atoms of q this node's view expands to, ascending
  Rational tau;                       // tau* of `query`
  std::vector<Rational> exponents;    // equal-size share exponents
};

struct MultiRoundPlan {
  ConjunctiveQuery q;
  Rational eps;
  std::string construction;  // direct, fold, centre-paths
  std::vector<PlanNode> nodes;  // topological order; the root is last
  int depth = 0;

  const PlanNode& root() const { return nodes.back(); }
  std::string to_json() const;
};

// Shallowest of: one round when q is in Gamma^1; k_eps-block folding of a
// path or cycle; centre/BFS path decomposition with a final join on the
// centre. Throws PreconditionError for disconnected q.
MultiRoundPlan build_plan(const ConjunctiveQuery& q, const Rational& eps);
// The centre/path construction alone.
MultiRoundPlan build_centre_plan(const ConjunctiveQuery& q, const Rational& eps);

// Substitutes views by their definitions: the atoms of q covered by the root.
std::vector<int> expand_root(const MultiRoundPlan& plan);

struct RoundReport {
  int round = 0;
  std::vector<int> nodes;
  LoadReport load;  // per-server loads summed over the round's nodes
};

struct PlanExecution {
  TupleSet output;  // over q's variables, sorted
  std::vector<RoundReport> rounds;
  std::vector<std::uint64_t> view_sizes;  // per node
};

// Every round's nodes share the same p servers. Shares per node come from
// the share LP on measured input sizes.
PlanExecution execute_plan(const MultiRoundPlan& plan, const Instance& instance, std::uint64_t p, std::uint64_t seed,
                           std::uint64_t budget = kDefaultJoinBudget);

// r(q): ceil(log_k rad) + 1 for tree-like q, floor(log_k rad) + 2 otherwise.
int rounds_upper_formula(const ConjunctiveQuery& q, const Rational& eps);
// min(r(q), depth of build_plan).
int rounds_upper(const ConjunctiveQuery& q, const Rational& eps);

struct RoundsLower {
  int rounds = 0;
  std::string shape;  // gamma1, line, cycle, tree-like, general
  bool weak = false;  // general shapes: diameter bound only, not a certificate
};
RoundsLower rounds_lower(const ConjunctiveQuery& q, const Rational& eps);

// Chain atoms(q) = M_0 > M_1 > ... > M_r of atom indices of q.
struct EpsRPlan {
  ConjunctiveQuery q;
  Rational eps;
  std::vector<std::vector<int>> chain;  // M_1 .. M_r, each ascending

  int r() const { return static_cast<int>(chain.size()); }
  std::vector<int> level_atoms(int j) const;  // M_j
  ConjunctiveQuery level(int j) const;        // q / complement(M_j)
  std::string to_json() const;
};

EpsRPlan build_er_plan(const ConjunctiveQuery& q, const Rational& eps);

struct PlanValidation {
  bool valid = false;
  int level = -1;
  std::string violation;
};
PlanValidation validate_er_plan(const EpsRPlan& plan);

struct BetaCertificate {
  Rational tau_m;   // tau*(M)
  double beta = 0;
  double fraction = 0;  // beta ((r + 1) L / M)^{tau*(M)} p
  int r = 0;
};
BetaCertificate beta_certificate(const EpsRPlan& plan, double load_bits, double size_bits, std::uint64_t p);

}  // namespace mpcjoin
