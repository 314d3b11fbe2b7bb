#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpcjoin {

struct Atom {
  std::string relation;
  std::vector<int> vars;  // indices into the query's variable list; repeats allowed

  std::size_t arity() const { return vars.size(); }
  // Distinct variables in first-occurrence order.
  std::vector<int> distinct_vars() const;
  bool contains(int var) const;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// A full conjunctive query without self-joins, viewed as a hypergraph.
// Immutable once built.
class ConjunctiveQuery {
 public:
  ConjunctiveQuery() = default;

  // Validates the invariants; throws QueryError. Variables never used by an
  // atom are rejected (the query must be full).
  static ConjunctiveQuery create(std::vector<std::string> variables, std::vector<Atom> atoms);

  std::size_t num_variables() const { return variables_.size(); }  // k
  std::size_t num_atoms() const { return atoms_.size(); }          // l
  std::size_t total_arity() const;                                  // a

  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& atom(std::size_t j) const { return atoms_[j]; }
  const std::string& variable(std::size_t i) const { return variables_[i]; }

  std::optional<int> find_variable(const std::string& name) const;
  std::optional<int> find_atom(const std::string& relation) const;
  // Atom indices containing variable i.
  std::vector<int> atoms_of(int var) const;

  // Subquery induced by the listed atoms (variables renumbered in the
  // original order).
  ConjunctiveQuery restrict_to(const std::vector<int>& atoms) const;

  std::string to_string() const;

  friend bool operator==(const ConjunctiveQuery&, const ConjunctiveQuery&) = default;

 private:
  std::vector<std::string> variables_;
  std::vector<Atom> atoms_;
};

struct SubqueryHandle {
  std::vector<int> atoms;      // sorted atom indices
  std::vector<int> variables;  // sorted union of the atoms' variables
  bool connected = false;
};

ConjunctiveQuery parse_query(const std::string& text);

// Shorthands used by the CLI and tests: C<k>, L<k>, T<k>, SP<k>, K<k>,
// B<k>_<m>, K4e (K_4 minus one edge). Anything else is parsed as query text.
ConjunctiveQuery named_query(const std::string& name_or_text);

ConjunctiveQuery cycle_query(int k);          // S1(x1,x2),...,Sk(xk,x1)
ConjunctiveQuery line_query(int k);           // S1(x0,x1),...,Sk(x{k-1},xk)
ConjunctiveQuery star_query(int k);           // S1(z,x1),...,Sk(z,xk)
ConjunctiveQuery star_path_query(int k);      // R_i(z,x_i), S_i(x_i,y_i)
ConjunctiveQuery clique_query(int k);         // one atom per variable pair
ConjunctiveQuery subset_query(int k, int m);  // one atom per m-subset of k variables

std::vector<SubqueryHandle> connected_components(const ConjunctiveQuery& q);
bool is_connected(const ConjunctiveQuery& q);
bool is_connected_subset(const ConjunctiveQuery& q, const std::vector<int>& atoms);

// chi(q) = a - k - l + c.
long characteristic(const ConjunctiveQuery& q);

// q/M: merges the variables of every connected component of M into the
// component's first variable and drops the atoms of M. Variables that no
// longer occur in any atom are dropped.
ConjunctiveQuery contract(const ConjunctiveQuery& q, const std::vector<int>& atoms);

bool is_tree_like(const ConjunctiveQuery& q);

struct RadiusDiameter {
  int radius = 0;
  int diameter = 0;
  int center = 0;  // first variable of minimum eccentricity
};
// Primal-graph distances; throws PreconditionError on disconnected q.
RadiusDiameter radius_diameter(const ConjunctiveQuery& q);
// Hop distances from one variable in the primal graph (-1 if unreachable).
std::vector<int> primal_distances(const ConjunctiveQuery& q, int source);

using SubqueryPredicate = std::function<bool(const SubqueryHandle&)>;
inline constexpr std::size_t kMaxEnumeratedAtoms = 20;

// All nonempty connected atom subsets, ordered by (size, atoms). With a
// predicate, only the satisfying subsets none of whose proper connected
// subsets satisfy it.
std::vector<SubqueryHandle> enumerate_connected_subqueries(const ConjunctiveQuery& q,
                                                           const SubqueryPredicate& minimal_filter = nullptr);

}  // namespace mpcjoin
