#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpcjoin/query.hpp"
#include "mpcjoin/rational.hpp"

namespace mpcjoin {

// Fractional edge packing: one weight per atom, every variable's atoms sum
// to at most 1.
struct PackingVector {
  std::vector<Rational> weights;
  bool tight = false;  // every variable constraint holds with equality

  Rational total() const;
  friend bool operator==(const PackingVector&, const PackingVector&) = default;
};

inline constexpr std::size_t kMaxPackingEnumeration = 24;  // bound on k + l

// Vertices of the packing polytope, sorted, including the zero vector.
// Throws GuardError when k + l exceeds kMaxPackingEnumeration.
std::vector<PackingVector> packing_vertices(const ConjunctiveQuery& q);

// tau*: maximum total packing weight (= fractional vertex cover number).
Rational tau_star(const ConjunctiveQuery& q);
// Optimal fractional vertex cover, one weight per variable.
std::vector<Rational> optimal_vertex_cover(const ConjunctiveQuery& q);
// rho*: minimum fractional edge cover. Informational only.
Rational edge_cover_number(const ConjunctiveQuery& q);

// Per-atom input sizes. Bits follow M_j = a_j * m_j * ceil(log2 n).
struct Statistics {
  std::vector<std::uint64_t> m;
  std::vector<std::size_t> arity;
  std::uint64_t n = 0;

  static Statistics of(const ConjunctiveQuery& q, std::vector<std::uint64_t> m, std::uint64_t n);
  static Statistics equal(const ConjunctiveQuery& q, std::uint64_t m, std::uint64_t n);

  std::uint64_t bits_per_value() const;
  double bits(std::size_t j) const;
  std::vector<double> bits() const;
};

// L(u, M, p) = (prod M_j^{u_j} / p)^{1 / sum u}; zero vector gives 0.
double load_formula(const std::vector<Rational>& u, const std::vector<double>& sizes, double p);

struct ShareAssignment {
  std::uint64_t p = 1;
  std::vector<Rational> exponents;     // per variable
  std::vector<std::uint64_t> shares;   // per variable, product <= p
  Rational lambda;                     // optimal log_p load
  double load = 0;                     // p^lambda in the units of the input sizes
  std::vector<Rational> witness;       // maximizing packing vertex (may be empty)

  std::uint64_t servers() const;
};

// max(1, floor(p^{e_i})), then repeatedly bump the share with the largest
// deficit p^{e_i}/p_i (> 1) whose increment keeps the product <= p.
std::vector<std::uint64_t> round_shares(const std::vector<Rational>& exponents, std::uint64_t p);

// Skew-free share LP: min lambda s.t. sum_{i in S_j} e_i + lambda >= mu_j,
// sum e_i <= 1. Requires M_j >= p and p >= 2.
ShareAssignment optimize_shares_skewfree(const ConjunctiveQuery& q, const Statistics& stats, std::uint64_t p);
// Same LP on explicit sizes (any unit).
ShareAssignment optimize_shares_skewfree(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                         std::uint64_t p);
// Exact variant on mu_j = log_p M_j given as rationals; no rounding to shares
// beyond round_shares. enforce_mu_at_least_one mirrors the M_j >= p rule;
// with_witness = false skips the packing-vertex enumeration.
ShareAssignment optimize_shares_exact(const ConjunctiveQuery& q, const std::vector<Rational>& mu, std::uint64_t p,
                                      bool enforce_mu_at_least_one = true, bool with_witness = true);
// Share LP for residual or intermediate relations that may be smaller than
// p; the witness search is skipped.
ShareAssignment optimize_shares_relaxed(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                        std::uint64_t p);

// Skew-oblivious LP: min lambda s.t. h_j + lambda >= mu_j, e_i >= h_j for
// i in S_j, sum e_i <= 1. The load guarantee is max_j M_j / min_{i in S_j} p_i.
ShareAssignment optimize_shares_skew_oblivious(const ConjunctiveQuery& q, const Statistics& stats, std::uint64_t p);
ShareAssignment optimize_shares_skew_oblivious(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                               std::uint64_t p);

// Builds an assignment from explicit integer shares (exponents log_p p_i).
ShareAssignment fixed_shares(const ConjunctiveQuery& q, std::vector<std::uint64_t> shares, std::uint64_t p);

// E|q(I)| = n^{k-a} prod m_j over random matching databases.
double expected_output_size(const ConjunctiveQuery& q, const Statistics& stats);

// (c L / sum M_j) * max_u prod (M_j / L)^{u_j}, c = max_u (sum u / 4)^{sum u}.
double replication_lower_bound(const ConjunctiveQuery& q, const Statistics& stats, double load_bits);

}  // namespace mpcjoin
