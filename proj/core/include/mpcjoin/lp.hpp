#pragma once

// Small exact linear-programming toolkit over rationals. Every variable is
// implicitly non-negative.

#include <cstddef>
#include <vector>

#include "mpcjoin/rational.hpp"

namespace mpcjoin::lp {

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Constraint {
  std::vector<Rational> coefficients;
  Sense sense = Sense::kLessEqual;
  Rational rhs;
};

struct Problem {
  std::size_t num_variables = 0;
  std::vector<Constraint> constraints;
  std::vector<Rational> objective;
  bool maximize = true;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Solution {
  Status status = Status::kInfeasible;
  Rational value;
  std::vector<Rational> x;
};

// Two-phase simplex with Bland's rule; exact, never cycles.
Solution solve(const Problem& problem);

// Optimal value first, then among optimal points minimize x[order[0]],
// then x[order[1]], ... Returns the lexicographically smallest optimum.
Solution solve_lexicographic(const Problem& problem, const std::vector<std::size_t>& order);

// All vertices of {x >= 0 : constraints}, found by making num_variables
// constraints tight (drawn from the constraint rows and x_i = 0), solving
// exactly, and keeping feasible points. Sorted, deduplicated.
// Throws GuardError if C(rows + n, n) exceeds max_bases.
std::vector<std::vector<Rational>> enumerate_vertices(std::size_t num_variables,
                                                      const std::vector<Constraint>& constraints,
                                                      std::size_t max_bases = 20'000'000);

// Solves the square system A x = b; returns false if singular.
bool solve_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b, std::vector<Rational>& x);

}  // namespace mpcjoin::lp
