#pragma once

#include <cstdint>
#include <vector>

#include "mpcjoin/instance.hpp"

namespace mpcjoin {

// h(x) = (1 + x) ln(1 + x) - x.
double chernoff_h(double x);

// P(max bin weight >= (1 + delta) m / K) <= K exp(-h(delta) / beta), for
// weights capped at beta m / K.
double tail_bound_balls(std::uint64_t K, double beta, double delta);

// f(p, r, beta) = 2p sum_{j=1..r} prod_{u<j} (1/beta + 1/p_u), r = shares.size().
double hypercube_f(const std::vector<std::uint64_t>& shares, double beta);
// P(max bin > (1 + delta)^r m / p) <= f(p, r, beta) exp(-h(delta) / beta).
double tail_bound_hypercube(const std::vector<std::uint64_t>& shares, double beta, double delta);

struct ExceedanceRow {
  double delta = 0;
  double threshold = 0;  // load the event compares against
  double empirical = 0;  // fraction of trials exceeding it
  double bound = 0;      // calculator value
};

struct MaxLoadExperiment {
  std::vector<double> max_load;  // per trial
  std::vector<ExceedanceRow> rows;
  std::vector<std::uint64_t> trial_seeds;
};

// Hashes weighted balls into K bins `trials` times, each with a fresh
// derived seed. Throws PreconditionError if some weight exceeds beta m / K
// with m = total weight.
MaxLoadExperiment empirical_balls(const std::vector<double>& weights, std::uint64_t K, double beta,
                                  const std::vector<double>& deltas, std::size_t trials, std::uint64_t seed);

// Largest degree d_J over every nonempty column subset U, checked against
// beta^|U| m / p_U. Returns false when the promise fails.
bool hypercube_degree_promise(const Relation& r, const std::vector<std::uint64_t>& shares, double beta);

// HyperCube partition of r (one share per column) repeated with fresh hashes.
// Throws PreconditionError when the degree promise fails.
MaxLoadExperiment empirical_hypercube(const Relation& r, const std::vector<std::uint64_t>& shares, double beta,
                                      const std::vector<double>& deltas, std::size_t trials, std::uint64_t seed);

// Inclusive grid lo, lo + step, ..., <= hi (with a small tolerance).
std::vector<double> delta_grid(double lo, double hi, double step);

}  // namespace mpcjoin
