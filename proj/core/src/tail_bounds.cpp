#include "mpcjoin/tail_bounds.hpp"

#include <algorithm>
#include <cmath>

#include "mpcjoin/error.hpp"
#include "mpcjoin/hypercube.hpp"

namespace mpcjoin {

double chernoff_h(double x) { return (1 + x) * std::log1p(x) - x; }

double tail_bound_balls(std::uint64_t K, double beta, double delta) {
  if (K < 2) throw PreconditionError("balls-in-bins bound needs K >= 2");
  if (!(beta > 0)) throw PreconditionError("beta must be positive");
  if (!(delta > 0)) throw PreconditionError("delta must be positive");
  return static_cast<double>(K) * std::exp(-chernoff_h(delta) / beta);
}

double hypercube_f(const std::vector<std::uint64_t>& shares, double beta) {
  if (shares.empty()) throw PreconditionError("hypercube bound needs r >= 1");
  if (!(beta > 0)) throw PreconditionError("beta must be positive");
  double p = 1;
  for (auto s : shares) {
    if (s < 1) throw PreconditionError("shares must be >= 1");
    p *= static_cast<double>(s);
  }
  double sum = 0;
  double prod = 1;
  for (std::size_t j = 0; j < shares.size(); ++j) {
    sum += prod;
    prod *= 1 / beta + 1 / static_cast<double>(shares[j]);
  }
  return 2 * p * sum;
}

double tail_bound_hypercube(const std::vector<std::uint64_t>& shares, double beta, double delta) {
  if (delta < 0) throw PreconditionError("delta must be non-negative");
  return hypercube_f(shares, beta) * std::exp(-chernoff_h(delta) / beta);
}

std::vector<double> delta_grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw PreconditionError("delta grid needs lo <= hi and step > 0");
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    double d = lo + static_cast<double>(i) * step;
    if (d > hi + step * 1e-9) break;
    out.push_back(d);
  }
  return out;
}

MaxLoadExperiment empirical_balls(const std::vector<double>& weights, std::uint64_t K, double beta,
                                  const std::vector<double>& deltas, std::size_t trials, std::uint64_t seed) {
  if (K < 2) throw PreconditionError("balls-in-bins needs K >= 2");
  double m = 0;
  double heaviest = 0;
  for (double w : weights) {
    if (w < 0) throw PreconditionError("weights must be non-negative");
    m += w;
    heaviest = std::max(heaviest, w);
  }
  const double cap = beta * m / static_cast<double>(K);
  if (heaviest > cap * (1 + 1e-12)) {
    throw PreconditionError("weight cap violated: max weight " + std::to_string(heaviest) + " > beta m / K = " +
                            std::to_string(cap));
  }
  MaxLoadExperiment ex;
  std::vector<double> bins(K);
  for (std::size_t t = 0; t < trials; ++t) {
    std::uint64_t s = derive_seed(seed, t);
    ex.trial_seeds.push_back(s);
    HashFamily h(s, {K});
    std::fill(bins.begin(), bins.end(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) bins[h(0, static_cast<Value>(i))] += weights[i];
    ex.max_load.push_back(*std::max_element(bins.begin(), bins.end()));
  }
  for (double d : deltas) {
    ExceedanceRow row;
    row.delta = d;
    row.threshold = (1 + d) * m / static_cast<double>(K);
    std::size_t hits = std::count_if(ex.max_load.begin(), ex.max_load.end(),
                                     [&](double x) { return x >= row.threshold * (1 - 1e-12); });
    row.empirical = static_cast<double>(hits) / static_cast<double>(trials);
    row.bound = d > 0 ? tail_bound_balls(K, beta, d) : static_cast<double>(K);
    ex.rows.push_back(row);
  }
  return ex;
}

bool hypercube_degree_promise(const Relation& r, const std::vector<std::uint64_t>& shares, double beta) {
  const std::size_t arity = r.arity;
  if (shares.size() != arity) throw PreconditionError("need one share per column");
  const double m = static_cast<double>(r.size());
  for (std::uint32_t mask = 1; mask < (1u << arity); ++mask) {
    std::vector<std::size_t> cols;
    double pu = 1;
    for (std::size_t c = 0; c < arity; ++c) {
      if (mask & (1u << c)) {
        cols.push_back(c);
        pu *= static_cast<double>(shares[c]);
      }
    }
    double limit = std::pow(beta, static_cast<double>(cols.size())) * m / pu;
    if (static_cast<double>(degree_profile(r, cols).max_degree) > limit) return false;
  }
  return true;
}

MaxLoadExperiment empirical_hypercube(const Relation& r, const std::vector<std::uint64_t>& shares, double beta,
                                      const std::vector<double>& deltas, std::size_t trials, std::uint64_t seed) {
  if (!hypercube_degree_promise(r, shares, beta)) {
    throw PreconditionError("degree promise d_J <= beta^|U| m / p_U fails for relation " + r.name);
  }
  const std::uint64_t p = grid_size(shares);
  const double m = static_cast<double>(r.size());
  const double rr = static_cast<double>(shares.size());
  MaxLoadExperiment ex;
  std::vector<std::uint64_t> bins(p);
  for (std::size_t t = 0; t < trials; ++t) {
    std::uint64_t s = derive_seed(seed, t);
    ex.trial_seeds.push_back(s);
    HashFamily h(s, shares);
    std::fill(bins.begin(), bins.end(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto tup = r.tuple(i);
      std::uint64_t id = 0;
      for (std::size_t c = 0; c < r.arity; ++c) id = id * shares[c] + h(c, tup[c]);
      ++bins[id];
    }
    ex.max_load.push_back(static_cast<double>(*std::max_element(bins.begin(), bins.end())));
  }
  for (double d : deltas) {
    ExceedanceRow row;
    row.delta = d;
    row.threshold = std::pow(1 + d, rr) * m / static_cast<double>(p);
    std::size_t hits = std::count_if(ex.max_load.begin(), ex.max_load.end(), [&](double x) { return x > row.threshold; });
    row.empirical = static_cast<double>(hits) / static_cast<double>(trials);
    row.bound = tail_bound_hypercube(shares, beta, d);
    ex.rows.push_back(row);
  }
  return ex;
}

}  // namespace mpcjoin
