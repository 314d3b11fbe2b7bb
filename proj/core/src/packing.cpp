#include "mpcjoin/packing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpcjoin/error.hpp"
#include "mpcjoin/lp.hpp"

namespace mpcjoin {
namespace {

std::vector<lp::Constraint> packing_constraints(const ConjunctiveQuery& q) {
  std::vector<lp::Constraint> rows;
  for (std::size_t i = 0; i < q.num_variables(); ++i) {
    lp::Constraint c;
    c.coefficients.assign(q.num_atoms(), Rational(0));
    for (int j : q.atoms_of(static_cast<int>(i))) c.coefficients[static_cast<std::size_t>(j)] = 1;
    c.sense = lp::Sense::kLessEqual;
    c.rhs = 1;
    rows.push_back(std::move(c));
  }
  return rows;
}

Rational sum(const std::vector<Rational>& v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

double checked_log(double x) {
  if (!(x > 0)) throw PreconditionError("sizes must be positive");
  return std::log(x);
}

std::vector<Rational> mu_from_sizes(const std::vector<double>& sizes, std::uint64_t p, bool clamp_small) {
  std::vector<Rational> mu;
  for (double m : sizes) {
    double v = clamp_small ? std::max(m, 1.0) : m;
    mu.push_back(rational_from_double(checked_log(v) / std::log(static_cast<double>(p))));
  }
  return mu;
}

// Primal share LP over (e_0..e_{k-1}, lambda).
lp::Problem share_lp(const ConjunctiveQuery& q, const std::vector<Rational>& mu) {
  const std::size_t k = q.num_variables();
  lp::Problem prob;
  prob.num_variables = k + 1;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    lp::Constraint c;
    c.coefficients.assign(k + 1, Rational(0));
    for (int v : q.atom(j).distinct_vars()) c.coefficients[static_cast<std::size_t>(v)] = 1;
    c.coefficients[k] = 1;
    c.sense = lp::Sense::kGreaterEqual;
    c.rhs = mu[j];
    prob.constraints.push_back(std::move(c));
  }
  lp::Constraint budget;
  budget.coefficients.assign(k + 1, Rational(1));
  budget.coefficients[k] = 0;
  budget.rhs = 1;
  prob.constraints.push_back(std::move(budget));
  prob.objective.assign(k + 1, Rational(0));
  prob.objective[k] = 1;
  prob.maximize = false;
  return prob;
}

std::vector<std::size_t> first_n(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

// Uniform exponents when every variable has the same degree and 1/k is optimal.
bool uniform_is_optimal(const ConjunctiveQuery& q, const std::vector<Rational>& mu, const Rational& lambda) {
  const std::size_t k = q.num_variables();
  std::size_t deg0 = q.atoms_of(0).size();
  for (std::size_t i = 1; i < k; ++i) {
    if (q.atoms_of(static_cast<int>(i)).size() != deg0) return false;
  }
  Rational worst = 0;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    Rational need = mu[j] - Rational(q.atom(j).distinct_vars().size(), k);
    worst = std::max(worst, need);
  }
  return worst == lambda;
}

ShareAssignment solve_shares(const ConjunctiveQuery& q, const std::vector<Rational>& mu, std::uint64_t p,
                             bool with_witness) {
  if (q.num_atoms() == 0) throw PreconditionError("share optimization needs at least one atom");
  const std::size_t k = q.num_variables();
  ShareAssignment out;
  out.p = p;
  if (p <= 1) {
    out.exponents.assign(k, Rational(0));
    out.shares.assign(k, 1);
    out.lambda = 0;
    for (const auto& m : mu) out.lambda = std::max(out.lambda, m);
    out.load = 1;
    return out;
  }
  lp::Problem prob = share_lp(q, mu);
  lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) throw Error("share LP did not reach an optimum");
  out.lambda = sol.value;
  if (uniform_is_optimal(q, mu, out.lambda)) {
    out.exponents.assign(k, Rational(1, k));
  } else {
    lp::Solution lex = lp::solve_lexicographic(prob, first_n(k));
    out.exponents.assign(lex.x.begin(), lex.x.begin() + static_cast<std::ptrdiff_t>(k));
  }
  out.shares = round_shares(out.exponents, p);
  out.load = std::pow(static_cast<double>(p), to_double(out.lambda));

  if (with_witness && q.num_variables() + q.num_atoms() <= kMaxPackingEnumeration) {
    // max over pk(q) of (sum u_j mu_j - 1) / sum u_j, lexicographically
    // smallest maximizer within a 1e-12 relative window.
    auto vertices = packing_vertices(q);
    std::vector<std::pair<Rational, const PackingVector*>> scored;
    Rational best;
    bool have = false;
    for (const auto& u : vertices) {
      Rational total = u.total();
      if (total == 0) continue;
      Rational s = 0;
      for (std::size_t j = 0; j < u.weights.size(); ++j) s += u.weights[j] * mu[j];
      Rational value = (s - 1) / total;
      scored.emplace_back(value, &u);
      if (!have || value > best) {
        best = value;
        have = true;
      }
    }
    double window = 1e-12 * std::max(1.0, std::abs(to_double(best)));
    for (const auto& [value, u] : scored) {
      if (to_double(best - value) <= window) {
        out.witness = u->weights;
        break;  // vertices are sorted ascending
      }
    }
  }
  return out;
}

}  // namespace

Rational PackingVector::total() const { return sum(weights); }

std::vector<PackingVector> packing_vertices(const ConjunctiveQuery& q) {
  if (q.num_variables() + q.num_atoms() > kMaxPackingEnumeration) {
    throw GuardError("packing vertex enumeration limited to k + l <= " + std::to_string(kMaxPackingEnumeration));
  }
  auto rows = packing_constraints(q);
  auto points = lp::enumerate_vertices(q.num_atoms(), rows);
  std::vector<PackingVector> out;
  for (auto& x : points) {
    PackingVector u;
    u.weights = std::move(x);
    u.tight = std::all_of(rows.begin(), rows.end(), [&](const lp::Constraint& c) {
      Rational lhs = 0;
      for (std::size_t j = 0; j < u.weights.size(); ++j) lhs += c.coefficients[j] * u.weights[j];
      return lhs == 1;
    });
    out.push_back(std::move(u));
  }
  return out;
}

Rational tau_star(const ConjunctiveQuery& q) {
  if (q.num_atoms() == 0) return 0;
  lp::Problem prob;
  prob.num_variables = q.num_atoms();
  prob.constraints = packing_constraints(q);
  prob.objective.assign(q.num_atoms(), Rational(1));
  prob.maximize = true;
  return lp::solve(prob).value;
}

std::vector<Rational> optimal_vertex_cover(const ConjunctiveQuery& q) {
  lp::Problem prob;
  prob.num_variables = q.num_variables();
  for (const auto& a : q.atoms()) {
    lp::Constraint c;
    c.coefficients.assign(q.num_variables(), Rational(0));
    for (int v : a.distinct_vars()) c.coefficients[static_cast<std::size_t>(v)] = 1;
    c.sense = lp::Sense::kGreaterEqual;
    c.rhs = 1;
    prob.constraints.push_back(std::move(c));
  }
  prob.objective.assign(q.num_variables(), Rational(1));
  prob.maximize = false;
  return lp::solve_lexicographic(prob, first_n(q.num_variables())).x;
}

Rational edge_cover_number(const ConjunctiveQuery& q) {
  lp::Problem prob;
  prob.num_variables = q.num_atoms();
  for (auto c : packing_constraints(q)) {
    c.sense = lp::Sense::kGreaterEqual;
    prob.constraints.push_back(std::move(c));
  }
  prob.objective.assign(q.num_atoms(), Rational(1));
  prob.maximize = false;
  return lp::solve(prob).value;
}

Statistics Statistics::of(const ConjunctiveQuery& q, std::vector<std::uint64_t> m, std::uint64_t n) {
  if (m.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  Statistics s;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] < 1) throw PreconditionError("relation sizes must be >= 1");
    s.arity.push_back(q.atom(j).arity());
  }
  if (n < *std::max_element(m.begin(), m.end())) throw PreconditionError("domain size n must be >= every m_j");
  s.m = std::move(m);
  s.n = n;
  return s;
}

Statistics Statistics::equal(const ConjunctiveQuery& q, std::uint64_t m, std::uint64_t n) {
  return of(q, std::vector<std::uint64_t>(q.num_atoms(), m), n);
}

std::uint64_t Statistics::bits_per_value() const {
  std::uint64_t b = 0;
  while ((std::uint64_t{1} << b) < n && b < 63) ++b;
  return std::max<std::uint64_t>(b, 1);
}

double Statistics::bits(std::size_t j) const {
  return static_cast<double>(arity[j]) * static_cast<double>(m[j]) * static_cast<double>(bits_per_value());
}

std::vector<double> Statistics::bits() const {
  std::vector<double> out;
  for (std::size_t j = 0; j < m.size(); ++j) out.push_back(bits(j));
  return out;
}

double load_formula(const std::vector<Rational>& u, const std::vector<double>& sizes, double p) {
  Rational total = sum(u);
  if (total == 0) return 0;
  double log_num = -std::log(p);
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] != 0) log_num += to_double(u[j]) * checked_log(sizes[j]);
  }
  return std::exp(log_num / to_double(total));
}

std::uint64_t ShareAssignment::servers() const {
  std::uint64_t prod = 1;
  for (auto s : shares) prod *= s;
  return prod;
}

std::vector<std::uint64_t> round_shares(const std::vector<Rational>& exponents, std::uint64_t p) {
  std::vector<std::uint64_t> shares;
  std::vector<double> target;
  unsigned __int128 product = 1;
  for (const auto& e : exponents) {
    std::uint64_t s = std::max<std::uint64_t>(1, floor_power(p, e));
    shares.push_back(s);
    target.push_back(std::pow(static_cast<double>(p), to_double(e)));
    product *= s;
  }
  if (product > p) {
    // Only possible through floating error on irrational targets.
    throw Error("share rounding exceeded the server budget");
  }
  for (;;) {
    std::size_t best = shares.size();
    double best_deficit = 1.0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
      double deficit = target[i] / static_cast<double>(shares[i]);
      if (deficit <= best_deficit) continue;
      unsigned __int128 grown = product / shares[i] * (shares[i] + 1);
      if (grown > p) continue;
      best = i;
      best_deficit = deficit;
    }
    if (best == shares.size()) break;
    product = product / shares[best] * (shares[best] + 1);
    ++shares[best];
  }
  return shares;
}

ShareAssignment optimize_shares_exact(const ConjunctiveQuery& q, const std::vector<Rational>& mu, std::uint64_t p,
                                      bool enforce_mu_at_least_one, bool with_witness) {
  if (mu.size() != q.num_atoms()) throw PreconditionError("need one log-size per atom");
  if (enforce_mu_at_least_one) {
    if (p < 2) throw PreconditionError("share optimization needs p >= 2");
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (mu[j] < 1) {
        throw PreconditionError("relation " + q.atom(j).relation + " is smaller than p (M_j >= p required)");
      }
    }
  }
  return solve_shares(q, mu, p, with_witness);
}

ShareAssignment optimize_shares_skewfree(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                         std::uint64_t p) {
  if (sizes.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  if (p < 2) throw PreconditionError("share optimization needs p >= 2");
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j] < static_cast<double>(p)) {
      throw PreconditionError("relation " + q.atom(j).relation + " has M_j = " + std::to_string(sizes[j]) +
                              " < p = " + std::to_string(p) + " (M_j >= p required)");
    }
  }
  ShareAssignment out = solve_shares(q, mu_from_sizes(sizes, p, false), p, true);
  if (!out.witness.empty()) out.load = load_formula(out.witness, sizes, static_cast<double>(p));
  return out;
}

ShareAssignment optimize_shares_skewfree(const ConjunctiveQuery& q, const Statistics& stats, std::uint64_t p) {
  return optimize_shares_skewfree(q, stats.bits(), p);
}

ShareAssignment optimize_shares_relaxed(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                        std::uint64_t p) {
  if (sizes.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  if (p <= 1) return solve_shares(q, std::vector<Rational>(q.num_atoms(), Rational(0)), 1, false);
  return solve_shares(q, mu_from_sizes(sizes, p, true), p, false);
}

ShareAssignment optimize_shares_skew_oblivious(const ConjunctiveQuery& q, const std::vector<double>& sizes,
                                               std::uint64_t p) {
  if (sizes.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  if (p < 2) throw PreconditionError("share optimization needs p >= 2");
  auto mu = mu_from_sizes(sizes, p, false);
  const std::size_t k = q.num_variables();
  const std::size_t l = q.num_atoms();
  // Variables: e_0..e_{k-1}, h_0..h_{l-1}, lambda.
  const std::size_t n = k + l + 1;
  lp::Problem prob;
  prob.num_variables = n;
  for (std::size_t j = 0; j < l; ++j) {
    lp::Constraint c;
    c.coefficients.assign(n, Rational(0));
    c.coefficients[k + j] = 1;
    c.coefficients[n - 1] = 1;
    c.sense = lp::Sense::kGreaterEqual;
    c.rhs = mu[j];
    prob.constraints.push_back(std::move(c));
    for (int v : q.atom(j).distinct_vars()) {
      lp::Constraint d;
      d.coefficients.assign(n, Rational(0));
      d.coefficients[static_cast<std::size_t>(v)] = 1;
      d.coefficients[k + j] = -1;
      d.sense = lp::Sense::kGreaterEqual;
      d.rhs = 0;
      prob.constraints.push_back(std::move(d));
    }
  }
  lp::Constraint budget;
  budget.coefficients.assign(n, Rational(0));
  for (std::size_t i = 0; i < k; ++i) budget.coefficients[i] = 1;
  budget.rhs = 1;
  prob.constraints.push_back(std::move(budget));
  prob.objective.assign(n, Rational(0));
  prob.objective[n - 1] = 1;
  prob.maximize = false;

  lp::Solution sol = lp::solve_lexicographic(prob, first_n(k));
  if (sol.status != lp::Status::kOptimal) throw Error("skew-oblivious LP did not reach an optimum");
  ShareAssignment out;
  out.p = p;
  out.lambda = sol.value;
  out.exponents.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(k));
  out.shares = round_shares(out.exponents, p);
  out.load = std::pow(static_cast<double>(p), to_double(out.lambda));
  return out;
}

ShareAssignment optimize_shares_skew_oblivious(const ConjunctiveQuery& q, const Statistics& stats,
                                               std::uint64_t p) {
  return optimize_shares_skew_oblivious(q, stats.bits(), p);
}

ShareAssignment fixed_shares(const ConjunctiveQuery& q, std::vector<std::uint64_t> shares, std::uint64_t p) {
  if (shares.size() != q.num_variables()) throw PreconditionError("need one share per variable");
  unsigned __int128 prod = 1;
  for (auto s : shares) {
    if (s < 1) throw PreconditionError("shares must be >= 1");
    prod *= s;
  }
  if (prod > p) throw PreconditionError("product of shares exceeds p");
  ShareAssignment out;
  out.p = p;
  for (auto s : shares) {
    out.exponents.push_back(p > 1 ? rational_from_double(std::log(static_cast<double>(s)) /
                                                         std::log(static_cast<double>(p)))
                                  : Rational(0));
  }
  out.shares = std::move(shares);
  return out;
}

double expected_output_size(const ConjunctiveQuery& q, const Statistics& stats) {
  double log_size = (static_cast<double>(q.num_variables()) - static_cast<double>(q.total_arity())) *
                    std::log(static_cast<double>(stats.n));
  for (auto m : stats.m) log_size += std::log(static_cast<double>(m));
  return std::exp(log_size);
}

double replication_lower_bound(const ConjunctiveQuery& q, const Statistics& stats, double load_bits) {
  auto sizes = stats.bits();
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (load_bits > sizes[j]) throw PreconditionError("replication bound needs L <= M_j for every relation");
  }
  double c = 0;
  double best = 0;
  for (const auto& u : packing_vertices(q)) {
    double total = to_double(u.total());
    if (total == 0) continue;
    c = std::max(c, std::pow(total / 4.0, total));
    double log_term = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) log_term += to_double(u.weights[j]) * std::log(sizes[j] / load_bits);
    best = std::max(best, std::exp(log_term));
  }
  double sum_sizes = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  return c * load_bits / sum_sizes * best;
}

}  // namespace mpcjoin
