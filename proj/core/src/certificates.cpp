#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "mpcjoin/error.hpp"
#include "mpcjoin/multiround.hpp"
#include "mpcjoin/packing.hpp"

namespace mpcjoin {

RoundsLower rounds_lower(const ConjunctiveQuery& q, const Rational& eps) {
  if (q.num_atoms() == 0 || !is_connected(q)) throw PreconditionError("round bounds need a connected query");
  const auto g = gamma1_params(eps);
  if (in_gamma1(q, eps)) return {1, "gamma1", false};
  const auto l = static_cast<long>(q.num_atoms());
  if (path_order(q)) return {ceil_log(g.k_eps, Rational(l)), "line", false};
  if (cycle_order(q)) {
    return {floor_log(g.k_eps, Rational(l, static_cast<long>(g.m_eps) + 1)) + 2, "cycle", false};
  }
  const int diam = radius_diameter(q).diameter;
  if (is_tree_like(q)) return {ceil_log(g.k_eps, Rational(diam)), "tree-like", false};
  return {ceil_log(g.k_eps, Rational(diam)), "general", true};
}

namespace {

std::vector<int> all_atoms(const ConjunctiveQuery& q) {
  std::vector<int> a(q.num_atoms());
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = static_cast<int>(j);
  return a;
}

std::vector<int> complement(std::size_t l, const std::vector<int>& atoms) {
  std::vector<bool> in(l, false);
  for (int j : atoms) in[static_cast<std::size_t>(j)] = true;
  std::vector<int> out;
  for (std::size_t j = 0; j < l; ++j) {
    if (!in[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

void require_distinct_relations(const ConjunctiveQuery& q) {
  std::set<std::string> names;
  for (const auto& a : q.atoms()) {
    if (!names.insert(a.relation).second) throw PreconditionError("plans need distinct relation names");
  }
}

// Atom indices of `level` whose relations are the q-atoms `atoms`.
std::vector<int> map_into(const ConjunctiveQuery& q, const ConjunctiveQuery& level, const std::vector<int>& atoms) {
  std::vector<int> out;
  for (int j : atoms) {
    auto idx = level.find_atom(q.atom(static_cast<std::size_t>(j)).relation);
    if (!idx) throw PreconditionError("chain atom " + q.atom(static_cast<std::size_t>(j)).relation + " missing from level");
    out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> EpsRPlan::level_atoms(int j) const {
  if (j == 0) return all_atoms(q);
  return chain.at(static_cast<std::size_t>(j - 1));
}

ConjunctiveQuery EpsRPlan::level(int j) const {
  if (j == 0) return q;
  return contract(q, complement(q.num_atoms(), level_atoms(j)));
}

std::string EpsRPlan::to_json() const {
  nlohmann::ordered_json j;
  j["query"] = q.to_string();
  j["eps"] = mpcjoin::to_string(eps);
  j["r"] = r();
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (int i = 0; i <= r(); ++i) {
    nlohmann::ordered_json lv;
    std::vector<std::string> rels;
    for (int a : level_atoms(i)) rels.push_back(q.atom(static_cast<std::size_t>(a)).relation);
    lv["atoms"] = rels;
    lv["query"] = level(i).to_string();
    levels.push_back(lv);
  }
  j["levels"] = levels;
  return j.dump(2);
}

EpsRPlan build_er_plan(const ConjunctiveQuery& q, const Rational& eps) {
  const auto g = gamma1_params(eps);
  require_distinct_relations(q);
  EpsRPlan plan;
  plan.q = q;
  plan.eps = eps;
  const auto l = static_cast<long>(q.num_atoms());
  std::vector<int> current;
  int r = 0;
  bool cyclic = false;
  if (auto order = path_order(q)) {
    if (static_cast<std::uint64_t>(l) <= g.k_eps) throw PreconditionError("line is in Gamma^1: needs k > k_eps");
    current = *order;
    r = ceil_log(g.k_eps, Rational(l)) - 2;
  } else if (auto cyc = cycle_order(q)) {
    if (static_cast<std::uint64_t>(l) <= g.m_eps) throw PreconditionError("cycle is in Gamma^1: needs k > m_eps");
    current = *cyc;
    cyclic = true;
    r = floor_log(g.k_eps, Rational(l, static_cast<long>(g.m_eps) + 1));
  } else {
    throw PreconditionError("(eps, r)-plans are built for lines and cycles only");
  }
  for (int level = 0; level < r; ++level) {
    std::vector<int> next;
    const std::size_t count = cyclic ? current.size() / g.k_eps : (current.size() + g.k_eps - 1) / g.k_eps;
    for (std::size_t t = 0; t < count; ++t) next.push_back(current[t * g.k_eps]);
    current = next;
    std::sort(next.begin(), next.end());
    plan.chain.push_back(next);
  }
  return plan;
}

PlanValidation validate_er_plan(const EpsRPlan& plan) {
  const auto& q = plan.q;
  const Rational cap = Rational(1) / (1 - plan.eps);
  PlanValidation v;
  for (int j = 0; j < plan.r(); ++j) {
    v.level = j;
    const auto outer = plan.level_atoms(j);
    const auto inner = plan.level_atoms(j + 1);
    if (inner.empty()) {
      v.violation = "empty M_" + std::to_string(j + 1);
      return v;
    }
    if (inner.size() >= outer.size() || !std::includes(outer.begin(), outer.end(), inner.begin(), inner.end())) {
      v.violation = "chain is not strictly descending at M_" + std::to_string(j + 1);
      return v;
    }
    const ConjunctiveQuery level = plan.level(j);
    const auto marked = map_into(q, level, inner);
    std::vector<bool> is_marked(level.num_atoms(), false);
    for (int a : marked) is_marked[static_cast<std::size_t>(a)] = true;
    for (const auto& sub : enumerate_connected_subqueries(level)) {
      std::size_t hits = 0;
      for (int a : sub.atoms) hits += is_marked[static_cast<std::size_t>(a)] ? 1 : 0;
      if (hits <= 1) continue;
      if (tau_star(level.restrict_to(sub.atoms)) <= cap) {
        v.violation = "subquery in Gamma^1 holds " + std::to_string(hits) + " atoms of M_" + std::to_string(j + 1);
        return v;
      }
    }
    const auto rest = complement(level.num_atoms(), marked);
    if (!rest.empty() && characteristic(level.restrict_to(rest)) != 0) {
      v.violation = "complement of M_" + std::to_string(j + 1) + " is not a forest";
      return v;
    }
  }
  v.level = plan.r();
  if (tau_star(plan.level(plan.r())) <= cap) {
    v.violation = "final level is in Gamma^1";
    return v;
  }
  v.level = -1;
  v.valid = true;
  return v;
}

BetaCertificate beta_certificate(const EpsRPlan& plan, double load_bits, double size_bits, std::uint64_t p) {
  if (!(load_bits > 0) || !(size_bits > 0) || p == 0) throw PreconditionError("load, size and p must be positive");
  if (auto v = validate_er_plan(plan); !v.valid) throw PreconditionError("invalid (eps,r)-plan: " + v.violation);
  const Rational cap = Rational(1) / (1 - plan.eps);
  BetaCertificate c;
  c.r = plan.r();
  const Rational final_tau = tau_star(plan.level(c.r));
  c.tau_m = final_tau;
  // Minimal connected subqueries outside Gamma^1, per level below r.
  std::vector<std::vector<Rational>> outside(static_cast<std::size_t>(c.r));
  for (int j = 0; j < c.r; ++j) {
    const ConjunctiveQuery level = plan.level(j);
    auto subs = enumerate_connected_subqueries(
        level, [&](const SubqueryHandle& h) { return tau_star(level.restrict_to(h.atoms)) > cap; });
    for (const auto& h : subs) {
      Rational t = tau_star(level.restrict_to(h.atoms));
      outside[static_cast<std::size_t>(j)].push_back(t);
      c.tau_m = std::min(c.tau_m, t);
    }
  }
  const double e = to_double(c.tau_m);
  c.beta = std::pow(1.0 / to_double(final_tau), e);
  for (const auto& taus : outside) {
    for (const auto& t : taus) c.beta += std::pow(1.0 / to_double(t), e);
  }
  c.fraction = c.beta * std::pow((c.r + 1) * load_bits / size_bits, e) * static_cast<double>(p);
  return c;
}

}  // namespace mpcjoin
