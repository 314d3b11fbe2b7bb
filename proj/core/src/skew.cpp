#include "mpcjoin/skew.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mpcjoin/error.hpp"
#include "mpcjoin/lp.hpp"

namespace mpcjoin {

bool HeavyHitterCatalog::contains(Value v) const { return std::binary_search(heavy.begin(), heavy.end(), v); }

std::string HeavyHitterCatalog::to_csv() const {
  std::ostringstream out;
  out << "relation,value,frequency\n";
  for (const auto& e : entries) {
    for (auto [v, f] : e.hitters) out << e.relation << ',' << v << ',' << f << '\n';
  }
  return out.str();
}

bool reaches_threshold(std::uint64_t freq, std::uint64_t m, std::uint64_t p, const Rational& exponent) {
  if (exponent < 0) throw PreconditionError("threshold exponent must be non-negative");
  const BigInt num = boost::multiprecision::numerator(exponent);
  const BigInt den = boost::multiprecision::denominator(exponent);
  const unsigned d = static_cast<unsigned>(den);
  const unsigned nu = static_cast<unsigned>(num);
  // freq * p^{num/den} >= m  <=>  freq^den * p^num >= m^den
  BigInt lhs = boost::multiprecision::pow(BigInt(freq), d) * boost::multiprecision::pow(BigInt(p), nu);
  BigInt rhs = boost::multiprecision::pow(BigInt(m), d);
  return lhs >= rhs;
}

HeavyHitterCatalog detect_heavy_hitters(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                                        int var, std::uint64_t p, const Rational& exponent) {
  if (relations.size() != q.num_atoms()) throw PreconditionError("need one relation per atom");
  if (var < 0 || static_cast<std::size_t>(var) >= q.num_variables()) throw PreconditionError("unknown variable");
  if (p == 0) throw PreconditionError("p must be positive");
  HeavyHitterCatalog cat;
  cat.variable = q.variable(static_cast<std::size_t>(var));
  cat.var = var;
  cat.p = p;
  cat.exponent = exponent;
  std::vector<std::map<Value, std::uint64_t>> freq(q.num_atoms());
  std::set<Value> heavy;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    const auto& vars = q.atom(j).vars;
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end()) continue;
    auto pos = static_cast<std::size_t>(it - vars.begin());
    const Relation& r = *relations[j];
    for (std::size_t i = 0; i < r.size(); ++i) ++freq[j][r.tuple(i)[pos]];
    HeavyHitterCatalog::Entry e;
    e.atom = j;
    e.relation = q.atom(j).relation;
    e.m = r.size();
    for (auto [v, f] : freq[j]) {
      if (reaches_threshold(f, e.m, p, exponent)) {
        e.hitters.emplace_back(v, f);
        heavy.insert(v);
      }
    }
    cat.entries.push_back(std::move(e));
  }
  if (cat.entries.empty()) throw PreconditionError("variable " + cat.variable + " occurs in no relation");
  cat.heavy.assign(heavy.begin(), heavy.end());
  for (Value h : cat.heavy) {
    std::vector<std::uint64_t> f(q.num_atoms(), 0);
    for (std::size_t j = 0; j < q.num_atoms(); ++j) {
      auto it = freq[j].find(h);
      if (it != freq[j].end()) f[j] = it->second;
    }
    cat.frequency[h] = std::move(f);
  }
  return cat;
}

HeavyHitterCatalog detect_heavy_hitters(const ConjunctiveQuery& q, const Instance& instance,
                                        const std::string& variable, std::uint64_t p, const Rational& exponent) {
  auto var = q.find_variable(variable);
  if (!var) throw PreconditionError("unknown variable " + variable);
  return detect_heavy_hitters(q, relation_pointers(instance), *var, p, exponent);
}

StarShape star_shape(const ConjunctiveQuery& q) {
  if (q.num_atoms() == 0) throw PreconditionError("star query needs at least one atom");
  StarShape s;
  // The center is the variable shared by every atom.
  for (std::size_t v = 0; v < q.num_variables() && s.center < 0; ++v) {
    if (q.atoms_of(static_cast<int>(v)).size() == q.num_atoms()) s.center = static_cast<int>(v);
  }
  if (s.center < 0) throw PreconditionError("not a star query: no variable shared by all atoms");
  for (const auto& a : q.atoms()) {
    if (a.arity() != 2 || a.distinct_vars().size() != 2) throw PreconditionError("not a star query: atoms must be binary");
    std::size_t zpos = a.vars[0] == s.center ? 0 : 1;
    int leaf = a.vars[1 - zpos];
    if (q.atoms_of(leaf).size() != 1) throw PreconditionError("not a star query: leaf variable shared");
    s.center_pos.push_back(zpos);
    s.leaves.push_back(leaf);
  }
  return s;
}

double star_heavy_load(const std::vector<std::vector<double>>& sizes, std::uint64_t p) {
  if (sizes.empty()) return 0;
  const std::size_t l = sizes.front().size();
  if (l > 20) throw GuardError("star load enumerates 2^l subsets; l > 20");
  double best = 0;
  for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
    double sum = 0;
    for (const auto& hs : sizes) {
      double prod = 1;
      for (std::size_t j = 0; j < l; ++j) {
        if (mask & (1u << j)) prod *= hs[j];
      }
      sum += prod;
    }
    double k = std::popcount(mask);
    best = std::max(best, std::pow(sum / static_cast<double>(p), 1 / k));
  }
  return best;
}

StarAllocation star_skew_plan(const ConjunctiveQuery& q, const HeavyHitterCatalog& catalog, const Statistics& stats,
                              std::uint64_t p) {
  StarAllocation plan;
  plan.shape = star_shape(q);
  if (catalog.var != plan.shape.center) throw PreconditionError("catalog must be keyed on the star center");
  if (stats.m.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  if (p == 0) throw PreconditionError("p must be positive");
  const std::size_t l = q.num_atoms();
  if (l > 20) throw GuardError("star allocation enumerates 2^l vertices; l > 20");
  plan.p = p;
  for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
    std::vector<int> u(l);
    for (std::size_t j = 0; j < l; ++j) u[j] = (mask >> j) & 1u;
    plan.vertices.push_back(u);
  }
  plan.light_servers = p;
  plan.server_budget = (l + 1) * plan.vertices.size() * p;

  const std::uint64_t bpv = stats.bits_per_value();
  auto bits_of = [&](std::size_t j, std::uint64_t m) { return BigInt(m) * stats.arity[j] * bpv; };

  // Denominators sum_{h'} prod_j M_j(h')^{u_j}, exact.
  std::vector<BigInt> denom(plan.vertices.size(), 0);
  std::vector<std::vector<BigInt>> weight(catalog.heavy.size(), std::vector<BigInt>(plan.vertices.size()));
  for (std::size_t hi = 0; hi < catalog.heavy.size(); ++hi) {
    const auto& f = catalog.frequency.at(catalog.heavy[hi]);
    for (std::size_t k = 0; k < plan.vertices.size(); ++k) {
      BigInt w = 1;
      for (std::size_t j = 0; j < l; ++j) {
        if (plan.vertices[k][j]) w *= bits_of(j, f[j]);
      }
      weight[hi][k] = w;
      denom[k] += w;
    }
  }

  std::uint64_t next = p;
  std::vector<std::vector<double>> heavy_tuples, heavy_bits;
  for (std::size_t hi = 0; hi < catalog.heavy.size(); ++hi) {
    StarAllocation::Pool pool;
    pool.hitter = catalog.heavy[hi];
    pool.m = catalog.frequency.at(pool.hitter);
    for (std::size_t k = 0; k < plan.vertices.size(); ++k) {
      std::uint64_t c = 1;
      if (denom[k] > 0) {
        BigInt num = BigInt(p) * weight[hi][k];
        BigInt ceil = (num + denom[k] - 1) / denom[k];
        c = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(ceil));
      }
      pool.per_vertex.push_back(c);
      pool.servers += c;
    }
    pool.first_server = next;
    next += pool.servers;

    // Residual Cartesian product S_1'(x_1), ..., S_l'(x_l) on p_h servers.
    std::vector<std::string> names;
    std::vector<Atom> atoms;
    std::vector<double> sizes;
    for (std::size_t j = 0; j < l; ++j) {
      names.push_back(q.variable(static_cast<std::size_t>(plan.shape.leaves[j])));
      atoms.push_back(Atom{q.atom(j).relation, {static_cast<int>(j)}});
      sizes.push_back(static_cast<double>(bits_of(j, pool.m[j])));
    }
    auto residual = ConjunctiveQuery::create(names, atoms);
    auto sa = optimize_shares_relaxed(residual, sizes, pool.servers);
    pool.shares.assign(q.num_variables(), 1);
    for (std::size_t j = 0; j < l; ++j) pool.shares[static_cast<std::size_t>(plan.shape.leaves[j])] = sa.shares[j];

    std::vector<double> ht, hb;
    for (std::size_t j = 0; j < l; ++j) {
      ht.push_back(static_cast<double>(pool.m[j]));
      hb.push_back(static_cast<double>(bits_of(j, pool.m[j])));
    }
    heavy_tuples.push_back(ht);
    heavy_bits.push_back(hb);
    plan.pools.push_back(std::move(pool));
  }
  plan.total_servers = next;
  plan.heavy_load_tuples = star_heavy_load(heavy_tuples, p);
  plan.heavy_load_bits = star_heavy_load(heavy_bits, p);
  for (std::size_t j = 0; j < l; ++j) {
    plan.light_load_tuples = std::max(plan.light_load_tuples, static_cast<double>(stats.m[j]) / static_cast<double>(p));
    plan.light_load_bits = std::max(plan.light_load_bits, stats.bits(j) / static_cast<double>(p));
  }
  return plan;
}

std::string StarAllocation::to_json() const {
  nlohmann::ordered_json j;
  j["p"] = p;
  j["center"] = shape.center;
  j["light_servers"] = light_servers;
  j["total_servers"] = total_servers;
  j["server_budget"] = server_budget;
  nlohmann::ordered_json alloc = nlohmann::ordered_json::array();
  for (const auto& pool : pools) {
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      nlohmann::ordered_json row;
      row["h"] = pool.hitter;
      row["u"] = vertices[k];
      row["servers"] = pool.per_vertex[k];
      alloc.push_back(row);
    }
  }
  j["allocation"] = alloc;
  nlohmann::ordered_json pools_json = nlohmann::ordered_json::array();
  for (const auto& pool : pools) {
    nlohmann::ordered_json row;
    row["h"] = pool.hitter;
    row["servers"] = pool.servers;
    row["first_server"] = pool.first_server;
    row["frequency"] = pool.m;
    row["shares"] = pool.shares;
    pools_json.push_back(row);
  }
  j["pools"] = pools_json;
  j["heavy_load_tuples"] = heavy_load_tuples;
  j["heavy_load_bits"] = heavy_load_bits;
  j["light_load_tuples"] = light_load_tuples;
  j["light_load_bits"] = light_load_bits;
  return j.dump(2);
}

namespace {

Relation filtered(const Relation& r, const std::function<bool(std::span<const Value>)>& keep) {
  Relation out;
  out.name = r.name;
  out.arity = r.arity;
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto t = r.tuple(i);
    if (keep(t)) out.add(t);
  }
  return out;
}

LoadReport combined_report(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t servers,
                           std::uint64_t p) {
  std::vector<std::string> names;
  std::vector<std::size_t> arity;
  for (const auto& a : q.atoms()) {
    names.push_back(a.relation);
    arity.push_back(a.arity());
  }
  LoadReport rep = LoadReport::empty(names, arity, servers, instance.n);
  rep.query = q.to_string();
  rep.p = p;
  rep.input_tuples = instance.sizes();
  return rep;
}

}  // namespace

SkewRun execute_star_skew(const ConjunctiveQuery& q, const Instance& instance, const StarAllocation& plan,
                          std::uint64_t seed) {
  const StarShape shape = star_shape(q);
  if (shape.center != plan.shape.center) throw PreconditionError("plan was built for a different query");
  if (instance.relations.size() != q.num_atoms()) throw PreconditionError("need one relation per atom");
  const std::size_t l = q.num_atoms();
  std::set<Value> heavy;
  for (const auto& pool : plan.pools) heavy.insert(pool.hitter);

  // The plan must describe this instance's hitter frequencies.
  for (const auto& pool : plan.pools) {
    for (std::size_t j = 0; j < l; ++j) {
      const Relation& r = instance[j];
      std::uint64_t f = 0;
      for (std::size_t i = 0; i < r.size(); ++i) f += r.tuple(i)[shape.center_pos[j]] == pool.hitter ? 1 : 0;
      if (f != pool.m[j]) throw PreconditionError("plan/instance mismatch for hitter " + std::to_string(pool.hitter));
    }
  }

  SkewRun run;
  run.report = combined_report(q, instance, plan.total_servers, plan.p);
  run.report.bound_id = "star_skew";
  run.report.bound_bits = std::max(plan.heavy_load_bits, plan.light_load_bits);
  run.output.width = q.num_variables();

  // Light tuples: vanilla HC with p_z = p.
  {
    std::vector<Relation> light;
    for (std::size_t j = 0; j < l; ++j) {
      auto zpos = shape.center_pos[j];
      light.push_back(filtered(instance[j], [&](std::span<const Value> t) { return !heavy.count(t[zpos]); }));
    }
    std::vector<const Relation*> ptrs;
    for (const auto& r : light) ptrs.push_back(&r);
    std::vector<std::uint64_t> shares(q.num_variables(), 1);
    shares[static_cast<std::size_t>(shape.center)] = plan.p;
    auto res = run_one_round(q, ptrs, instance.n, shares, plan.p, derive_seed(seed, 0));
    run.report.accumulate(res.report, 0);
    run.output.append(res.output);
    run.case_names.push_back("light");
    run.cases.push_back(std::move(res.report));
  }

  LoadReport heavy_report = combined_report(q, instance, plan.total_servers - plan.light_servers, plan.p);
  for (std::size_t k = 0; k < plan.pools.size(); ++k) {
    const auto& pool = plan.pools[k];
    std::vector<Relation> slice;
    for (std::size_t j = 0; j < l; ++j) {
      auto zpos = shape.center_pos[j];
      slice.push_back(filtered(instance[j], [&](std::span<const Value> t) { return t[zpos] == pool.hitter; }));
    }
    std::vector<const Relation*> ptrs;
    for (const auto& r : slice) ptrs.push_back(&r);
    auto res = run_one_round(q, ptrs, instance.n, pool.shares, pool.servers, derive_seed(seed, k + 1));
    run.report.accumulate(res.report, pool.first_server);
    heavy_report.accumulate(res.report, pool.first_server - plan.light_servers);
    run.output.append(res.output);
  }
  run.case_names.push_back("heavy");
  run.cases.push_back(std::move(heavy_report));
  run.output.sort_unique();
  return run;
}

XStatistics x_statistics(const ConjunctiveQuery& q, const Instance& instance, const std::vector<int>& x) {
  XStatistics st;
  st.x = x;
  std::sort(st.x.begin(), st.x.end());
  st.x.erase(std::unique(st.x.begin(), st.x.end()), st.x.end());
  for (int v : st.x) {
    if (v < 0 || static_cast<std::size_t>(v) >= q.num_variables()) throw PreconditionError("unknown x variable");
  }
  st.n = instance.n;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    const Atom& a = q.atom(j);
    st.arity.push_back(a.arity());
    std::vector<int> ax;
    std::vector<std::size_t> pos;
    for (int v : st.x) {
      auto it = std::find(a.vars.begin(), a.vars.end(), v);
      if (it != a.vars.end()) {
        ax.push_back(v);
        pos.push_back(static_cast<std::size_t>(it - a.vars.begin()));
      }
    }
    std::map<std::vector<Value>, std::uint64_t> freq;
    const Relation& r = instance[j];
    std::vector<Value> key(pos.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto t = r.tuple(i);
      for (std::size_t k = 0; k < pos.size(); ++k) key[k] = t[pos[k]];
      ++freq[key];
    }
    st.atom_x.push_back(std::move(ax));
    st.frequency.push_back(std::move(freq));
  }
  return st;
}

SkewLowerBound skew_lower_bound(const ConjunctiveQuery& q, const XStatistics& stats, std::uint64_t p) {
  const std::size_t l = q.num_atoms();
  if (stats.frequency.size() != l) throw PreconditionError("x-statistics do not match the query");
  if (p == 0) throw PreconditionError("p must be positive");
  std::vector<bool> is_x(q.num_variables(), false);
  for (int v : stats.x) is_x[static_cast<std::size_t>(v)] = true;

  SkewLowerBound out;
  out.constant = 1;
  for (std::size_t j = 0; j < l; ++j) {
    std::size_t d = 0;
    for (int v : q.atom(j).vars) d += is_x[static_cast<std::size_t>(v)] ? 1 : 0;
    std::size_t a = q.atom(j).arity();
    if (a <= d) throw PreconditionError("relation " + q.atom(j).relation + " has no variable outside x");
    out.constant = std::min(out.constant, static_cast<double>(a - d) / (4.0 * static_cast<double>(a)));
  }

  // Packings of the residual query that saturate every x variable.
  std::vector<lp::Constraint> cons;
  for (std::size_t i = 0; i < q.num_variables(); ++i) {
    lp::Constraint c;
    c.coefficients.assign(l, 0);
    for (int j : q.atoms_of(static_cast<int>(i))) c.coefficients[static_cast<std::size_t>(j)] = 1;
    c.sense = is_x[i] ? lp::Sense::kGreaterEqual : lp::Sense::kLessEqual;
    c.rhs = 1;
    cons.push_back(std::move(c));
  }
  auto vertices = lp::enumerate_vertices(l, cons);
  if (vertices.empty()) throw PreconditionError("no packing saturates x");

  const double bpv = static_cast<double>(Statistics{{}, {}, stats.n}.bits_per_value());
  // Candidate values per x variable: union over atoms containing it.
  std::vector<std::vector<Value>> candidates(stats.x.size());
  for (std::size_t k = 0; k < stats.x.size(); ++k) {
    std::set<Value> vals;
    for (std::size_t j = 0; j < l; ++j) {
      const auto& ax = stats.atom_x[j];
      auto it = std::find(ax.begin(), ax.end(), stats.x[k]);
      if (it == ax.end()) continue;
      auto idx = static_cast<std::size_t>(it - ax.begin());
      for (const auto& [key, f] : stats.frequency[j]) vals.insert(key[idx]);
    }
    candidates[k].assign(vals.begin(), vals.end());
  }
  double combos = 1;
  for (const auto& c : candidates) combos *= static_cast<double>(std::max<std::size_t>(c.size(), 1));
  if (combos > 1e7) throw GuardError("x-statistics sum ranges over more than 1e7 assignments");

  bool found = false;
  for (const auto& u : vertices) {
    double total = 0;
    for (const auto& w : u) total += to_double(w);
    if (total <= 0) continue;
    double sum = 0;
    std::vector<Value> h(stats.x.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == stats.x.size()) {
        double log_term = 0;
        for (std::size_t j = 0; j < l; ++j) {
          double uj = to_double(u[j]);
          if (uj == 0) continue;
          std::vector<Value> key;
          for (int v : stats.atom_x[j]) {
            auto pos = static_cast<std::size_t>(std::find(stats.x.begin(), stats.x.end(), v) - stats.x.begin());
            key.push_back(h[pos]);
          }
          auto it = stats.frequency[j].find(key);
          if (it == stats.frequency[j].end()) return;
          log_term += uj * std::log(static_cast<double>(stats.arity[j]) * static_cast<double>(it->second) * bpv);
        }
        sum += std::exp(log_term);
        return;
      }
      for (Value v : candidates[k]) {
        h[k] = v;
        rec(k + 1);
      }
    };
    rec(0);
    double lx = std::pow(sum / static_cast<double>(p), 1 / total);
    if (!found || lx > out.bits) {
      out.bits = lx;
      out.witness = u;
      found = true;
    }
  }
  out.bits *= out.constant;
  return out;
}

}  // namespace mpcjoin
