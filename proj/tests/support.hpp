#pragma once

// Test-only oracles, deliberately independent of the library's algorithms.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/rational.hpp"

namespace mpcjoin::testing {

// Hypergraph isomorphism up to variable renaming, ignoring relation names
// and the order of variables inside an atom.
// Backtracks over variables in BFS order and prunes as soon as an atom of
// `a` is fully mapped onto a variable tuple that `b` does not contain.
inline bool isomorphic(const ConjunctiveQuery& a, const ConjunctiveQuery& b) {
  if (a.num_variables() != b.num_variables() || a.num_atoms() != b.num_atoms()) return false;
  const std::size_t k = a.num_variables();
  // Atoms compare as variable sets: positions inside an atom are not part of the shape.
  std::multiset<std::vector<int>> b_atoms;
  for (const auto& at : b.atoms()) {
    auto vs = at.distinct_vars();
    std::sort(vs.begin(), vs.end());
    b_atoms.insert(vs);
  }
  std::vector<std::size_t> deg_a(k, 0), deg_b(k, 0);
  for (const auto& at : a.atoms()) for (int v : at.distinct_vars()) ++deg_a[static_cast<std::size_t>(v)];
  for (const auto& at : b.atoms()) for (int v : at.distinct_vars()) ++deg_b[static_cast<std::size_t>(v)];

  std::vector<int> order;
  std::vector<bool> seen(k, false);
  for (std::size_t s = 0; s < k; ++s) {
    if (seen[s]) continue;
    seen[s] = true;
    order.push_back(static_cast<int>(s));
    for (std::size_t h = order.size() - 1; h < order.size(); ++h) {
      for (const auto& at : a.atoms()) {
        if (!at.contains(order[h])) continue;
        for (int w : at.vars) {
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = true;
            order.push_back(w);
          }
        }
      }
    }
  }

  std::vector<int> image(k, -1);
  std::vector<bool> used(k, false);
  auto consistent = [&] {
    std::multiset<std::vector<int>> mapped;
    for (const auto& at : a.atoms()) {
      std::vector<int> t;
      const auto vs = at.distinct_vars();
      for (int v : vs) {
        if (image[static_cast<std::size_t>(v)] < 0) break;
        t.push_back(image[static_cast<std::size_t>(v)]);
      }
      if (t.size() != vs.size()) continue;
      std::sort(t.begin(), t.end());
      mapped.insert(t);
      if (mapped.count(t) > b_atoms.count(t)) return false;
    }
    return true;
  };
  std::function<bool(std::size_t)> extend = [&](std::size_t i) {
    if (i == order.size()) return true;
    const auto v = static_cast<std::size_t>(order[i]);
    for (std::size_t w = 0; w < k; ++w) {
      if (used[w] || deg_a[v] != deg_b[w]) continue;
      image[v] = static_cast<int>(w);
      used[w] = true;
      if (consistent() && extend(i + 1)) return true;
      used[w] = false;
      image[v] = -1;
    }
    return false;
  };
  return extend(0);
}

// Gaussian elimination over rationals; nullopt when singular.
inline std::optional<std::vector<Rational>> solve_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv][c] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      Rational f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Minimum fractional vertex cover by enumerating vertices of
// {v >= 0, sum_{i in S_j} v_i >= 1}: every choice of k tight constraints.
inline Rational min_vertex_cover_by_enumeration(const ConjunctiveQuery& q) {
  const std::size_t k = q.num_variables();
  // Rows 0..l-1: cover constraints; rows l..l+k-1: v_i >= 0.
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> rhs;
  for (const auto& at : q.atoms()) {
    std::vector<Rational> r(k, 0);
    for (int v : at.distinct_vars()) r[static_cast<std::size_t>(v)] = 1;
    rows.push_back(r);
    rhs.push_back(1);
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Rational> r(k, 0);
    r[i] = 1;
    rows.push_back(r);
    rhs.push_back(0);
  }
  std::optional<Rational> best;
  std::vector<bool> pick(rows.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (pick[r]) {
        a.push_back(rows[r]);
        b.push_back(rhs[r]);
      }
    }
    auto x = solve_square(a, b);
    if (!x) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < rows.size() && feasible; ++r) {
      Rational s = 0;
      for (std::size_t i = 0; i < k; ++i) s += rows[r][i] * (*x)[i];
      feasible = s >= rhs[r];
    }
    if (!feasible) continue;
    Rational total = 0;
    for (const auto& v : *x) total += v;
    if (!best || total < *best) best = total;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best.value_or(Rational(0));
}

// Nested loops over one tuple per atom; only for tiny instances.
inline TupleSet brute_force_join(const ConjunctiveQuery& q, const Instance& inst) {
  TupleSet out;
  out.width = q.num_variables();
  std::vector<std::int64_t> binding(q.num_variables(), -1);
  std::function<void(std::size_t)> rec = [&](std::size_t j) {
    if (j == q.num_atoms()) {
      std::vector<Value> t;
      for (auto v : binding) t.push_back(static_cast<Value>(v));
      out.data.insert(out.data.end(), t.begin(), t.end());
      return;
    }
    const auto& rel = inst[j];
    const auto& vars = q.atom(j).vars;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      auto t = rel.tuple(i);
      std::vector<std::int64_t> saved = binding;
      bool ok = true;
      for (std::size_t pos = 0; pos < vars.size() && ok; ++pos) {
        auto& slot = binding[static_cast<std::size_t>(vars[pos])];
        if (slot < 0) {
          slot = t[pos];
        } else {
          ok = slot == t[pos];
        }
      }
      if (ok) rec(j + 1);
      binding = saved;
    }
  };
  rec(0);
  out.sort_unique();
  return out;
}

inline Relation make_relation(const std::string& name, std::size_t arity, std::vector<Value> data) {
  Relation r;
  r.name = name;
  r.arity = arity;
  r.data = std::move(data);
  return r;
}

}  // namespace mpcjoin::testing

#include <cmath>
#include <random>

namespace mpcjoin::testing {

// Random query over up to k variables and l atoms of arity 1..3; unused
// variables are dropped so the result is always a valid full query.
inline ConjunctiveQuery random_query(std::mt19937_64& rng, int k, int l) {
  std::uniform_int_distribution<int> var(0, k - 1), arity(1, std::min(3, k));
  std::vector<std::vector<int>> raw;
  for (int j = 0; j < l; ++j) {
    std::set<int> vs;
    const int a = arity(rng);
    while (static_cast<int>(vs.size()) < a) vs.insert(var(rng));
    raw.emplace_back(vs.begin(), vs.end());
  }
  std::vector<int> renumber(static_cast<std::size_t>(k), -1);
  std::vector<std::string> names;
  std::vector<Atom> atoms;
  for (int j = 0; j < l; ++j) {
    Atom at;
    at.relation = "R" + std::to_string(j);
    for (int v : raw[static_cast<std::size_t>(j)]) {
      auto& r = renumber[static_cast<std::size_t>(v)];
      if (r < 0) {
        r = static_cast<int>(names.size());
        names.push_back("v" + std::to_string(v));
      }
      at.vars.push_back(r);
    }
    atoms.push_back(at);
  }
  return ConjunctiveQuery::create(names, atoms);
}

// Duplicate-free uniform relations over [domain]; tiny domains make joins dense.
inline Instance dense_instance(const ConjunctiveQuery& q, std::size_t m, Value domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Value> val(0, domain - 1);
  Instance inst;
  inst.n = domain;
  for (const auto& a : q.atoms()) {
    std::set<std::vector<Value>> rows;
    const auto cap = static_cast<std::size_t>(std::pow(domain, a.arity()));
    while (rows.size() < std::min(m, cap)) {
      std::vector<Value> t(a.arity());
      for (auto& v : t) v = val(rng);
      rows.insert(t);
    }
    Relation r{a.relation, a.arity(), {}};
    for (const auto& t : rows) r.data.insert(r.data.end(), t.begin(), t.end());
    inst.relations.push_back(std::move(r));
  }
  return inst;
}

}  // namespace mpcjoin::testing
