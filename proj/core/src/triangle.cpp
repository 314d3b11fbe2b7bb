#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "mpcjoin/error.hpp"
#include "mpcjoin/skew.hpp"

namespace mpcjoin {

namespace {

// Variables x, y, z and atoms R(x,y), S(y,z), T(z,x) of a triangle query, in
// whatever orientation the atoms use.
struct TriangleShape {
  std::array<int, 3> var{};         // x, y, z
  std::array<std::size_t, 3> atom{};  // R, S, T

  // Atom containing variables a and b (by slot 0..2).
  std::size_t atom_of(int a, int b) const {
    if ((a == 0 && b == 1) || (a == 1 && b == 0)) return atom[0];
    if ((a == 1 && b == 2) || (a == 2 && b == 1)) return atom[1];
    return atom[2];
  }
};

TriangleShape triangle_shape(const ConjunctiveQuery& q) {
  auto fail = []() { throw PreconditionError("not a triangle query R(x,y), S(y,z), T(z,x)"); };
  if (q.num_atoms() != 3 || q.num_variables() != 3) fail();
  for (const auto& a : q.atoms()) {
    if (a.arity() != 2 || a.distinct_vars().size() != 2) fail();
  }
  TriangleShape s;
  s.var[0] = q.atom(0).vars[0];
  s.var[1] = q.atom(0).vars[1];
  s.var[2] = 3 - s.var[0] - s.var[1];
  s.atom[0] = 0;
  bool have_s = false, have_t = false;
  for (std::size_t j = 1; j < 3; ++j) {
    const auto& a = q.atom(j);
    if (a.contains(s.var[1]) && a.contains(s.var[2])) {
      s.atom[1] = j;
      have_s = true;
    } else if (a.contains(s.var[2]) && a.contains(s.var[0])) {
      s.atom[2] = j;
      have_t = true;
    }
  }
  if (!have_s || !have_t) fail();
  return s;
}

std::size_t position(const Atom& a, int var) {
  return static_cast<std::size_t>(std::find(a.vars.begin(), a.vars.end(), var) - a.vars.begin());
}

Relation keep_if(const Relation& r, const std::function<bool(std::span<const Value>)>& pred) {
  Relation out;
  out.name = r.name;
  out.arity = r.arity;
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto t = r.tuple(i);
    if (pred(t)) out.add(t);
  }
  return out;
}

enum Case : int { kLight = 0, kPairXY, kPairYZ, kPairZX, kHeavyX, kHeavyY, kHeavyZ, kNumCases };

}  // namespace

TriangleRun triangle_skew_execute(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t p,
                                  std::uint64_t seed) {
  const TriangleShape shape = triangle_shape(q);
  if (instance.relations.size() != 3) throw PreconditionError("need three relations");
  if (p == 0) throw PreconditionError("p must be positive");

  // Heavy values per slot: at m_j / p (Case 1) and at m_j / p^{1/3}.
  std::array<std::set<Value>, 3> heavy_p, heavy_c;
  std::array<HeavyHitterCatalog, 3> catalog_c;
  auto ptrs = relation_pointers(instance);
  for (int s = 0; s < 3; ++s) {
    auto cp = detect_heavy_hitters(q, ptrs, shape.var[s], p, Rational(1));
    heavy_p[s].insert(cp.heavy.begin(), cp.heavy.end());
    catalog_c[s] = detect_heavy_hitters(q, ptrs, shape.var[s], p, Rational(1, 3));
    heavy_c[s].insert(catalog_c[s].heavy.begin(), catalog_c[s].heavy.end());
  }

  auto classify = [&](std::span<const Value> row) {
    std::array<bool, 3> hp{}, hc{};
    int count = 0;
    for (int s = 0; s < 3; ++s) {
      Value v = row[static_cast<std::size_t>(shape.var[s])];
      hp[s] = heavy_p[s].count(v) > 0;
      hc[s] = heavy_c[s].count(v) > 0;
      count += hp[s] ? 1 : 0;
    }
    if (count >= 2) {
      if (hp[0] && hp[1]) return kPairXY;
      if (hp[1] && hp[2]) return kPairYZ;
      return kPairZX;
    }
    for (int s = 0; s < 3; ++s) {
      if (hc[s]) return static_cast<Case>(kHeavyX + s);
    }
    return kLight;
  };

  // Value of slot s in a tuple of atom j.
  auto value = [&](std::size_t j, std::span<const Value> t, int s) {
    return t[position(q.atom(j), shape.var[s])];
  };

  std::uint64_t m = 0;
  for (const auto& r : instance.relations) m = std::max<std::uint64_t>(m, r.size());

  struct PoolRun {
    Case kind;
    std::uint64_t offset;
    OneRoundResult result;
  };
  std::vector<PoolRun> runs;
  std::uint64_t next = 0;
  std::uint64_t stream = 0;

  // Light: both values below m_j / p^{1/3}; HC with p^{1/3} shares.
  {
    std::vector<Relation> rels;
    for (std::size_t j = 0; j < 3; ++j) {
      rels.push_back(keep_if(instance[j], [&](std::span<const Value> t) {
        for (int s = 0; s < 3; ++s) {
          if (q.atom(j).contains(shape.var[s]) && heavy_c[s].count(value(j, t, s))) return false;
        }
        return true;
      }));
    }
    std::vector<const Relation*> rp;
    for (const auto& r : rels) rp.push_back(&r);
    auto shares = round_shares({Rational(1, 3), Rational(1, 3), Rational(1, 3)}, p);
    runs.push_back({kLight, next, run_one_round(q, rp, instance.n, shares, p, derive_seed(seed, stream++))});
    next += p;
  }

  // Case 1, pair (a, b): broadcast the doubly-heavy tuples of the (a, b)
  // atom, hash-join the other two on the third variable.
  for (int pair = 0; pair < 3; ++pair) {
    int a = pair, b = (pair + 1) % 3, c = (pair + 2) % 3;
    std::size_t ab = shape.atom_of(a, b), bc = shape.atom_of(b, c), ca = shape.atom_of(c, a);
    std::vector<Relation> rels(3);
    rels[ab] = keep_if(instance[ab], [&](std::span<const Value> t) {
      return heavy_p[a].count(value(ab, t, a)) && heavy_p[b].count(value(ab, t, b));
    });
    rels[bc] = keep_if(instance[bc], [&](std::span<const Value> t) { return heavy_p[b].count(value(bc, t, b)) > 0; });
    rels[ca] = keep_if(instance[ca], [&](std::span<const Value> t) { return heavy_p[a].count(value(ca, t, a)) > 0; });
    std::vector<const Relation*> rp;
    for (const auto& r : rels) rp.push_back(&r);
    std::vector<std::uint64_t> shares(3, 1);
    shares[static_cast<std::size_t>(shape.var[c])] = p;
    runs.push_back({static_cast<Case>(kPairXY + pair), next,
                    run_one_round(q, rp, instance.n, shares, p, derive_seed(seed, stream++))});
    next += p;
  }

  // Case 2, heavy v: one pool per hitter h on the residual A'(b), B(b,c), C'(c).
  for (int v = 0; v < 3; ++v) {
    int b = (v + 1) % 3, c = (v + 2) % 3;
    std::size_t av = shape.atom_of(v, b), opp = shape.atom_of(b, c), cv = shape.atom_of(c, v);
    Relation light_opp = keep_if(instance[opp], [&](std::span<const Value> t) {
      return !heavy_p[b].count(value(opp, t, b)) && !heavy_p[c].count(value(opp, t, c));
    });
    const auto& cat = catalog_c[v];
    BigInt pair_sum = 0;
    for (Value h : cat.heavy) {
      const auto& f = cat.frequency.at(h);
      pair_sum += BigInt(f[av]) * f[cv];
    }
    for (Value h : cat.heavy) {
      const auto& f = cat.frequency.at(h);
      std::uint64_t p1 = m == 0 ? 1 : static_cast<std::uint64_t>((BigInt(p) * light_opp.size() + m - 1) / m);
      std::uint64_t p2 = 1;
      if (pair_sum > 0) {
        BigInt num = BigInt(p) * f[av] * f[cv];
        p2 = static_cast<std::uint64_t>((num + pair_sum - 1) / pair_sum);
      }
      p1 = std::max<std::uint64_t>(p1, 1);
      p2 = std::max<std::uint64_t>(p2, 1);
      const std::uint64_t ph = p1 + p2;

      std::vector<Relation> rels(3);
      rels[av] = keep_if(instance[av], [&](std::span<const Value> t) {
        return value(av, t, v) == h && !heavy_p[b].count(value(av, t, b));
      });
      rels[cv] = keep_if(instance[cv], [&](std::span<const Value> t) {
        return value(cv, t, v) == h && !heavy_p[c].count(value(cv, t, c));
      });
      rels[opp] = light_opp;

      // Shares from the residual query's LP; v itself gets share 1.
      std::vector<std::string> names = {"b", "c"};
      auto residual = ConjunctiveQuery::create(
          names, {Atom{"A", {0}}, Atom{"B", {0, 1}}, Atom{"C", {1}}});
      const double bpv = static_cast<double>(Statistics{{}, {}, instance.n}.bits_per_value());
      std::vector<double> sizes = {2 * bpv * static_cast<double>(rels[av].size()),
                                   2 * bpv * static_cast<double>(rels[opp].size()),
                                   2 * bpv * static_cast<double>(rels[cv].size())};
      auto sa = optimize_shares_relaxed(residual, sizes, ph);
      std::vector<std::uint64_t> shares(3, 1);
      shares[static_cast<std::size_t>(shape.var[b])] = sa.shares[0];
      shares[static_cast<std::size_t>(shape.var[c])] = sa.shares[1];

      std::vector<const Relation*> rp;
      for (const auto& r : rels) rp.push_back(&r);
      runs.push_back({static_cast<Case>(kHeavyX + v), next,
                      run_one_round(q, rp, instance.n, shares, ph, derive_seed(seed, stream++))});
      next += ph;
    }
  }

  TriangleRun out;
  std::vector<std::string> names;
  std::vector<std::size_t> arity;
  for (const auto& a : q.atoms()) {
    names.push_back(a.relation);
    arity.push_back(a.arity());
  }
  SkewRun& run = out.run;
  run.report = LoadReport::empty(names, arity, next, instance.n);
  run.report.query = q.to_string();
  run.report.p = p;
  run.report.input_tuples = instance.sizes();
  run.case_names = {"light", "case1_xy", "case1_yz", "case1_zx", "case2_x", "case2_y", "case2_z"};
  for (std::size_t k = 0; k < kNumCases; ++k) {
    LoadReport rep = LoadReport::empty(names, arity, 0, instance.n);
    rep.query = run.report.query;
    rep.p = p;
    rep.input_tuples = run.report.input_tuples;
    run.cases.push_back(std::move(rep));
  }
  out.outputs_per_case.assign(kNumCases, 0);
  run.output.width = 3;
  for (auto& pr : runs) {
    run.report.accumulate(pr.result.report, pr.offset);
    auto& case_rep = run.cases[pr.kind];
    case_rep.accumulate(pr.result.report, case_rep.servers());
    const TupleSet& res = pr.result.output;
    for (std::size_t i = 0; i < res.size(); ++i) {
      std::span<const Value> row(res.data.data() + i * 3, 3);
      if (classify(row) != pr.kind) continue;
      run.output.data.insert(run.output.data.end(), row.begin(), row.end());
      ++out.outputs_per_case[pr.kind];
    }
  }
  run.output.sort_unique();

  // Predicted load in tuples: max(m / p^{2/3}, sqrt(sum_h m_a(h) m_b(h) / p) per variable).
  const double pd = static_cast<double>(p);
  out.prediction_tuples.light = static_cast<double>(m) / std::cbrt(pd * pd);
  out.prediction_tuples.total = out.prediction_tuples.light;
  for (int v = 0; v < 3; ++v) {
    int b = (v + 1) % 3, c = (v + 2) % 3;
    std::size_t av = shape.atom_of(v, b), cv = shape.atom_of(c, v);
    double sum = 0;
    for (Value h : catalog_c[v].heavy) {
      const auto& f = catalog_c[v].frequency.at(h);
      sum += static_cast<double>(f[av]) * static_cast<double>(f[cv]);
    }
    double term = std::sqrt(sum / pd);
    out.prediction_tuples.pair_terms.push_back(term);
    out.prediction_tuples.total = std::max(out.prediction_tuples.total, term);
  }
  run.report.bound_id = "triangle_skew";
  run.report.bound_bits = out.prediction_tuples.total * 2 * static_cast<double>(run.report.bits_per_value);
  return out;
}

}  // namespace mpcjoin
