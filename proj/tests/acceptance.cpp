// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpcjoin/error.hpp"
#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/multiround.hpp"
#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/skew.hpp"
#include "mpcjoin/tail_bounds.hpp"

namespace mpcjoin {
namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Check = std::function<void(Outcome&)>;

std::vector<std::uint64_t> seeds_for(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t t = 0; t < count; ++t) s[t] = derive_seed(master, t);
  return s;
}

// Expected equal-size exponents: 1/k per variable on cycles, the
// alternating 0, 1/ceil(k/2) vector on lines, everything on the centre of a star.
std::vector<Rational> equal_size_exponents(char shape, int k) {
  if (shape == 'C') return std::vector<Rational>(static_cast<std::size_t>(k), Rational(1, k));
  std::vector<Rational> e(static_cast<std::size_t>(k + 1), 0);
  if (shape == 'T') {
    e[0] = 1;
    return e;
  }
  for (int i = 1; i <= k; i += 2) e[static_cast<std::size_t>(i)] = Rational(1, (k + 1) / 2);
  return e;
}

void shape_exponents(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t p = 64, m = 1 << 20;
  int rows = 0, wrong = 0;
  auto row = [&](const ConjunctiveQuery& q, const std::vector<Rational>& e, const Rational& tau) {
    ++rows;
    auto sa = optimize_shares_skewfree(q, Statistics::equal(q, m, m), p);
    if (sa.exponents != e || tau_star(q) != tau) {
      ++wrong;
      o.detail << " mismatch on " << q.to_string();
    }
  };
  for (int k = 3; k <= 6; ++k) row(cycle_query(k), equal_size_exponents('C', k), Rational(k, 2));
  for (int k = 2; k <= 6; ++k) row(line_query(k), equal_size_exponents('L', k), Rational((k + 1) / 2));
  for (int k = 2; k <= 5; ++k) row(star_query(k), equal_size_exponents('T', k), 1);
  row(subset_query(3, 2), std::vector<Rational>(3, Rational(1, 3)), Rational(3, 2));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << rows << " rows, " << wrong << " mismatches, " << secs << " s";
  o.require(wrong == 0, "exponents or tau*");
  o.require(secs < 1.0, "runtime < 1 s");
}

void triangle_vertices(Outcome& o) {
  const Rational h = Rational(1, 2);
  const std::set<std::vector<Rational>> expected = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {h, h, h}};
  std::set<std::vector<Rational>> got;
  for (const auto& v : packing_vertices(cycle_query(3))) got.insert(v.weights);
  o.detail << got.size() << " vertices";
  o.require(got == expected, "vertex set");
}

void hypercube_correctness(Outcome& o) {
  const char* names[] = {"C3", "L3", "T3", "SP2", "K4e"};
  const std::uint64_t p = 27;
  int pairs = 0, equal = 0;
  std::uint64_t answers = 0;
  for (int i = 0; i < 50; ++i) {
    auto q = named_query(names[i % 5]);
    const std::uint64_t nm = 200 + 180 * static_cast<std::uint64_t>(i / 5);  // 200 .. 1820
    const auto seed = derive_seed(3001, static_cast<std::uint64_t>(i));
    const auto stats = Statistics::equal(q, nm, nm);
    auto inst = random_matching_db(q, stats, seed);
    auto shares = optimize_shares_skewfree(q, stats, p);
    auto res = run_one_round(q, inst, shares, derive_seed(seed, 1));
    auto truth = oracle_eval(q, inst);
    ++pairs;
    answers += truth.size();
    if (res.output == truth) ++equal;
  }
  o.detail << equal << "/" << pairs << " outputs equal the oracle (" << answers << " answers in total)";
  o.require(equal == pairs, "every output equals the oracle");
}

void skew_free_load(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  auto q = cycle_query(3);
  const std::uint64_t m = 100000, p = 64;
  const double bound = 2.0 * m / std::pow(static_cast<double>(p), 2.0 / 3);
  const auto stats = Statistics::equal(q, m, m);
  int within = 0;
  std::uint64_t worst = 0;
  for (auto s : seeds_for(4004, 20)) {
    auto inst = random_matching_db(q, stats, s);
    auto rep = route_one_round(q, relation_pointers(inst), inst.n, {4, 4, 4}, p, derive_seed(s, 1));
    const auto load = rep.max_relation_tuples();
    worst = std::max(worst, load);
    if (static_cast<double>(load) <= bound) ++within;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << within << "/20 trials within 2m/p^(2/3) = " << bound << " tuples (worst " << worst << "), " << secs
           << " s";
  o.require(within >= 19, ">= 19/20 trials within bound");
  o.require(secs < 120, "runtime < 2 min");
}

void expected_size(Outcome& o) {
  auto q = cycle_query(3);
  const auto stats = Statistics::equal(q, 50, 50);
  const int trials = 10000;
  double sum = 0, sq = 0;
  for (auto s : seeds_for(5005, trials)) {
    const double c = static_cast<double>(oracle_count(q, random_matching_db(q, stats, s)));
    sum += c;
    sq += c * c;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  const double expected = expected_output_size(q, stats);
  o.detail << "mean " << mean << " vs expected " << expected << ", 3 sigma = " << 3 * se;
  o.require(std::abs(expected - 1) < 1e-12, "expected size is 1");
  o.require(std::abs(mean - expected) <= 3 * se, "mean within 3 sigma");
}

void skew_demo(Outcome& o) {
  auto q = parse_query("S1(x,z),S2(y,z)");
  const std::uint64_t m = 10000, p = 64;
  const auto z = static_cast<std::size_t>(*q.find_variable("z"));
  const auto stats = Statistics::equal(q, m, m);
  SkewSpec spec(2, std::vector<ColumnSpec>(2, ColumnSpec::matching()));
  for (auto& atom : spec) atom[1] = ColumnSpec::constant_value(0);

  std::vector<std::uint64_t> on_z(3, 1);
  on_z[z] = p;
  auto inst = skewed_db(q, stats, spec, 6006);
  auto hot = route_one_round(q, relation_pointers(inst), inst.n, on_z, p, 1);
  const auto busiest = hot.max_tuples();
  o.detail << "z-hashed busiest server " << busiest << " of " << 2 * m << " tuples";
  o.require(static_cast<double>(busiest) >= 0.99 * 2 * m, "z-hashed busiest server holds >= 0.99 * 2m");

  const double bound = 2.0 * m / std::cbrt(static_cast<double>(p));
  int within = 0;
  std::uint64_t worst = 0;
  for (auto s : seeds_for(6007, 20)) {
    auto skewed = skewed_db(q, stats, spec, s);
    auto rep = route_one_round(q, relation_pointers(skewed), skewed.n, {4, 4, 4}, p, derive_seed(s, 1));
    worst = std::max(worst, rep.max_relation_tuples());
    if (static_cast<double>(rep.max_relation_tuples()) <= bound) ++within;
  }
  o.detail << "; oblivious shares " << within << "/20 within 2m/p^(1/3) = " << bound << " (worst " << worst << ")";
  o.require(within >= 19, "oblivious shares within bound in >= 19/20 trials");
}

void star_skew(Outcome& o) {
  auto q = star_query(2);
  const std::uint64_t m = 10000, p = 16;
  const auto stats = Statistics::equal(q, m, m);
  SkewSpec spec(2, {ColumnSpec::heavy_hitters({{0, m / 2}}), ColumnSpec::matching()});
  auto inst = skewed_db(q, stats, spec, 7007);
  auto catalog = detect_heavy_hitters(q, inst, "z", p);
  auto plan = star_skew_plan(q, catalog, inst.statistics(q), p);
  auto run = execute_star_skew(q, inst, plan, 7008);
  const double bound = 4 * plan.heavy_load_tuples + 4.0 * m / p;
  const auto measured = run.report.max_relation_tuples();
  auto lb = skew_lower_bound(q, x_statistics(q, inst, {plan.shape.center}), p);
  const auto measured_bits = static_cast<double>(run.report.max_bits());
  const bool same = run.output == oracle_eval(q, inst);
  o.detail << catalog.size() << " heavy hitter(s); load " << measured << " tuples vs bound " << bound << "; "
           << measured_bits << " bits vs certificate/32 = " << lb.bits / 32 << "; " << run.output.size()
           << " answers";
  o.require(static_cast<double>(measured) <= bound, "load within 4x prediction + 4 max m/p");
  o.require(measured_bits >= lb.bits / 32, "load at least certificate/32");
  o.require(same, "output equals oracle");
}

// Appends tuples that are not already present; they link heavy values so
// triangles with two heavy variables exist.
void add_tuples(Relation& r, const std::vector<std::vector<Value>>& tuples) {
  for (const auto& t : tuples) {
    bool present = false;
    for (std::size_t i = 0; i < r.size() && !present; ++i) present = std::equal(t.begin(), t.end(), r.tuple(i).begin());
    if (!present) r.add(t);
  }
}

void triangle_skew(Outcome& o) {
  auto q = parse_query("R(x,y),S(y,z),T(z,x)");
  const std::uint64_t m = 5000, p = 27;
  const auto stats = Statistics::equal(q, m, m);
  auto M = ColumnSpec::matching;
  auto H = [](std::vector<std::pair<Value, std::uint64_t>> h) { return ColumnSpec::heavy_hitters(std::move(h)); };
  struct Case {
    std::string name;
    SkewSpec spec;
    std::vector<std::vector<std::vector<Value>>> links;  // extra tuples per relation
  };
  // A relation carries at most one heavy column, otherwise the heavy values of
  // both columns would have to repeat the same tuple.
  const std::vector<Case> cases = {
      {"matching", {{M(), M()}, {M(), M()}, {M(), M()}}, {}},
      {"heavy-x", {{H({{1, 2000}}), M()}, {M(), M()}, {M(), H({{1, 2000}})}}, {}},
      {"heavy-xy", {{H({{1, 400}}), M()}, {H({{2, 400}}), M()}, {M(), H({{1, 400}})}}, {{{1, 2}}, {}, {}}},
      {"mixed",
       {{H({{1, 300}, {3, 200}}), M()}, {H({{2, 250}, {4, 150}}), M()}, {H({{5, 300}, {6, 100}}), M()}},
       {{{1, 2}, {3, 4}, {1, 4}}, {{2, 5}, {4, 6}}, {{5, 1}, {6, 3}, {5, 3}}}}};
  bool all = true;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    auto inst = skewed_db(q, stats, cases[i].spec, derive_seed(8008, i));
    for (std::size_t j = 0; j < cases[i].links.size(); ++j) add_tuples(inst.relations[j], cases[i].links[j]);
    auto tr = triangle_skew_execute(q, inst, p, derive_seed(8009, i));
    const bool same = tr.run.output == oracle_eval(q, inst);
    const double bound = 4 * tr.prediction_tuples.total;
    const auto measured = tr.run.report.max_relation_tuples();
    const bool ok = same && static_cast<double>(measured) <= bound;
    all = all && ok;
    o.detail << (i ? "; " : "") << cases[i].name << ": load " << measured << " vs " << bound << ", "
             << tr.run.output.size() << " answers (per case";
    for (auto c : tr.outputs_per_case) o.detail << " " << c;
    o.detail << ")" << (same ? "" : " OUTPUT MISMATCH");
  }
  o.require(all, "outputs equal the oracle and loads within 4x prediction");
}

void multi_round(Outcome& o) {
  const Rational half(1, 2);
  auto q = line_query(16);
  auto plan = build_plan(q, half);
  o.require(plan.depth == 2, "L16 plan depth 2");
  const std::uint64_t m = 10000, p = 64;
  const double bound = 4.0 * m / std::sqrt(static_cast<double>(p));
  const auto stats = Statistics::equal(q, m, m);
  int within = 0, same = 0;
  std::uint64_t worst = 0;
  for (auto s : seeds_for(9009, 20)) {
    auto inst = random_matching_db(q, stats, s);
    auto ex = execute_plan(plan, inst, p, derive_seed(s, 1));
    std::uint64_t load = 0;
    for (const auto& r : ex.rounds) load = std::max(load, r.load.max_relation_tuples());
    worst = std::max(worst, load);
    if (static_cast<double>(load) <= bound) ++within;
    if (ex.output == oracle_eval(q, inst)) ++same;
  }
  o.detail << "depth " << plan.depth << "; " << same << "/20 outputs equal the oracle; " << within
           << "/20 trials with round loads <= 4m/sqrt(p) = " << bound << " (worst " << worst << ")";
  o.require(same == 20, "outputs equal the oracle");
  o.require(within >= 19, "round loads within bound in >= 19/20 trials");

  int wrong = 0;
  const Rational zero = 0;
  for (int k : {4, 8, 16}) {
    const int want = static_cast<int>(std::ceil(std::log2(k)));
    wrong += rounds_upper(cycle_query(k), zero) != want;
    wrong += rounds_upper(line_query(k), zero) != want;
  }
  for (int k : {2, 3, 4, 5}) {
    wrong += rounds_upper(star_query(k), zero) != 1;
    wrong += rounds_upper(star_path_query(k), zero) != 2;
  }
  o.detail << "; " << wrong << " round-count mismatches";
  o.require(wrong == 0, "round counts of standard shapes");
}

ConjunctiveQuery random_tree(std::mt19937_64& rng, int l) {
  std::vector<std::string> names;
  for (int i = 0; i <= l; ++i) names.push_back("v" + std::to_string(i));
  std::vector<Atom> atoms;
  for (int i = 1; i <= l; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    atoms.push_back(Atom{"R" + std::to_string(i), {parent(rng), i}});
  }
  return ConjunctiveQuery::create(names, atoms);
}

void certificates(Outcome& o) {
  int plans = 0, valid = 0;
  for (const Rational& eps : {Rational(0), Rational(1, 2)}) {
    for (int k = 5; k <= 17; ++k) {
      ++plans;
      valid += validate_er_plan(build_er_plan(line_query(k), eps)).valid;
    }
    for (int k = 5; k <= 12; ++k) {
      ++plans;
      valid += validate_er_plan(build_er_plan(cycle_query(k), eps)).valid;
    }
  }
  const int c6_lo = rounds_lower(cycle_query(6), 0).rounds, c6_hi = rounds_upper(cycle_query(6), 0);
  const int c5_lo = rounds_lower(cycle_query(5), 0).rounds;
  o.detail << valid << "/" << plans << " plans valid; C6 " << c6_lo << "/" << c6_hi << ", C5 lower " << c5_lo;
  o.require(valid == plans, "every constructed plan is valid");
  o.require(c6_lo == 3 && c6_hi == 3 && c5_lo == 2, "cycle round examples");

  std::mt19937_64 rng(10010);
  std::vector<ConjunctiveQuery> trees = {star_path_query(3), star_path_query(5), star_query(4)};
  for (int k = 2; k <= 12; ++k) trees.push_back(line_query(k));
  for (int i = 0; i < 40; ++i) trees.push_back(random_tree(rng, 2 + i % 11));
  int gaps = 0, tested = 0;
  for (const auto& q : trees) {
    for (const Rational& eps : {Rational(0), Rational(1, 3), Rational(1, 2), Rational(2, 3)}) {
      ++tested;
      const int lo = rounds_lower(q, eps).rounds, hi = rounds_upper(q, eps);
      if (lo > hi || hi > lo + 1) ++gaps;
    }
  }
  o.detail << "; sandwich violated " << gaps << "/" << tested;
  o.require(gaps == 0, "sandwich");
}

void tail_bounds(Outcome& o) {
  const auto deltas = delta_grid(0.1, 3.0, 0.1);
  int checked = 0, violations = 0;
  for (double beta : {0.05, 0.1}) {
    for (std::uint64_t K : {64u, 256u}) {
      const auto balls = static_cast<std::size_t>(std::ceil(static_cast<double>(K) / beta));
      auto ex = empirical_balls(std::vector<double>(balls, 1.0), K, beta, deltas, 1000,
                                derive_seed(11011, K * 100 + static_cast<std::uint64_t>(beta * 100)));
      for (const auto& r : ex.rows) {
        if (r.bound > 0.5) continue;
        ++checked;
        violations += r.empirical > r.bound;
      }
    }
  }
  o.detail << "balls: " << violations << " violations over " << checked << " rows";
  int hc_checked = 0, hc_violations = 0;
  auto rel = random_matching_relation("R", 2, 100000, 100000, 11012);
  for (double beta : {0.05, 0.1}) {
    if (!hypercube_degree_promise(rel, {8, 8}, beta)) {
      o.require(false, "degree promise on the matching relation");
      continue;
    }
    auto ex = empirical_hypercube(rel, {8, 8}, beta, deltas, 1000, derive_seed(11013, static_cast<std::uint64_t>(beta * 100)));
    for (const auto& r : ex.rows) {
      if (r.bound > 0.5) continue;
      ++hc_checked;
      hc_violations += r.empirical > r.bound;
    }
  }
  o.detail << "; hypercube: " << hc_violations << " violations over " << hc_checked << " rows";
  o.require(checked > 0 && hc_checked > 0, "some rows have bound <= 0.5");
  o.require(violations == 0 && hc_violations == 0, "empirical exceedance <= bound");
}

void paley_zygmund(Outcome& o) {
  bool all = true;
  for (const char* name : {"C3", "L2", "T2"}) {
    auto q = named_query(name);
    for (double alpha : {0.0, 1.0 / 3}) {
      auto r = paley_zygmund_check(q, Statistics::equal(q, 20, 20), alpha, 10000, 12012);
      all = all && r.pass;
      o.detail << name << "@" << alpha << ": " << r.empirical << (r.pass ? " >= " : " < ") << r.bound << "; ";
    }
  }
  o.require(all, "every check passes");
}

}  // namespace
}  // namespace mpcjoin

int main() {
  using namespace mpcjoin;
  const std::vector<std::pair<std::string, Check>> criteria = {
      {"share exponents and tau* of standard shapes", shape_exponents},
      {"packing vertices of the triangle", triangle_vertices},
      {"one-round HyperCube output equals oracle", hypercube_correctness},
      {"skew-free triangle load", skew_free_load},
      {"expected triangle count on matchings", expected_size},
      {"skewed join: hashed vs oblivious shares", skew_demo},
      {"star join with a heavy hitter", star_skew},
      {"triangle with heavy hitters", triangle_skew},
      {"multi-round plans and round table", multi_round},
      {"round certificates", certificates},
      {"tail bounds vs simulation", tail_bounds},
      {"Paley-Zygmund output-size check", paley_zygmund},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s criterion %zu: %s | %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
