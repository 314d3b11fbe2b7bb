#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpcjoin/error.hpp"
#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/multiround.hpp"
#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/skew.hpp"
#include "mpcjoin/tail_bounds.hpp"

namespace mpcjoin::cli {
namespace {

using Json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string mode;
  std::string query;
  std::uint64_t p = 64;
  std::uint64_t n = 0;
  std::vector<std::string> m;
  std::string equal_size;
  std::string eps = "0";
  std::size_t trials = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::vector<std::uint64_t> shares;
  unsigned threads = 1;
  bool verify = false;
  std::optional<double> assert_ratio;
  bool assert_bound = false;
  bool execute = false;
  // skew
  std::vector<std::string> heavy;
  double zipf = 0;
  // certify
  double load_bits = 0;
  double size_bits = 0;
  // bins
  std::uint64_t bins = 0;
  double beta = 0.1;
  std::string delta_grid = "0.1:2.0:0.1";
};

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::uint64_t parse_count(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError(std::string("bad ") + what + ": '" + s + "'");
  }
  if (used != s.size() || v < 0 || v != std::floor(v) || v > 1e18) {
    throw UsageError(std::string("bad ") + what + ": '" + s + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::uint64_t require_seed(const Config& c) {
  if (!c.seed) throw UsageError(c.mode + " is randomized and needs --seed");
  return *c.seed;
}

ConjunctiveQuery require_query(const Config& c) {
  if (c.query.empty()) throw UsageError(c.mode + " needs -q/--query");
  return named_query(c.query);
}

// Per-atom tuple counts from -m / --equal-size, defaulting to n.
Statistics statistics(const Config& c, const ConjunctiveQuery& q) {
  std::vector<std::uint64_t> m;
  if (!c.equal_size.empty()) {
    m.assign(q.num_atoms(), parse_count(c.equal_size, "--equal-size"));
  } else if (c.m.size() == 1) {
    m.assign(q.num_atoms(), parse_count(c.m[0], "-m"));
  } else if (!c.m.empty()) {
    if (c.m.size() != q.num_atoms()) throw UsageError("-m needs one size or one per atom");
    for (const auto& s : c.m) m.push_back(parse_count(s, "-m"));
  } else if (c.n > 0) {
    m.assign(q.num_atoms(), c.n);
  } else {
    throw UsageError(c.mode + " needs -m, --equal-size or -n");
  }
  std::uint64_t n = c.n;
  if (n == 0) n = *std::max_element(m.begin(), m.end());
  return Statistics::of(q, m, n);
}

std::vector<std::string> strings(const std::vector<Rational>& v) {
  std::vector<std::string> out;
  for (const auto& r : v) out.push_back(to_string(r));
  return out;
}

Json shares_json(const ShareAssignment& sa) {
  Json j;
  j["exponents"] = strings(sa.exponents);
  j["shares"] = sa.shares;
  j["lambda"] = to_string(sa.lambda);
  j["load"] = sa.load;
  return j;
}

Json analyze(const Config& c) {
  auto q = require_query(c);
  Json j;
  j["query"] = q.to_string();
  j["variables"] = q.num_variables();
  j["atoms"] = q.num_atoms();
  j["characteristic"] = characteristic(q);
  Json comps = Json::array();
  for (const auto& comp : connected_components(q)) {
    std::vector<std::string> names;
    for (int a : comp.atoms) names.push_back(q.atom(static_cast<std::size_t>(a)).relation);
    comps.push_back(names);
  }
  j["components"] = comps;
  j["tree_like"] = is_tree_like(q);
  if (is_connected(q)) {
    auto rd = radius_diameter(q);
    j["radius"] = rd.radius;
    j["diameter"] = rd.diameter;
  }
  Json vertices = Json::array();
  for (const auto& v : packing_vertices(q)) vertices.push_back(strings(v.weights));
  j["packing_vertices"] = vertices;
  j["tau_star"] = to_string(tau_star(q));
  j["rho_star"] = to_string(edge_cover_number(q));
  j["vertex_cover"] = strings(optimal_vertex_cover(q));
  if (!c.m.empty() || !c.equal_size.empty() || c.n > 0) {
    const auto stats = statistics(c, q);
    Json s;
    s["m"] = stats.m;
    s["n"] = stats.n;
    s["bits"] = stats.bits();
    s["p"] = c.p;
    j["statistics"] = s;
    auto sf = optimize_shares_skewfree(q, stats, c.p);
    j["shares_skew_free"] = shares_json(sf);
    j["shares_skew_oblivious"] = shares_json(optimize_shares_skew_oblivious(q, stats, c.p));
    j["predicted_load_bits"] = sf.load;
    j["replication_lower_bound"] = replication_lower_bound(q, stats, sf.load);
    j["expected_output_size"] = expected_output_size(q, stats);
  }
  return j;
}

// Runs fn(t) for t in [0, trials) on `threads` workers; results stay in trial order.
template <typename Row, typename Fn>
std::vector<Row> run_trials(std::size_t trials, unsigned threads, Fn fn) {
  std::vector<Row> rows(trials);
  std::vector<std::exception_ptr> errors(trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next++) < trials;) {
      try {
        rows[t] = fn(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < std::max(1U, threads); ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

struct SimRow {
  std::uint64_t subseed = 0;
  std::uint64_t max_tuples = 0;
  std::uint64_t max_relation_tuples = 0;
  std::uint64_t max_bits = 0;
  bool output_ok = true;
};

std::string simulate(const Config& c, std::vector<std::string>& failures) {
  auto q = require_query(c);
  const auto seed = require_seed(c);
  const auto stats = statistics(c, q);
  ShareAssignment sa = c.shares.empty() ? optimize_shares_skewfree(q, stats, c.p) : fixed_shares(q, c.shares, c.p);
  // Expected bits per server: each relation spreads over the product of its variables' shares.
  double bound_bits = 0;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    double cells = 1;
    for (int v : q.atom(j).distinct_vars()) cells *= static_cast<double>(sa.shares.at(static_cast<std::size_t>(v)));
    bound_bits += stats.bits(j) / cells;
  }
  auto rows = run_trials<SimRow>(c.trials, c.threads, [&](std::size_t t) {
    SimRow row;
    row.subseed = derive_seed(seed, t);
    auto inst = random_matching_db(q, stats, row.subseed);
    const auto rels = relation_pointers(inst);
    const auto hash_seed = derive_seed(row.subseed, 1);
    LoadReport rep;
    if (c.verify) {
      auto res = run_one_round(q, rels, stats.n, sa.shares, c.p, hash_seed);
      row.output_ok = res.output == oracle_eval(q, inst);
      rep = std::move(res.report);
    } else {
      rep = route_one_round(q, rels, stats.n, sa.shares, c.p, hash_seed);
    }
    row.max_tuples = rep.max_tuples();
    row.max_relation_tuples = rep.max_relation_tuples();
    row.max_bits = rep.max_bits();
    return row;
  });

  std::ostringstream os;
  os << "# mode=simulate query=" << q.to_string() << " p=" << c.p << " n=" << stats.n << " seed=" << seed
     << " trials=" << c.trials << "\n";
  os << "# shares=";
  for (std::size_t i = 0; i < sa.shares.size(); ++i) os << (i ? "x" : "") << sa.shares[i];
  os << " bound_bits=" << num(bound_bits) << "\n";
  for (std::size_t t = 0; t < rows.size(); ++t) os << "# trial " << t << " -> seed " << rows[t].subseed << "\n";
  os << "trial,seed,max_tuples,max_relation_tuples,max_bits,bound_bits,ratio,output_ok\n";
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& r = rows[t];
    const double ratio = bound_bits > 0 ? static_cast<double>(r.max_bits) / bound_bits : 0;
    os << t << "," << r.subseed << "," << r.max_tuples << "," << r.max_relation_tuples << "," << r.max_bits << ","
       << num(bound_bits) << "," << num(ratio) << "," << (r.output_ok ? 1 : 0) << "\n";
    if (!r.output_ok) failures.push_back("trial " + std::to_string(t) + ": output differs from oracle");
    if (c.assert_ratio && ratio > *c.assert_ratio) {
      failures.push_back("trial " + std::to_string(t) + ": load ratio " + num(ratio) + " > " + num(*c.assert_ratio));
    }
  }
  return os.str();
}

Json load_json(const LoadReport& r) {
  Json j;
  j["max_tuples"] = r.max_tuples();
  j["max_relation_tuples"] = r.max_relation_tuples();
  j["max_bits"] = r.max_bits();
  j["servers"] = r.servers();
  return j;
}

// --heavy var:freq[:value]; the hitter value defaults to 0.
SkewSpec skew_spec(const Config& c, const ConjunctiveQuery& q, const Statistics& stats) {
  std::map<int, std::pair<Value, std::uint64_t>> heavy;
  for (const auto& h : c.heavy) {
    std::vector<std::string> parts;
    std::stringstream ss(h);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("--heavy expects var:freq[:value], got '" + h + "'");
    auto var = q.find_variable(parts[0]);
    if (!var) throw UsageError("--heavy names unknown variable '" + parts[0] + "'");
    Value value = parts.size() == 3 ? static_cast<Value>(parse_count(parts[2], "hitter value")) : 0;
    heavy[*var] = {value, parse_count(parts[1], "hitter frequency")};
  }
  SkewSpec spec(q.num_atoms());
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    for (int v : q.atom(j).vars) {
      if (auto it = heavy.find(v); it != heavy.end()) {
        spec[j].push_back(ColumnSpec::heavy_hitters({it->second}));
      } else if (c.zipf > 0) {
        spec[j].push_back(ColumnSpec::zipf(c.zipf, static_cast<std::size_t>(stats.n)));
      } else {
        spec[j].push_back(ColumnSpec::matching());
      }
    }
  }
  return spec;
}

Json skew(const Config& c, std::vector<std::string>& failures) {
  auto q = require_query(c);
  const auto seed = require_seed(c);
  const auto stats = statistics(c, q);
  const auto inst = skewed_db(q, stats, skew_spec(c, q, stats), derive_seed(seed, 0));
  const auto run_seed = derive_seed(seed, 1);
  Json j;
  j["mode"] = "skew";
  j["query"] = q.to_string();
  j["p"] = c.p;
  j["n"] = stats.n;
  j["m"] = stats.m;
  j["seed"] = seed;
  j["instance_seed"] = derive_seed(seed, 0);
  j["run_seed"] = run_seed;
  const auto bpv = static_cast<double>(stats.bits_per_value());
  double measured_bits = 0;
  double prediction_bits = 0;
  TupleSet output;
  if (cycle_order(q) && q.num_atoms() == 3) {
    auto tr = triangle_skew_execute(q, inst, c.p, run_seed);
    j["algorithm"] = "triangle";
    j["load"] = load_json(tr.run.report);
    Json cases;
    for (std::size_t i = 0; i < tr.run.cases.size(); ++i) cases[tr.run.case_names[i]] = load_json(tr.run.cases[i]);
    j["cases"] = cases;
    j["outputs_per_case"] = tr.outputs_per_case;
    j["prediction_tuples"] = {{"light", tr.prediction_tuples.light},
                              {"pair_terms", tr.prediction_tuples.pair_terms},
                              {"total", tr.prediction_tuples.total}};
    measured_bits = static_cast<double>(tr.run.report.max_bits());
    prediction_bits = tr.prediction_tuples.total * 2 * bpv;
    output = std::move(tr.run.output);
  } else {
    const auto shape = star_shape(q);
    const std::string centre = q.variable(static_cast<std::size_t>(shape.center));
    auto catalog = detect_heavy_hitters(q, inst, centre, c.p);
    auto plan = star_skew_plan(q, catalog, inst.statistics(q), c.p);
    auto run = execute_star_skew(q, inst, plan, run_seed);
    j["algorithm"] = "star";
    j["heavy_hitters"] = catalog.size();
    j["plan"] = Json::parse(plan.to_json());
    j["load"] = load_json(run.report);
    Json cases;
    for (std::size_t i = 0; i < run.cases.size(); ++i) cases[run.case_names[i]] = load_json(run.cases[i]);
    j["cases"] = cases;
    auto lb = skew_lower_bound(q, x_statistics(q, inst, {shape.center}), c.p);
    j["lower_bound_bits"] = lb.bits;
    j["lower_bound_witness"] = strings(lb.witness);
    measured_bits = static_cast<double>(run.report.max_bits());
    prediction_bits = std::max(plan.heavy_load_bits, plan.light_load_bits);
    output = std::move(run.output);
  }
  j["measured_bits"] = measured_bits;
  j["prediction_bits"] = prediction_bits;
  j["output_tuples"] = output.size();
  if (c.verify) {
    const bool ok = output == oracle_eval(q, inst);
    j["output_ok"] = ok;
    if (!ok) failures.push_back("skew run: output differs from oracle");
  }
  if (c.assert_ratio && measured_bits > *c.assert_ratio * prediction_bits) {
    failures.push_back("skew run: load " + num(measured_bits) + " > " + num(*c.assert_ratio) + " x prediction " +
                       num(prediction_bits));
  }
  return j;
}

Json plan(const Config& c, std::vector<std::string>& failures) {
  auto q = require_query(c);
  const Rational eps = parse_rational(c.eps);
  auto mp = build_plan(q, eps);
  Json j;
  j["mode"] = "plan";
  j["plan"] = Json::parse(mp.to_json());
  j["rounds_upper"] = rounds_upper(q, eps);
  auto lower = rounds_lower(q, eps);
  j["rounds_lower"] = {{"rounds", lower.rounds}, {"shape", lower.shape}, {"weak", lower.weak}};
  if (!c.execute) return j;
  const auto seed = require_seed(c);
  const auto stats = statistics(c, q);
  const auto inst = random_matching_db(q, stats, derive_seed(seed, 0));
  auto ex = execute_plan(mp, inst, c.p, derive_seed(seed, 1));
  // Per-relation tuple load against max_j m_j / p^{1 - eps}.
  const double max_m = static_cast<double>(*std::max_element(stats.m.begin(), stats.m.end()));
  const double bound = max_m / std::pow(static_cast<double>(c.p), 1 - to_double(eps));
  j["seed"] = seed;
  j["instance_seed"] = derive_seed(seed, 0);
  j["run_seed"] = derive_seed(seed, 1);
  j["bound_tuples"] = bound;
  Json rounds = Json::array();
  for (const auto& r : ex.rounds) {
    Json rj = load_json(r.load);
    rj["round"] = r.round;
    rj["nodes"] = r.nodes;
    rounds.push_back(rj);
    if (c.assert_ratio && static_cast<double>(r.load.max_relation_tuples()) > *c.assert_ratio * bound) {
      failures.push_back("round " + std::to_string(r.round) + ": load " +
                         std::to_string(r.load.max_relation_tuples()) + " > " +
                         num(*c.assert_ratio) + " x " + num(bound));
    }
  }
  j["rounds"] = rounds;
  j["view_sizes"] = ex.view_sizes;
  j["output_tuples"] = ex.output.size();
  if (c.verify) {
    const bool ok = ex.output == oracle_eval(q, inst);
    j["output_ok"] = ok;
    if (!ok) failures.push_back("plan execution: output differs from oracle");
  }
  return j;
}

Json certify(const Config& c, std::vector<std::string>& failures) {
  auto q = require_query(c);
  const Rational eps = parse_rational(c.eps);
  auto er = build_er_plan(q, eps);
  auto v = validate_er_plan(er);
  Json j;
  j["mode"] = "certify";
  j["er_plan"] = Json::parse(er.to_json());
  j["valid"] = v.valid;
  if (!v.valid) {
    j["violation"] = v.violation;
    j["violation_level"] = v.level;
    failures.push_back("level " + std::to_string(v.level) + ": " + v.violation);
  }
  auto lower = rounds_lower(q, eps);
  j["rounds_lower"] = {{"rounds", lower.rounds}, {"shape", lower.shape}, {"weak", lower.weak}};
  j["rounds_upper"] = rounds_upper(q, eps);
  if (c.load_bits > 0 || c.size_bits > 0) {
    auto b = beta_certificate(er, c.load_bits, c.size_bits, c.p);
    j["certificate"] = {{"L", c.load_bits},   {"M", c.size_bits}, {"p", c.p},       {"r", b.r},
                        {"tau_m", to_string(b.tau_m)}, {"beta", b.beta}, {"fraction", b.fraction}};
  }
  return j;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) {
    try {
      parts.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw UsageError("bad --delta-grid '" + text + "'");
    }
  }
  if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0]) throw UsageError("--delta-grid expects lo:hi:step");
  return delta_grid(parts[0], parts[1], parts[2]);
}

std::string bins(const Config& c, std::vector<std::string>& failures) {
  const auto seed = require_seed(c);
  const auto deltas = parse_grid(c.delta_grid);
  MaxLoadExperiment exp;
  std::string header;
  if (!c.shares.empty()) {
    const std::uint64_t m = c.m.empty() ? 100000 : parse_count(c.m.front(), "-m");
    const std::uint64_t n = c.n ? c.n : m;
    auto r = random_matching_relation("R", c.shares.size(), m, n, derive_seed(seed, 0));
    exp = empirical_hypercube(r, c.shares, c.beta, deltas, c.trials, derive_seed(seed, 1));
    header = "# mode=bins partition=hypercube m=" + std::to_string(m) + " n=" + std::to_string(n);
  } else {
    if (c.bins < 2) throw UsageError("bins needs --K >= 2 or --shares");
    // Equal weights at the cap beta m / K: K / beta balls of weight 1.
    const auto balls = static_cast<std::size_t>(std::ceil(static_cast<double>(c.bins) / c.beta));
    exp = empirical_balls(std::vector<double>(balls, 1.0), c.bins, c.beta, deltas, c.trials, derive_seed(seed, 1));
    header = "# mode=bins partition=balls K=" + std::to_string(c.bins) + " balls=" + std::to_string(balls);
  }
  std::ostringstream os;
  os << header << " beta=" << num(c.beta) << " trials=" << c.trials << " seed=" << seed << "\n";
  for (std::size_t t = 0; t < exp.trial_seeds.size(); ++t) os << "# trial " << t << " -> seed " << exp.trial_seeds[t] << "\n";
  os << "delta,threshold,empirical,bound\n";
  for (const auto& r : exp.rows) {
    os << num(r.delta) << "," << num(r.threshold) << "," << num(r.empirical) << "," << num(r.bound) << "\n";
    if (c.assert_bound && r.bound <= 0.5 && r.empirical > r.bound) {
      failures.push_back("delta " + num(r.delta) + ": empirical " + num(r.empirical) + " > bound " + num(r.bound));
    }
  }
  return os.str();
}

void add_common(CLI::App& app, Config& c) {
  app.add_option("-q,--query", c.query, "query text or shorthand (C3, L5, T2, SP3, K4, B3_2)");
  app.add_option("-p", c.p, "number of servers")->check(CLI::PositiveNumber);
  app.add_option("-n", c.n, "domain size");
  app.add_option("-m", c.m, "tuples per relation: one value or one per atom")->delimiter(',');
  app.add_option("--equal-size", c.equal_size, "same tuple count for every relation");
  app.add_option("--eps", c.eps, "space exponent, rational");
  app.add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("-o,--out", c.out, "output file");
  app.add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--shares", c.shares, "explicit shares, one per variable")->delimiter(',');
  app.add_option("--threads", c.threads, "worker threads");
  app.add_flag("--verify", c.verify, "compare outputs with the oracle");
  app.add_option("--assert-ratio", c.assert_ratio, "fail when measured load exceeds this multiple of the bound");
  app.add_flag("--assert-bound", c.assert_bound, "fail when an exceedance frequency exceeds its bound (bins)");
  app.add_flag("--execute", c.execute, "execute the plan on a matching instance");
  app.add_option("--heavy", c.heavy, "heavy hitter var:freq[:value] (skew)");
  app.add_option("--zipf", c.zipf, "zipf exponent for the remaining columns (skew)");
  app.add_option("-L", c.load_bits, "load in bits (certify)");
  app.add_option("-M", c.size_bits, "input size in bits (certify)");
  app.add_option("--K", c.bins, "number of bins");
  app.add_option("--beta", c.beta, "weight cap factor");
  app.add_option("--delta-grid", c.delta_grid, "lo:hi:step");
}

std::string render(const Json& j, const std::string& format) {
  if (format == "csv") {
    // Flat scalar fields only; nested values are emitted as JSON text.
    std::ostringstream os;
    os << "key,value\n";
    for (const auto& [k, v] : j.items()) os << k << ",\"" << (v.is_string() ? v.get<std::string>() : v.dump()) << "\"\n";
    return os.str();
  }
  return j.dump(2) + "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Simulator and analyzer for one- and multi-round MPC joins", "mpcjoin"};
  app.set_config("--config", "", "flat key=value file; command-line flags win");
  app.fallthrough();
  add_common(app, c);
  app.add_option("--mode", c.mode, "subcommand, for config files")
      ->check(CLI::IsMember({"analyze", "simulate", "skew", "plan", "certify", "bins"}));
  for (const char* name : {"analyze", "simulate", "skew", "plan", "certify", "bins"}) {
    app.add_subcommand(name)->callback([&c, name] { c.mode = name; });
  }
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::vector<std::string> failures;
  std::string text;
  try {
    if (c.mode.empty()) throw UsageError("no subcommand given");
    if (c.mode == "analyze") {
      text = render(analyze(c), c.format);
    } else if (c.mode == "simulate") {
      text = simulate(c, failures);
    } else if (c.mode == "skew") {
      text = render(skew(c, failures), c.format);
    } else if (c.mode == "plan") {
      text = render(plan(c, failures), c.format);
    } else if (c.mode == "certify") {
      text = render(certify(c, failures), c.format);
    } else {
      text = bins(c, failures);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (c.out.empty()) {
    out << text;
  } else {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
      err << "cannot write " << c.out << "\n";
      return kExitUsage;
    }
    f << text;
  }
  for (const auto& f : failures) err << "assertion failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitAssertion;
}

}  // namespace mpcjoin::cli
