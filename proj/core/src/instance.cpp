#include "mpcjoin/instance.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mpcjoin/error.hpp"
#include "mpcjoin/join.hpp"

namespace mpcjoin {

bool Relation::has_duplicates() const {
  std::vector<std::uint32_t> rows(size());
  std::iota(rows.begin(), rows.end(), 0);
  auto less = [&](std::uint32_t a, std::uint32_t b) {
    auto ta = tuple(a);
    auto tb = tuple(b);
    return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
  };
  std::sort(rows.begin(), rows.end(), less);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!less(rows[i - 1], rows[i])) return true;
  }
  return false;
}

std::vector<std::uint64_t> Instance::sizes() const {
  std::vector<std::uint64_t> out;
  for (const auto& r : relations) out.push_back(r.size());
  return out;
}

Statistics Instance::statistics(const ConjunctiveQuery& q) const {
  auto m = sizes();
  for (auto& v : m) v = std::max<std::uint64_t>(v, 1);
  return Statistics::of(q, m, n);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return mix64(mix64(seed) ^ mix64(~index)); }

namespace {

// m distinct values of [0, n) in uniformly random order (partial Fisher-Yates).
std::vector<Value> random_injection(std::uint64_t m, std::uint64_t n, std::mt19937_64& rng,
                                    const std::set<Value>& excluded = {}) {
  if (m + excluded.size() > n) throw PreconditionError("injection needs m <= n");
  std::vector<Value> out;
  out.reserve(m);
  const std::uint64_t range = n - excluded.size();
  // Map [0, range) onto [0, n) minus the excluded values.
  std::vector<Value> skip(excluded.begin(), excluded.end());
  auto lift = [&](std::uint64_t r) {
    std::uint64_t v = r;
    for (Value e : skip) {
      if (e <= v) ++v;
    }
    return static_cast<Value>(v);
  };
  if (range <= 8 * m + 1024) {
    std::vector<Value> pool(range);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::uint64_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, range - 1);
      std::swap(pool[i], pool[pick(rng)]);
      out.push_back(lift(pool[i]));
    }
    return out;
  }
  std::unordered_map<std::uint64_t, std::uint64_t> moved;
  auto at = [&](std::uint64_t i) {
    auto it = moved.find(i);
    return it == moved.end() ? i : it->second;
  };
  for (std::uint64_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::uint64_t> pick(i, range - 1);
    std::uint64_t j = pick(rng);
    std::uint64_t vi = at(i);
    std::uint64_t vj = at(j);
    moved[i] = vj;
    moved[j] = vi;
    out.push_back(lift(vj));
  }
  return out;
}

}  // namespace

Relation random_matching_relation(const std::string& name, std::size_t arity, std::uint64_t m, std::uint64_t n,
                                  std::uint64_t seed) {
  if (m > n) throw PreconditionError("matching relation " + name + " needs m <= n");
  if (n > (std::uint64_t{1} << 32)) throw PreconditionError("domain size must fit 32-bit values");
  std::mt19937_64 rng(seed);
  Relation r;
  r.name = name;
  r.arity = arity;
  r.data.resize(arity * m);
  for (std::size_t c = 0; c < arity; ++c) {
    auto column = random_injection(m, n, rng);
    for (std::uint64_t row = 0; row < m; ++row) r.data[row * arity + c] = column[row];
  }
  return r;
}

Instance random_matching_db(const ConjunctiveQuery& q, const Statistics& stats, std::uint64_t seed) {
  if (stats.m.size() != q.num_atoms()) throw PreconditionError("need one size per atom");
  Instance inst;
  inst.n = stats.n;
  inst.seed = seed;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    inst.relations.push_back(
        random_matching_relation(q.atom(j).relation, q.atom(j).arity(), stats.m[j], stats.n, derive_seed(seed, j)));
  }
  return inst;
}

ColumnSpec ColumnSpec::constant_value(Value h) {
  ColumnSpec c;
  c.kind = Kind::kConstant;
  c.constant = h;
  return c;
}

ColumnSpec ColumnSpec::zipf(double s, std::size_t values) {
  ColumnSpec c;
  c.kind = Kind::kZipf;
  c.zipf_exponent = s;
  c.zipf_values = values;
  return c;
}

ColumnSpec ColumnSpec::heavy_hitters(std::vector<std::pair<Value, std::uint64_t>> placements) {
  ColumnSpec c;
  c.kind = Kind::kHeavy;
  c.heavy = std::move(placements);
  return c;
}

namespace {

struct ColumnSampler {
  const ColumnSpec* spec = nullptr;
  std::vector<Value> zipf_domain;
  std::discrete_distribution<std::size_t> zipf_rank;

  Value draw_zipf(std::mt19937_64& rng) { return zipf_domain[zipf_rank(rng)]; }
};

Relation skewed_relation(const Atom& atom, std::uint64_t m, std::uint64_t n, const std::vector<ColumnSpec>& spec,
                         std::uint64_t seed) {
  const std::size_t arity = atom.arity();
  if (spec.size() != arity) throw PreconditionError("skew spec for " + atom.relation + " needs one column per position");
  bool all_matching = std::all_of(spec.begin(), spec.end(),
                                  [](const ColumnSpec& c) { return c.kind == ColumnSpec::Kind::kMatching; });
  if (all_matching) return random_matching_relation(atom.relation, arity, m, n, seed);

  // Capacity: distinct tuples the column distributions can produce.
  long double capacity = 1;
  bool resamplable = false;
  for (const auto& c : spec) {
    switch (c.kind) {
      case ColumnSpec::Kind::kMatching:
        if (m > n) throw PreconditionError("matching column needs m <= n");
        capacity *= static_cast<long double>(n);
        break;
      case ColumnSpec::Kind::kConstant:
        if (c.constant >= n) throw PreconditionError("constant value outside the domain");
        break;
      case ColumnSpec::Kind::kZipf:
        if (c.zipf_values == 0 || c.zipf_values > n) throw PreconditionError("zipf column needs 1..n values");
        capacity *= static_cast<long double>(c.zipf_values);
        resamplable = true;
        break;
      case ColumnSpec::Kind::kHeavy: {
        std::uint64_t placed = 0;
        for (auto [v, f] : c.heavy) {
          if (v >= n) throw PreconditionError("heavy value outside the domain");
          placed += f;
        }
        if (placed > m) throw PreconditionError("heavy frequencies exceed the relation size");
        if (m - placed + c.heavy.size() > n) throw PreconditionError("not enough fresh values for the light rows");
        capacity *= static_cast<long double>(n);
        break;
      }
    }
  }
  if (capacity < static_cast<long double>(m)) {
    throw PreconditionError("unsatisfiable skew spec for " + atom.relation + ": at most " +
                            std::to_string(static_cast<double>(capacity)) + " distinct tuples");
  }

  std::mt19937_64 rng(seed);
  std::vector<ColumnSampler> samplers(arity);
  std::vector<std::vector<Value>> columns(arity);
  for (std::size_t c = 0; c < arity; ++c) {
    const ColumnSpec& cs = spec[c];
    samplers[c].spec = &cs;
    auto& col = columns[c];
    switch (cs.kind) {
      case ColumnSpec::Kind::kMatching:
        col = random_injection(m, n, rng);
        break;
      case ColumnSpec::Kind::kConstant:
        col.assign(m, cs.constant);
        break;
      case ColumnSpec::Kind::kZipf: {
        samplers[c].zipf_domain = random_injection(cs.zipf_values, n, rng);
        std::vector<double> w;
        for (std::size_t r = 1; r <= cs.zipf_values; ++r) w.push_back(std::pow(static_cast<double>(r), -cs.zipf_exponent));
        samplers[c].zipf_rank = std::discrete_distribution<std::size_t>(w.begin(), w.end());
        for (std::uint64_t row = 0; row < m; ++row) col.push_back(samplers[c].draw_zipf(rng));
        break;
      }
      case ColumnSpec::Kind::kHeavy: {
        std::set<Value> taken;
        for (auto [v, f] : cs.heavy) {
          taken.insert(v);
          col.insert(col.end(), f, v);
        }
        auto light = random_injection(m - col.size(), n, rng, taken);
        col.insert(col.end(), light.begin(), light.end());
        std::shuffle(col.begin(), col.end(), rng);
        break;
      }
    }
  }

  Relation r;
  r.name = atom.relation;
  r.arity = arity;
  r.data.resize(arity * m);
  auto fill = [&]() {
    for (std::uint64_t row = 0; row < m; ++row) {
      for (std::size_t c = 0; c < arity; ++c) r.data[row * arity + c] = columns[c][row];
    }
  };
  fill();
  for (int attempt = 0; attempt < 1000 && r.has_duplicates(); ++attempt) {
    // Find duplicate rows (all but the first copy) and redraw them.
    std::vector<std::uint32_t> rows(m);
    std::iota(rows.begin(), rows.end(), 0);
    auto less = [&](std::uint32_t a, std::uint32_t b) {
      auto ta = r.tuple(a);
      auto tb = r.tuple(b);
      if (std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end())) return true;
      if (std::lexicographical_compare(tb.begin(), tb.end(), ta.begin(), ta.end())) return false;
      return a < b;
    };
    std::sort(rows.begin(), rows.end(), less);
    std::vector<std::uint32_t> dups;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      auto ta = r.tuple(rows[i - 1]);
      auto tb = r.tuple(rows[i]);
      if (std::equal(ta.begin(), ta.end(), tb.begin())) dups.push_back(rows[i]);
    }
    if (resamplable) {
      for (auto row : dups) {
        for (std::size_t c = 0; c < arity; ++c) {
          if (spec[c].kind == ColumnSpec::Kind::kZipf) columns[c][row] = samplers[c].draw_zipf(rng);
        }
      }
    } else {
      // Only fixed-frequency columns: re-pair them, frequencies stay exact.
      for (std::size_t c = 0; c < arity; ++c) {
        if (spec[c].kind == ColumnSpec::Kind::kHeavy) std::shuffle(columns[c].begin(), columns[c].end(), rng);
      }
    }
    fill();
  }
  if (r.has_duplicates()) throw PreconditionError("could not realize skew spec for " + atom.relation + " without duplicates");
  return r;
}

}  // namespace

Instance skewed_db(const ConjunctiveQuery& q, const Statistics& stats, const SkewSpec& spec, std::uint64_t seed) {
  if (spec.size() != q.num_atoms()) throw PreconditionError("skew spec needs one entry per atom");
  Instance inst;
  inst.n = stats.n;
  inst.seed = seed;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    inst.relations.push_back(skewed_relation(q.atom(j), stats.m[j], stats.n, spec[j], derive_seed(seed, j)));
  }
  return inst;
}

std::vector<std::pair<std::vector<Value>, std::uint64_t>> DegreeProfile::at_least(std::uint64_t threshold) const {
  std::vector<std::pair<std::vector<Value>, std::uint64_t>> out;
  for (const auto& [key, f] : frequency) {
    if (f >= threshold) out.emplace_back(key, f);
  }
  return out;
}

DegreeProfile degree_profile(const Relation& r, const std::vector<std::size_t>& positions) {
  if (positions.empty()) throw PreconditionError("degree profile needs at least one position");
  for (auto pos : positions) {
    if (pos >= r.arity) throw PreconditionError("position out of range");
  }
  DegreeProfile prof;
  prof.positions = positions;
  std::vector<Value> key(positions.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto t = r.tuple(i);
    for (std::size_t k = 0; k < positions.size(); ++k) key[k] = t[positions[k]];
    auto f = ++prof.frequency[key];
    prof.max_degree = std::max(prof.max_degree, f);
  }
  return prof;
}

PaleyZygmundResult paley_zygmund_check(const ConjunctiveQuery& q, const Statistics& stats, double alpha,
                                       std::size_t trials, std::uint64_t seed) {
  if (!is_connected(q)) throw PreconditionError("Paley-Zygmund check needs a connected query");
  if (trials < 100) throw PreconditionError("Paley-Zygmund check needs at least 100 trials");
  if (alpha < 0 || alpha >= 1) throw PreconditionError("alpha must lie in [0, 1)");
  PaleyZygmundResult res;
  res.mu = expected_output_size(q, stats);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Instance inst = random_matching_db(q, stats, derive_seed(seed, t));
    if (static_cast<double>(oracle_count(q, inst)) > alpha * res.mu) ++hits;
  }
  res.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  res.bound = (1 - alpha) * (1 - alpha) * res.mu / (res.mu + 1);
  res.sigma = std::sqrt(res.bound * (1 - res.bound) / static_cast<double>(trials));
  res.pass = res.empirical >= res.bound - 3 * res.sigma;
  return res;
}

void write_relation(std::ostream& out, const Relation& r, std::uint64_t n) {
  out << "# " << r.name << ' ' << r.arity << ' ' << r.size() << ' ' << n << '\n';
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto t = r.tuple(i);
    for (std::size_t c = 0; c < t.size(); ++c) out << (c ? " " : "") << t[c];
    out << '\n';
  }
}

Relation read_relation(std::istream& in, std::uint64_t* n) {
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("empty relation file");
  std::istringstream header(line);
  std::string hash;
  Relation r;
  std::uint64_t m = 0;
  std::uint64_t domain = 0;
  if (!(header >> hash >> r.name >> r.arity >> m >> domain) || hash != "#") {
    throw PreconditionError("relation header must be '# name arity m n'");
  }
  r.data.reserve(r.arity * m);
  for (std::uint64_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < r.arity; ++c) {
      std::uint64_t v = 0;
      if (!(in >> v)) throw PreconditionError("relation file ends early");
      if (v >= domain) throw PreconditionError("value outside [0, n)");
      r.data.push_back(static_cast<Value>(v));
    }
  }
  if (n) *n = domain;
  return r;
}

}  // namespace mpcjoin
