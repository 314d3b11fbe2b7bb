#include "mpcjoin/hypercube.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mpcjoin/error.hpp"

namespace mpcjoin {

HashFamily::HashFamily(std::uint64_t seed, std::vector<std::uint64_t> ranges) : seed_(seed), ranges_(std::move(ranges)) {
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i] == 0) throw PreconditionError("hash range must be positive");
    seeds_.push_back(derive_seed(seed, i));
  }
}

std::uint64_t HashFamily::operator()(std::size_t var, Value v) const {
  unsigned __int128 wide = static_cast<unsigned __int128>(mix64(seeds_[var] ^ v)) * ranges_[var];
  return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t grid_size(const std::vector<std::uint64_t>& shares) {
  std::uint64_t total = 1;
  for (auto s : shares) {
    if (s == 0) throw PreconditionError("shares must be positive");
    if (total > UINT64_MAX / s) throw PreconditionError("share product overflows");
    total *= s;
  }
  return total;
}

std::uint64_t server_id(const std::vector<std::uint64_t>& coordinates, const std::vector<std::uint64_t>& shares) {
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) id = id * shares[i] + coordinates[i];
  return id;
}

std::vector<std::uint64_t> server_coordinates(std::uint64_t id, const std::vector<std::uint64_t>& shares) {
  std::vector<std::uint64_t> c(shares.size());
  for (std::size_t i = shares.size(); i-- > 0;) {
    c[i] = id % shares[i];
    id /= shares[i];
  }
  return c;
}

namespace {

// Per-atom routing table: strides for the bound variables and the offsets
// of every free-coordinate combination.
struct AtomRoute {
  std::vector<std::pair<std::size_t, int>> positions;  // (position, variable) of first occurrences
  std::vector<std::array<std::size_t, 3>> repeats;  // (position, first position, variable)
  std::vector<std::uint64_t> offsets;
};

std::vector<std::uint64_t> strides_of(const std::vector<std::uint64_t>& shares) {
  std::vector<std::uint64_t> stride(shares.size(), 1);
  for (std::size_t i = shares.size(); i-- > 1;) stride[i - 1] = stride[i] * shares[i];
  return stride;
}

AtomRoute make_route(const Atom& atom, const std::vector<std::uint64_t>& shares) {
  AtomRoute r;
  std::vector<long> first(shares.size(), -1);
  for (std::size_t m = 0; m < atom.vars.size(); ++m) {
    auto v = static_cast<std::size_t>(atom.vars[m]);
    if (first[v] >= 0) {
      r.repeats.push_back({m, static_cast<std::size_t>(first[v]), v});
    } else {
      first[v] = static_cast<long>(m);
      r.positions.emplace_back(m, atom.vars[m]);
    }
  }
  auto stride = strides_of(shares);
  r.offsets = {0};
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (first[i] >= 0) continue;
    std::vector<std::uint64_t> next;
    next.reserve(r.offsets.size() * shares[i]);
    for (auto o : r.offsets) {
      for (std::uint64_t c = 0; c < shares[i]; ++c) next.push_back(o + c * stride[i]);
    }
    r.offsets = std::move(next);
  }
  std::sort(r.offsets.begin(), r.offsets.end());
  return r;
}

// Base server id of t, or false if repeated variables disagree.
bool route_base(const AtomRoute& r, std::span<const Value> t, const HashFamily& h, const std::vector<std::uint64_t>& stride,
                std::uint64_t& base) {
  base = 0;
  for (auto [pos, var] : r.positions) base += h(static_cast<std::size_t>(var), t[pos]) * stride[var];
  for (auto [pos, first, var] : r.repeats) {
    if (h(var, t[pos]) != h(var, t[first])) return false;
  }
  return true;
}

void check_inputs(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                  const std::vector<std::uint64_t>& shares, std::uint64_t p) {
  if (relations.size() != q.num_atoms()) throw PreconditionError("need one relation per atom");
  if (shares.size() != q.num_variables()) throw PreconditionError("need one share per variable");
  if (grid_size(shares) > p) throw PreconditionError("share product exceeds p");
  for (std::size_t j = 0; j < relations.size(); ++j) {
    if (relations[j]->arity != q.atom(j).arity()) throw PreconditionError("relation arity does not match its atom");
  }
}

LoadReport blank_report(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations, std::uint64_t n,
                        const std::vector<std::uint64_t>& shares, std::uint64_t p) {
  std::vector<std::string> names;
  std::vector<std::size_t> arity;
  for (const auto& a : q.atoms()) {
    names.push_back(a.relation);
    arity.push_back(a.arity());
  }
  LoadReport rep = LoadReport::empty(names, arity, grid_size(shares), n);
  rep.query = q.to_string();
  rep.p = p;
  rep.shares = shares;
  for (std::size_t j = 0; j < relations.size(); ++j) rep.input_tuples[j] = relations[j]->size();
  return rep;
}

template <typename Deliver>
void route(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
           const std::vector<std::uint64_t>& shares, std::uint64_t seed, LoadReport& rep, Deliver&& deliver) {
  HashFamily h(seed, shares);
  auto stride = strides_of(shares);
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    AtomRoute r = make_route(q.atom(j), shares);
    const Relation& rel = *relations[j];
    for (std::size_t i = 0; i < rel.size(); ++i) {
      auto t = rel.tuple(i);
      std::uint64_t base = 0;
      if (!route_base(r, t, h, stride, base)) continue;
      for (auto o : r.offsets) {
        ++rep.tuples[base + o][j];
        deliver(base + o, j, t);
      }
      rep.sent[j] += r.offsets.size();
    }
  }
}

}  // namespace

std::vector<std::uint64_t> destination_subcube(const Atom& atom, std::span<const Value> t, const HashFamily& h) {
  if (t.size() != atom.arity()) throw PreconditionError("tuple arity does not match atom");
  const auto& shares = h.ranges();
  AtomRoute r = make_route(atom, shares);
  std::uint64_t base = 0;
  if (!route_base(r, t, h, strides_of(shares), base)) return {};
  std::vector<std::uint64_t> out;
  for (auto o : r.offsets) out.push_back(base + o);
  return out;
}

LoadReport LoadReport::empty(const std::vector<std::string>& relations, const std::vector<std::size_t>& arity,
                             std::uint64_t servers, std::uint64_t n) {
  LoadReport rep;
  rep.relations = relations;
  rep.arity = arity;
  rep.input_tuples.assign(relations.size(), 0);
  rep.sent.assign(relations.size(), 0);
  rep.bits_per_value = Statistics{{}, {}, n}.bits_per_value();
  rep.tuples.assign(servers, std::vector<std::uint64_t>(relations.size(), 0));
  return rep;
}

std::uint64_t LoadReport::server_tuples(std::size_t s) const {
  std::uint64_t t = 0;
  for (auto c : tuples[s]) t += c;
  return t;
}

std::uint64_t LoadReport::server_bits(std::size_t s) const {
  std::uint64_t b = 0;
  for (std::size_t j = 0; j < relations.size(); ++j) b += tuples[s][j] * arity[j] * bits_per_value;
  return b;
}

std::uint64_t LoadReport::max_tuples() const {
  std::uint64_t m = 0;
  for (std::size_t s = 0; s < servers(); ++s) m = std::max(m, server_tuples(s));
  return m;
}

std::uint64_t LoadReport::max_bits() const {
  std::uint64_t m = 0;
  for (std::size_t s = 0; s < servers(); ++s) m = std::max(m, server_bits(s));
  return m;
}

std::uint64_t LoadReport::max_relation_tuples(std::size_t j) const {
  std::uint64_t m = 0;
  for (const auto& row : tuples) m = std::max(m, row[j]);
  return m;
}

std::uint64_t LoadReport::max_relation_tuples() const {
  std::uint64_t m = 0;
  for (std::size_t j = 0; j < relations.size(); ++j) m = std::max(m, max_relation_tuples(j));
  return m;
}

std::vector<double> LoadReport::replication() const {
  std::vector<double> r;
  for (std::size_t j = 0; j < relations.size(); ++j) {
    r.push_back(input_tuples[j] == 0 ? 0.0 : static_cast<double>(sent[j]) / static_cast<double>(input_tuples[j]));
  }
  return r;
}

void LoadReport::accumulate(const LoadReport& other, std::size_t server_offset) {
  if (other.relations.size() != relations.size()) throw PreconditionError("reports cover different relations");
  if (server_offset + other.servers() > servers()) tuples.resize(server_offset + other.servers(), std::vector<std::uint64_t>(relations.size(), 0));
  for (std::size_t s = 0; s < other.servers(); ++s) {
    for (std::size_t j = 0; j < relations.size(); ++j) tuples[server_offset + s][j] += other.tuples[s][j];
  }
  for (std::size_t j = 0; j < relations.size(); ++j) sent[j] += other.sent[j];
}

std::string LoadReport::to_json() const {
  nlohmann::ordered_json j;
  j["query"] = query;
  j["p"] = p;
  j["shares"] = shares;
  j["relations"] = relations;
  nlohmann::ordered_json servers_json = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < servers(); ++s) {
    nlohmann::ordered_json row;
    row["tuples"] = server_tuples(s);
    row["bits"] = server_bits(s);
    row["per_relation"] = tuples[s];
    servers_json.push_back(row);
  }
  j["per_server"] = servers_json;
  j["max_tuples"] = max_tuples();
  j["max_relation_tuples"] = max_relation_tuples();
  j["max_bits"] = max_bits();
  j["bound_id"] = bound_id;
  j["bound_bits"] = bound_bits;
  j["replication"] = replication();
  return j.dump(2);
}

std::string LoadReport::to_csv() const {
  std::ostringstream out;
  out << "server";
  for (const auto& r : relations) out << ',' << r;
  out << ",tuples,bits\n";
  for (std::size_t s = 0; s < servers(); ++s) {
    out << s;
    for (auto c : tuples[s]) out << ',' << c;
    out << ',' << server_tuples(s) << ',' << server_bits(s) << '\n';
  }
  return out.str();
}

LoadReport route_one_round(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations, std::uint64_t n,
                           const std::vector<std::uint64_t>& shares, std::uint64_t p, std::uint64_t seed) {
  check_inputs(q, relations, shares, p);
  LoadReport rep = blank_report(q, relations, n, shares, p);
  route(q, relations, shares, seed, rep, [](std::uint64_t, std::size_t, std::span<const Value>) {});
  return rep;
}

OneRoundResult run_one_round(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                             std::uint64_t n, const std::vector<std::uint64_t>& shares, std::uint64_t p,
                             std::uint64_t seed, unsigned threads, std::uint64_t budget) {
  check_inputs(q, relations, shares, p);
  OneRoundResult res;
  res.report = blank_report(q, relations, n, shares, p);
  const std::size_t servers = res.report.servers();
  std::vector<std::vector<Relation>> fragments(servers, std::vector<Relation>(q.num_atoms()));
  for (auto& frag : fragments) {
    for (std::size_t j = 0; j < q.num_atoms(); ++j) {
      frag[j].name = q.atom(j).relation;
      frag[j].arity = q.atom(j).arity();
    }
  }
  route(q, relations, shares, seed, res.report,
        [&](std::uint64_t s, std::size_t j, std::span<const Value> t) { fragments[s][j].add(t); });

  std::vector<TupleSet> local(servers);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t s = next++; s < servers; s = next++) {
      try {
        std::vector<const Relation*> ptrs;
        for (const auto& r : fragments[s]) ptrs.push_back(&r);
        local[s] = evaluate_join(q, ptrs, budget);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  res.output.width = q.num_variables();
  for (const auto& l : local) res.output.append(l);
  res.output.sort_unique();
  return res;
}

OneRoundResult run_one_round(const ConjunctiveQuery& q, const Instance& instance, const ShareAssignment& shares,
                             std::uint64_t seed, unsigned threads) {
  return run_one_round(q, relation_pointers(instance), instance.n, shares.shares, shares.p, seed, threads);
}

std::vector<const Relation*> relation_pointers(const Instance& instance) {
  std::vector<const Relation*> out;
  for (const auto& r : instance.relations) out.push_back(&r);
  return out;
}

}  // namespace mpcjoin
