#include "mpcjoin/query.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <map>
#include <numeric>
#include <queue>
#include <regex>
#include <set>

#include "mpcjoin/error.hpp"

namespace mpcjoin {

std::vector<int> Atom::distinct_vars() const {
  std::vector<int> out;
  for (int v : vars) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

bool Atom::contains(int var) const { return std::find(vars.begin(), vars.end(), var) != vars.end(); }

ConjunctiveQuery ConjunctiveQuery::create(std::vector<std::string> variables, std::vector<Atom> atoms) {
  std::set<std::string> names;
  for (const auto& v : variables) {
    if (!names.insert(v).second) throw QueryError("duplicate variable '" + v + "'");
  }
  std::set<std::string> relations;
  std::vector<bool> used(variables.size(), false);
  for (const auto& a : atoms) {
    if (!relations.insert(a.relation).second) {
      throw QueryError("self-join: relation '" + a.relation + "' occurs twice");
    }
    if (a.vars.empty()) throw QueryError("atom '" + a.relation + "' has no variables");
    for (int v : a.vars) {
      if (v < 0 || static_cast<std::size_t>(v) >= variables.size()) {
        throw QueryError("atom '" + a.relation + "' references an undeclared variable");
      }
      used[static_cast<std::size_t>(v)] = true;
    }
  }
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (!used[i]) throw QueryError("variable '" + variables[i] + "' occurs in no atom");
  }
  ConjunctiveQuery q;
  q.variables_ = std::move(variables);
  q.atoms_ = std::move(atoms);
  return q;
}

std::size_t ConjunctiveQuery::total_arity() const {
  std::size_t a = 0;
  for (const auto& atom : atoms_) a += atom.arity();
  return a;
}

std::optional<int> ConjunctiveQuery::find_variable(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> ConjunctiveQuery::find_atom(const std::string& relation) const {
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (atoms_[j].relation == relation) return static_cast<int>(j);
  }
  return std::nullopt;
}

std::vector<int> ConjunctiveQuery::atoms_of(int var) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (atoms_[j].contains(var)) out.push_back(static_cast<int>(j));
  }
  return out;
}

ConjunctiveQuery ConjunctiveQuery::restrict_to(const std::vector<int>& atom_ids) const {
  std::vector<bool> keep(variables_.size(), false);
  for (int j : atom_ids) {
    for (int v : atoms_.at(static_cast<std::size_t>(j)).vars) keep[static_cast<std::size_t>(v)] = true;
  }
  std::vector<int> renumber(variables_.size(), -1);
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (!keep[i]) continue;
    renumber[i] = static_cast<int>(vars.size());
    vars.push_back(variables_[i]);
  }
  std::vector<int> sorted = atom_ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Atom> atoms;
  for (int j : sorted) {
    Atom a = atoms_[static_cast<std::size_t>(j)];
    for (int& v : a.vars) v = renumber[static_cast<std::size_t>(v)];
    atoms.push_back(std::move(a));
  }
  return create(std::move(vars), std::move(atoms));
}

std::string ConjunctiveQuery::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (j) out += ",";
    out += atoms_[j].relation + "(";
    for (std::size_t m = 0; m < atoms_[j].vars.size(); ++m) {
      if (m) out += ",";
      out += variables_[static_cast<std::size_t>(atoms_[j].vars[m])];
    }
    out += ")";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  ConjunctiveQuery parse() {
    std::vector<std::string> vars;
    std::map<std::string, int> var_index;
    std::vector<Atom> atoms;
    std::set<std::string> seen;
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty query: expected at least one atom", pos_);
    for (;;) {
      std::size_t atom_pos = pos_;
      Atom atom;
      atom.relation = identifier("relation name");
      if (!seen.insert(atom.relation).second) {
        throw ParseError("self-join: relation '" + atom.relation + "' already used", atom_pos);
      }
      expect('(');
      for (;;) {
        std::string v = identifier("variable name");
        auto [it, inserted] = var_index.emplace(v, static_cast<int>(vars.size()));
        if (inserted) vars.push_back(v);
        atom.vars.push_back(it->second);
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      atoms.push_back(std::move(atom));
      skip_space();
      if (pos_ == text_.size()) break;
      expect(',');
    }
    return ConjunctiveQuery::create(std::move(vars), std::move(atoms));
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) {
      std::string found = pos_ < text_.size() ? std::string("'") + text_[pos_] + "'" : "end of input";
      throw ParseError(std::string("expected '") + c + "', found " + found, pos_);
    }
    ++pos_;
  }

  std::string identifier(const char* what) {
    skip_space();
    std::size_t start = pos_;
    auto is_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_body = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (!is_start(peek())) throw ParseError(std::string("expected ") + what, pos_);
    while (pos_ < text_.size() && is_body(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

ConjunctiveQuery build(const std::vector<std::pair<std::string, std::vector<std::string>>>& atoms) {
  std::vector<std::string> vars;
  std::map<std::string, int> index;
  std::vector<Atom> out;
  for (const auto& [name, names] : atoms) {
    Atom a;
    a.relation = name;
    for (const auto& v : names) {
      auto [it, inserted] = index.emplace(v, static_cast<int>(vars.size()));
      if (inserted) vars.push_back(v);
      a.vars.push_back(it->second);
    }
    out.push_back(std::move(a));
  }
  return ConjunctiveQuery::create(std::move(vars), std::move(out));
}

std::string x(int i) { return "x" + std::to_string(i); }

void require_positive(int k, const char* what) {
  if (k < 1) throw PreconditionError(std::string(what) + " needs k >= 1");
}

}  // namespace

ConjunctiveQuery parse_query(const std::string& text) { return Parser(text).parse(); }

ConjunctiveQuery cycle_query(int k) {
  require_positive(k, "cycle");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  for (int i = 1; i <= k; ++i) atoms.push_back({"S" + std::to_string(i), {x(i), x(i % k + 1)}});
  return build(atoms);
}

ConjunctiveQuery line_query(int k) {
  require_positive(k, "line");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  for (int i = 1; i <= k; ++i) atoms.push_back({"S" + std::to_string(i), {x(i - 1), x(i)}});
  return build(atoms);
}

ConjunctiveQuery star_query(int k) {
  require_positive(k, "star");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  for (int i = 1; i <= k; ++i) atoms.push_back({"S" + std::to_string(i), {"z", x(i)}});
  return build(atoms);
}

ConjunctiveQuery star_path_query(int k) {
  require_positive(k, "star-path");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  for (int i = 1; i <= k; ++i) {
    atoms.push_back({"R" + std::to_string(i), {"z", x(i)}});
    atoms.push_back({"S" + std::to_string(i), {x(i), "y" + std::to_string(i)}});
  }
  return build(atoms);
}

ConjunctiveQuery clique_query(int k) {
  if (k < 2) throw PreconditionError("clique needs k >= 2");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  int n = 0;
  for (int j = 2; j <= k; ++j) {
    for (int i = 1; i < j; ++i) atoms.push_back({"S" + std::to_string(++n), {x(i), x(j)}});
  }
  return build(atoms);
}

ConjunctiveQuery subset_query(int k, int m) {
  if (m < 1 || m > k) throw PreconditionError("subset query needs 1 <= m <= k");
  std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::iota(pick.begin(), pick.end(), 1);
  for (;;) {
    std::string name = "S";
    std::vector<std::string> vars;
    for (std::size_t i = 0; i < pick.size(); ++i) {
      if (k >= 10 && i) name += "_";
      name += std::to_string(pick[i]);
      vars.push_back(x(pick[i]));
    }
    atoms.push_back({name, vars});
    int i = m;
    while (i > 0 && pick[static_cast<std::size_t>(i - 1)] == k - m + i) --i;
    if (i == 0) break;
    ++pick[static_cast<std::size_t>(i - 1)];
    for (int j = i; j < m; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return build(atoms);
}

ConjunctiveQuery named_query(const std::string& text) {
  static const std::regex kShorthand(R"(^\s*(C|L|T|SP|K)(\d+)\s*$)");
  static const std::regex kSubset(R"(^\s*B(\d+)_(\d+)\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, kShorthand)) {
    int k = std::stoi(m[2]);
    const std::string kind = m[1];
    if (kind == "C") return cycle_query(k);
    if (kind == "L") return line_query(k);
    if (kind == "T") return star_query(k);
    if (kind == "SP") return star_path_query(k);
    return clique_query(k);
  }
  if (std::regex_match(text, m, kSubset)) return subset_query(std::stoi(m[1]), std::stoi(m[2]));
  if (text == "K4e") {
    auto k4 = clique_query(4);
    return k4.restrict_to({0, 1, 2, 3, 4});
  }
  return parse_query(text);
}

// ---------------------------------------------------------------------------
// Structure

namespace {

// Union-find over variables.
class Components {
 public:
  explicit Components(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int v) {
    while (parent_[static_cast<std::size_t>(v)] != v) {
      parent_[static_cast<std::size_t>(v)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])];
      v = parent_[static_cast<std::size_t>(v)];
    }
    return v;
  }
  // Keeps the smaller index as root so the representative is the first variable.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

 private:
  std::vector<int> parent_;
};

std::vector<std::vector<int>> atom_groups(const ConjunctiveQuery& q, const std::vector<int>& atom_ids) {
  Components uf(q.num_variables());
  for (int j : atom_ids) {
    const auto& vars = q.atom(static_cast<std::size_t>(j)).vars;
    for (int v : vars) uf.unite(vars.front(), v);
  }
  std::map<int, std::vector<int>> groups;
  for (int j : atom_ids) groups[uf.find(q.atom(static_cast<std::size_t>(j)).vars.front())].push_back(j);
  std::vector<std::vector<int>> out;
  for (auto& [root, atoms] : groups) {
    std::sort(atoms.begin(), atoms.end());
    out.push_back(atoms);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> vars_of(const ConjunctiveQuery& q, const std::vector<int>& atom_ids) {
  std::set<int> vars;
  for (int j : atom_ids) {
    for (int v : q.atom(static_cast<std::size_t>(j)).vars) vars.insert(v);
  }
  return {vars.begin(), vars.end()};
}

std::vector<int> all_atoms(const ConjunctiveQuery& q) {
  std::vector<int> ids(q.num_atoms());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

std::vector<SubqueryHandle> connected_components(const ConjunctiveQuery& q) {
  std::vector<SubqueryHandle> out;
  for (auto& atoms : atom_groups(q, all_atoms(q))) {
    SubqueryHandle h;
    h.variables = vars_of(q, atoms);
    h.atoms = std::move(atoms);
    h.connected = true;
    out.push_back(std::move(h));
  }
  return out;
}

bool is_connected(const ConjunctiveQuery& q) { return connected_components(q).size() == 1; }

bool is_connected_subset(const ConjunctiveQuery& q, const std::vector<int>& atoms) {
  return !atoms.empty() && atom_groups(q, atoms).size() == 1;
}

long characteristic(const ConjunctiveQuery& q) {
  auto a = static_cast<long>(q.total_arity());
  auto k = static_cast<long>(q.num_variables());
  auto l = static_cast<long>(q.num_atoms());
  auto c = static_cast<long>(connected_components(q).size());
  return a - k - l + c;
}

ConjunctiveQuery contract(const ConjunctiveQuery& q, const std::vector<int>& m) {
  std::vector<bool> in_m(q.num_atoms(), false);
  for (int j : m) in_m.at(static_cast<std::size_t>(j)) = true;
  Components uf(q.num_variables());
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    if (!in_m[j]) continue;
    const auto& vars = q.atom(j).vars;
    for (int v : vars) uf.unite(vars.front(), v);
  }
  std::vector<bool> keep(q.num_variables(), false);
  std::vector<Atom> atoms;
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    if (in_m[j]) continue;
    Atom a = q.atom(j);
    for (int& v : a.vars) {
      v = uf.find(v);
      keep[static_cast<std::size_t>(v)] = true;
    }
    atoms.push_back(std::move(a));
  }
  std::vector<int> renumber(q.num_variables(), -1);
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < q.num_variables(); ++i) {
    if (!keep[i]) continue;
    renumber[i] = static_cast<int>(vars.size());
    vars.push_back(q.variable(i));
  }
  for (auto& a : atoms) {
    for (int& v : a.vars) v = renumber[static_cast<std::size_t>(v)];
  }
  return ConjunctiveQuery::create(std::move(vars), std::move(atoms));
}

bool is_tree_like(const ConjunctiveQuery& q) { return q.num_atoms() > 0 && is_connected(q) && characteristic(q) == 0; }

std::vector<int> primal_distances(const ConjunctiveQuery& q, int source) {
  const std::size_t k = q.num_variables();
  std::vector<std::vector<int>> adj(k);
  for (const auto& a : q.atoms()) {
    auto vars = a.distinct_vars();
    for (int u : vars) {
      for (int v : vars) {
        if (u != v) adj[static_cast<std::size_t>(u)].push_back(v);
      }
    }
  }
  std::vector<int> dist(k, -1);
  std::queue<int> frontier;
  dist[static_cast<std::size_t>(source)] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] >= 0) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      frontier.push(v);
    }
  }
  return dist;
}

RadiusDiameter radius_diameter(const ConjunctiveQuery& q) {
  if (q.num_atoms() == 0 || !is_connected(q)) throw PreconditionError("radius/diameter need a connected query");
  RadiusDiameter out;
  out.radius = -1;
  for (std::size_t s = 0; s < q.num_variables(); ++s) {
    auto dist = primal_distances(q, static_cast<int>(s));
    int ecc = *std::max_element(dist.begin(), dist.end());
    out.diameter = std::max(out.diameter, ecc);
    if (out.radius < 0 || ecc < out.radius) {
      out.radius = ecc;
      out.center = static_cast<int>(s);
    }
  }
  return out;
}

std::vector<SubqueryHandle> enumerate_connected_subqueries(const ConjunctiveQuery& q,
                                                           const SubqueryPredicate& minimal_filter) {
  const std::size_t l = q.num_atoms();
  if (l > kMaxEnumeratedAtoms) {
    throw GuardError("connected-subquery enumeration limited to " + std::to_string(kMaxEnumeratedAtoms) +
                     " atoms, query has " + std::to_string(l));
  }
  using Mask = std::uint32_t;
  std::vector<Mask> adj(l, 0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      if (i == j) continue;
      for (int v : q.atom(i).vars) {
        if (q.atom(j).contains(v)) {
          adj[i] |= Mask{1} << j;
          break;
        }
      }
    }
  }
  auto neighbourhood = [&](Mask s) {
    Mask n = 0;
    for (std::size_t i = 0; i < l; ++i) {
      if (s >> i & 1U) n |= adj[i];
    }
    return n & ~s;
  };

  // Exclusive-neighbourhood extension: each connected set is produced once,
  // from its smallest atom.
  std::vector<Mask> sets;
  std::function<void(Mask, Mask, std::size_t)> extend = [&](Mask s, Mask ext, std::size_t root) {
    sets.push_back(s);
    Mask seen = s | neighbourhood(s);
    while (ext) {
      std::size_t w = static_cast<std::size_t>(std::countr_zero(ext));
      ext &= ext - 1;
      Mask fresh = adj[w] & ~seen;
      fresh &= ~((Mask{1} << (root + 1)) - 1);
      extend(s | (Mask{1} << w), ext | fresh, root);
    }
  };
  for (std::size_t v = 0; v < l; ++v) {
    Mask ext = adj[v] & ~((Mask{1} << (v + 1)) - 1);
    extend(Mask{1} << v, ext, v);
  }

  auto to_handle = [&](Mask s) {
    SubqueryHandle h;
    for (std::size_t i = 0; i < l; ++i) {
      if (s >> i & 1U) h.atoms.push_back(static_cast<int>(i));
    }
    h.variables = vars_of(q, h.atoms);
    h.connected = true;
    return h;
  };
  std::sort(sets.begin(), sets.end(), [](Mask a, Mask b) {
    int pa = std::popcount(a);
    int pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    // Lexicographic on sorted atom lists = reverse bit order comparison.
    Mask diff = a ^ b;
    Mask low = diff & (~diff + 1);
    return (a & low) != 0;
  });

  std::vector<SubqueryHandle> out;
  if (!minimal_filter) {
    for (Mask s : sets) out.push_back(to_handle(s));
    return out;
  }
  std::vector<Mask> satisfied;
  for (Mask s : sets) {
    SubqueryHandle h = to_handle(s);
    if (!minimal_filter(h)) continue;
    bool minimal = std::none_of(satisfied.begin(), satisfied.end(), [&](Mask t) { return (t & s) == t && t != s; });
    if (minimal) out.push_back(std::move(h));
    satisfied.push_back(s);
  }
  return out;
}

}  // namespace mpcjoin
