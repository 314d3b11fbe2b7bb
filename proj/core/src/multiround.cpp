#include "mpcjoin/multiround.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "json.hpp"
#include "mpcjoin/error.hpp"
#include "mpcjoin/packing.hpp"

namespace mpcjoin {

Gamma1Params gamma1_params(const Rational& eps) {
  if (eps < 0 || eps >= 1) throw PreconditionError("space exponent must lie in [0, 1)");
  Gamma1Params g;
  g.k_eps = 2 * static_cast<std::uint64_t>(floor_of(Rational(1) / (1 - eps)));
  g.m_eps = static_cast<std::uint64_t>(floor_of(Rational(2) / (1 - eps)));
  return g;
}

bool in_gamma1(const ConjunctiveQuery& q, const Rational& eps) {
  if (eps < 0 || eps >= 1) throw PreconditionError("space exponent must lie in [0, 1)");
  return tau_star(q) <= Rational(1) / (1 - eps);
}

namespace {

bool binary_atoms(const ConjunctiveQuery& q) {
  for (const auto& a : q.atoms()) {
    if (a.arity() != 2 || a.distinct_vars().size() != 2) return false;
  }
  return true;
}

// Walks from `start_var` through atoms, each step leaving by the atom's other variable.
std::vector<int> walk(const ConjunctiveQuery& q, int start_atom, int via_var) {
  std::vector<int> order = {start_atom};
  std::vector<bool> used(q.num_atoms(), false);
  used[static_cast<std::size_t>(start_atom)] = true;
  int var = via_var;
  while (true) {
    int next = -1;
    for (int j : q.atoms_of(var)) {
      if (!used[static_cast<std::size_t>(j)]) next = j;
    }
    if (next < 0) break;
    used[static_cast<std::size_t>(next)] = true;
    order.push_back(next);
    const auto& vs = q.atom(static_cast<std::size_t>(next)).vars;
    var = vs[0] == var ? vs[1] : vs[0];
  }
  return order;
}

}  // namespace

std::optional<std::vector<int>> path_order(const ConjunctiveQuery& q) {
  if (q.num_atoms() == 0 || !binary_atoms(q) || !is_connected(q)) return std::nullopt;
  if (q.num_atoms() + 1 != q.num_variables()) return std::nullopt;
  int start = -1;
  for (std::size_t v = 0; v < q.num_variables(); ++v) {
    auto deg = q.atoms_of(static_cast<int>(v)).size();
    if (deg > 2) return std::nullopt;
    if (deg == 1 && start < 0) start = static_cast<int>(v);
  }
  if (start < 0) return std::nullopt;
  int first = q.atoms_of(start).front();
  const auto& vs = q.atom(static_cast<std::size_t>(first)).vars;
  auto order = walk(q, first, vs[0] == start ? vs[1] : vs[0]);
  if (order.size() != q.num_atoms()) return std::nullopt;
  return order;
}

std::optional<std::vector<int>> cycle_order(const ConjunctiveQuery& q) {
  if (q.num_atoms() < 2 || !binary_atoms(q) || !is_connected(q)) return std::nullopt;
  if (q.num_atoms() != q.num_variables()) return std::nullopt;
  for (std::size_t v = 0; v < q.num_variables(); ++v) {
    if (q.atoms_of(static_cast<int>(v)).size() != 2) return std::nullopt;
  }
  auto order = walk(q, 0, q.atom(0).vars[1]);
  if (order.size() != q.num_atoms()) return std::nullopt;
  return order;
}

namespace {

// An input of a plan level: a base atom (node < 0) or a view.
struct Item {
  int node = -1;
  int atom = -1;
};

class PlanBuilder {
 public:
  PlanBuilder(const ConjunctiveQuery& q, const Rational& eps) : q_(q), eps_(eps), k_eps_(gamma1_params(eps).k_eps) {}

  std::vector<PlanNode>& nodes() { return nodes_; }

  std::vector<int> item_vars(const Item& it) const {
    if (it.node >= 0) return nodes_[static_cast<std::size_t>(it.node)].variables;
    auto vs = q_.atom(static_cast<std::size_t>(it.atom)).distinct_vars();
    std::sort(vs.begin(), vs.end());
    return vs;
  }

  ConjunctiveQuery level_query(const std::vector<Item>& items, std::vector<int>* variables = nullptr) const {
    std::set<int> all;
    for (const auto& it : items) {
      for (int v : item_vars(it)) all.insert(v);
    }
    std::vector<int> vars(all.begin(), all.end());
    std::vector<int> local(q_.num_variables(), -1);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      local[static_cast<std::size_t>(vars[i])] = static_cast<int>(i);
      names.push_back(q_.variable(static_cast<std::size_t>(vars[i])));
    }
    std::vector<Atom> atoms;
    for (const auto& it : items) {
      Atom a;
      if (it.node >= 0) {
        a.relation = "V" + std::to_string(it.node);
        for (int v : nodes_[static_cast<std::size_t>(it.node)].variables) a.vars.push_back(local[static_cast<std::size_t>(v)]);
      } else {
        const Atom& base = q_.atom(static_cast<std::size_t>(it.atom));
        a.relation = base.relation;
        for (int v : base.vars) a.vars.push_back(local[static_cast<std::size_t>(v)]);
      }
      atoms.push_back(std::move(a));
    }
    if (variables) *variables = vars;
    return ConjunctiveQuery::create(names, atoms);
  }

  // Adds a node joining `items`; false if it is not computable in one round.
  bool add_node(const std::vector<Item>& items, Item& out) {
    PlanNode node;
    node.id = static_cast<int>(nodes_.size());
    node.query = level_query(items, &node.variables);
    node.tau = tau_star(node.query);
    if (node.tau > Rational(1) / (1 - eps_)) return false;
    std::set<int> base;
    int round = 0;
    for (const auto& it : items) {
      if (it.node >= 0) {
        const auto& child = nodes_[static_cast<std::size_t>(it.node)];
        round = std::max(round, child.round);
        base.insert(child.base_atoms.begin(), child.base_atoms.end());
        node.inputs.push_back(it.node);
      } else {
        base.insert(it.atom);
        node.inputs.push_back(-(it.atom + 1));
      }
    }
    node.round = round + 1;
    node.base_atoms.assign(base.begin(), base.end());
    node.exponents =
        optimize_shares_exact(node.query, std::vector<Rational>(node.query.num_atoms(), Rational(1)), 64, false, false)
            .exponents;
    nodes_.push_back(std::move(node));
    out = Item{static_cast<int>(nodes_.size()) - 1, -1};
    return true;
  }

  // Folds a chain (path or cycle) of items by k_eps-blocks until the level
  // query is in Gamma^1, then joins it. Returns the resulting item.
  bool fold(std::vector<Item> items, Item& out) {
    while (true) {
      if (items.size() == 1) {
        out = items.front();
        return true;
      }
      if (tau_star(level_query(items)) <= Rational(1) / (1 - eps_)) return add_node(items, out);
      std::vector<Item> next;
      for (std::size_t b = 0; b < items.size(); b += k_eps_) {
        std::vector<Item> block(items.begin() + static_cast<long>(b),
                                items.begin() + static_cast<long>(std::min(items.size(), b + k_eps_)));
        if (block.size() == 1) {
          next.push_back(block.front());
          continue;
        }
        Item it;
        if (!add_node(block, it)) return false;
        next.push_back(it);
      }
      items = std::move(next);
    }
  }

 private:
  const ConjunctiveQuery& q_;
  Rational eps_;
  std::uint64_t k_eps_;
  std::vector<PlanNode> nodes_;
};

MultiRoundPlan finish(const ConjunctiveQuery& q, const Rational& eps, std::string construction,
                      std::vector<PlanNode> nodes) {
  MultiRoundPlan plan;
  plan.q = q;
  plan.eps = eps;
  plan.construction = std::move(construction);
  plan.nodes = std::move(nodes);
  plan.depth = plan.nodes.empty() ? 0 : plan.nodes.back().round;
  return plan;
}

std::vector<Item> base_items(const std::vector<int>& atoms) {
  std::vector<Item> items;
  for (int j : atoms) items.push_back(Item{-1, j});
  return items;
}

std::optional<MultiRoundPlan> direct_plan(const ConjunctiveQuery& q, const Rational& eps) {
  PlanBuilder b(q, eps);
  std::vector<int> all(q.num_atoms());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  Item out;
  if (!b.add_node(base_items(all), out)) return std::nullopt;
  return finish(q, eps, "direct", std::move(b.nodes()));
}

std::optional<MultiRoundPlan> fold_plan(const ConjunctiveQuery& q, const Rational& eps) {
  auto order = path_order(q);
  if (!order) order = cycle_order(q);
  if (!order) return std::nullopt;
  PlanBuilder b(q, eps);
  Item out;
  if (!b.fold(base_items(*order), out)) return std::nullopt;
  if (out.node < 0 && !b.add_node({out}, out)) return std::nullopt;
  return finish(q, eps, "fold", std::move(b.nodes()));
}

}  // namespace

MultiRoundPlan build_centre_plan(const ConjunctiveQuery& q, const Rational& eps) {
  if (q.num_atoms() == 0 || !is_connected(q)) throw PreconditionError("multi-round plans need a connected query");
  const std::size_t k = q.num_variables();
  const int centre = radius_diameter(q).center;

  // BFS over variables; each discovered variable remembers its parent atom.
  std::vector<int> dist(k, -1), parent_var(k, -1), parent_atom(k, -1);
  std::vector<int> queue = {centre};
  dist[static_cast<std::size_t>(centre)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int u = queue[head];
    for (int j : q.atoms_of(u)) {
      for (int w : q.atom(static_cast<std::size_t>(j)).distinct_vars()) {
        auto wi = static_cast<std::size_t>(w);
        if (dist[wi] >= 0) continue;
        dist[wi] = dist[static_cast<std::size_t>(u)] + 1;
        parent_var[wi] = u;
        parent_atom[wi] = j;
        queue.push_back(w);
      }
    }
  }
  auto path_to = [&](int w) {
    std::vector<int> atoms;
    for (int v = w; v != centre; v = parent_var[static_cast<std::size_t>(v)]) atoms.push_back(parent_atom[static_cast<std::size_t>(v)]);
    std::reverse(atoms.begin(), atoms.end());
    return atoms;
  };

  std::set<int> tree_atoms;
  std::vector<bool> is_parent(k, false);
  for (std::size_t v = 0; v < k; ++v) {
    if (parent_atom[v] >= 0) tree_atoms.insert(parent_atom[v]);
    if (parent_var[v] >= 0) is_parent[static_cast<std::size_t>(parent_var[v])] = true;
  }
  // One path per leaf, leaves in declaration order.
  std::vector<std::vector<int>> paths;
  for (std::size_t w = 0; w < k; ++w) {
    if (static_cast<int>(w) != centre && !is_parent[w]) paths.push_back(path_to(static_cast<int>(w)));
  }
  // Atoms off the BFS tree: path to their closest variable plus the atom.
  for (std::size_t j = 0; j < q.num_atoms(); ++j) {
    if (tree_atoms.count(static_cast<int>(j))) continue;
    int best = -1;
    for (int v : q.atom(j).distinct_vars()) {
      if (best < 0 || dist[static_cast<std::size_t>(v)] < dist[static_cast<std::size_t>(best)] ||
          (dist[static_cast<std::size_t>(v)] == dist[static_cast<std::size_t>(best)] && v < best)) {
        best = v;
      }
    }
    auto p = path_to(best);
    p.push_back(static_cast<int>(j));
    paths.push_back(std::move(p));
  }
  std::vector<std::vector<int>> unique_paths;
  for (auto& p : paths) {
    if (std::find(unique_paths.begin(), unique_paths.end(), p) == unique_paths.end()) unique_paths.push_back(std::move(p));
  }
  paths = std::move(unique_paths);

  PlanBuilder b(q, eps);
  std::vector<Item> results;
  for (const auto& p : paths) {
    Item out;
    if (!b.fold(base_items(p), out)) throw PreconditionError("path fold left Gamma^1");
    results.push_back(out);
  }
  Item root;
  if (results.size() == 1 && results.front().node >= 0) {
    root = results.front();
  } else if (!b.add_node(results, root)) {
    throw PreconditionError("final join on the centre is not in Gamma^1");
  }
  return finish(q, eps, "centre-paths", std::move(b.nodes()));
}

MultiRoundPlan build_plan(const ConjunctiveQuery& q, const Rational& eps) {
  if (q.num_atoms() == 0 || !is_connected(q)) throw PreconditionError("multi-round plans need a connected query");
  gamma1_params(eps);
  if (auto d = direct_plan(q, eps)) return *d;
  MultiRoundPlan best = build_centre_plan(q, eps);
  if (auto f = fold_plan(q, eps); f && f->depth <= best.depth) best = *f;
  return best;
}

std::vector<int> expand_root(const MultiRoundPlan& plan) {
  std::function<void(int, std::vector<int>&)> expand = [&](int id, std::vector<int>& out) {
    for (int in : plan.nodes[static_cast<std::size_t>(id)].inputs) {
      if (in >= 0) {
        expand(in, out);
      } else {
        out.push_back(-in - 1);
      }
    }
  };
  std::vector<int> atoms;
  expand(plan.root().id, atoms);
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

std::string MultiRoundPlan::to_json() const {
  std::function<nlohmann::ordered_json(int)> tree = [&](int id) {
    const PlanNode& n = nodes[static_cast<std::size_t>(id)];
    nlohmann::ordered_json j;
    j["node_id"] = n.id;
    j["round"] = n.round;
    j["query_text"] = n.query.to_string();
    j["tau_star"] = mpcjoin::to_string(n.tau);
    std::vector<std::string> shares;
    for (const auto& e : n.exponents) shares.push_back(mpcjoin::to_string(e));
    j["shares"] = shares;
    nlohmann::ordered_json children = nlohmann::ordered_json::array();
    for (int in : n.inputs) {
      if (in >= 0) children.push_back(tree(in));
    }
    j["children"] = children;
    return j;
  };
  nlohmann::ordered_json j;
  j["query"] = q.to_string();
  j["eps"] = mpcjoin::to_string(eps);
  j["construction"] = construction;
  j["depth"] = depth;
  j["plan"] = tree(root().id);
  return j.dump(2);
}

PlanExecution execute_plan(const MultiRoundPlan& plan, const Instance& instance, std::uint64_t p, std::uint64_t seed,
                           std::uint64_t budget) {
  if (instance.relations.size() != plan.q.num_atoms()) throw PreconditionError("need one relation per atom");
  if (p == 0) throw PreconditionError("p must be positive");
  PlanExecution ex;
  std::vector<Relation> views(plan.nodes.size());
  ex.view_sizes.assign(plan.nodes.size(), 0);
  const std::uint64_t bpv = Statistics{{}, {}, instance.n}.bits_per_value();

  for (int r = 1; r <= plan.depth; ++r) {
    RoundReport round;
    round.round = r;
    std::vector<std::string> names;
    std::vector<std::size_t> arity;
    std::vector<LoadReport> node_reports;
    for (const auto& node : plan.nodes) {
      if (node.round != r) continue;
      round.nodes.push_back(node.id);
      std::vector<const Relation*> inputs;
      std::vector<double> sizes;
      for (int in : node.inputs) {
        const Relation* rel = in >= 0 ? &views[static_cast<std::size_t>(in)] : &instance[static_cast<std::size_t>(-in - 1)];
        inputs.push_back(rel);
        sizes.push_back(static_cast<double>(rel->arity * rel->size() * bpv));
      }
      auto sa = optimize_shares_relaxed(node.query, sizes, p);
      auto res = run_one_round(node.query, inputs, instance.n, sa.shares, p,
                               derive_seed(seed, static_cast<std::uint64_t>(node.id)), 1, budget);
      Relation view;
      view.name = "V" + std::to_string(node.id);
      view.arity = res.output.width;
      view.data = std::move(res.output.data);
      ex.view_sizes[static_cast<std::size_t>(node.id)] = view.size();
      views[static_cast<std::size_t>(node.id)] = std::move(view);
      for (std::size_t j = 0; j < node.query.num_atoms(); ++j) {
        names.push_back(std::to_string(node.id) + ":" + node.query.atom(j).relation);
        arity.push_back(node.query.atom(j).arity());
      }
      node_reports.push_back(std::move(res.report));
    }
    round.load = LoadReport::empty(names, arity, p, instance.n);
    round.load.query = plan.q.to_string();
    round.load.p = p;
    round.load.bound_id = "multiround";
    std::size_t col = 0;
    for (const auto& rep : node_reports) {
      for (std::size_t j = 0; j < rep.relations.size(); ++j, ++col) {
        round.load.input_tuples[col] = rep.input_tuples[j];
        round.load.sent[col] = rep.sent[j];
        for (std::size_t s = 0; s < rep.servers(); ++s) round.load.tuples[s][col] = rep.tuples[s][j];
      }
    }
    ex.rounds.push_back(std::move(round));
  }

  const Relation& root = views[static_cast<std::size_t>(plan.root().id)];
  ex.output.width = root.arity;
  ex.output.data = root.data;
  ex.output.sort_unique();
  return ex;
}

int rounds_upper_formula(const ConjunctiveQuery& q, const Rational& eps) {
  if (q.num_atoms() == 0 || !is_connected(q)) throw PreconditionError("round bounds need a connected query");
  const auto g = gamma1_params(eps);
  const int rad = radius_diameter(q).radius;
  if (rad == 0) return 1;
  if (is_tree_like(q)) return ceil_log(g.k_eps, Rational(rad)) + 1;
  return floor_log(g.k_eps, Rational(rad)) + 2;
}

int rounds_upper(const ConjunctiveQuery& q, const Rational& eps) {
  return std::min(rounds_upper_formula(q, eps), build_plan(q, eps).depth);
}

}  // namespace mpcjoin
