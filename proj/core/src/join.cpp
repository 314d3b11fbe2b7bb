#include "mpcjoin/join.hpp"

#include <algorithm>
#include <numeric>

#include "mpcjoin/error.hpp"

namespace mpcjoin {

namespace {

// Packs rows of up to `Width` 32-bit values into one integer key, so narrow
// results sort without indirection.
template <typename Key>
void sort_unique_packed(std::vector<Value>& data, std::size_t width) {
  const std::size_t n = data.size() / width;
  std::vector<Key> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    Key k = 0;
    for (std::size_t c = 0; c < width; ++c) k = (k << 32) | data[i * width + c];
    keys[i] = k;
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  data.resize(keys.size() * width);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    Key k = keys[i];
    for (std::size_t c = width; c-- > 0;) {
      data[i * width + c] = static_cast<Value>(k & 0xffffffffu);
      k >>= 32;
    }
  }
}

}  // namespace

void TupleSet::sort_unique() {
  const std::size_t n = size();
  if (n == 0) return;
  if (width <= 2) return sort_unique_packed<std::uint64_t>(data, width);
  if (width <= 4) return sort_unique_packed<unsigned __int128>(data, width);
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  auto row_less = [&](std::uint32_t a, std::uint32_t b) {
    return std::lexicographical_compare(data.begin() + a * width, data.begin() + (a + 1) * width,
                                        data.begin() + b * width, data.begin() + (b + 1) * width);
  };
  auto row_equal = [&](std::uint32_t a, std::uint32_t b) {
    return std::equal(data.begin() + a * width, data.begin() + (a + 1) * width, data.begin() + b * width);
  };
  std::sort(rows.begin(), rows.end(), row_less);
  std::vector<Value> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && row_equal(rows[i - 1], rows[i])) continue;
    out.insert(out.end(), data.begin() + rows[i] * width, data.begin() + (rows[i] + 1) * width);
  }
  data = std::move(out);
}

namespace {

struct Step {
  std::size_t atom = 0;
  std::vector<std::size_t> key_positions;                // positions whose variable is already bound
  std::vector<int> key_vars;                             // matching variables
  std::vector<std::pair<std::size_t, int>> binds;        // (position, new variable)
  std::vector<std::pair<std::size_t, std::size_t>> eqs;  // repeated new variable: (position, first position)
  std::vector<std::uint32_t> rows;                       // sorted by key columns
};

class Join {
 public:
  Join(const ConjunctiveQuery& q, const std::vector<const Relation*>& rels, std::uint64_t budget)
      : q_(q), rels_(rels), budget_(budget), binding_(q.num_variables(), 0) {
    if (rels.size() != q.num_atoms()) throw PreconditionError("need one relation per atom");
    for (std::size_t j = 0; j < rels.size(); ++j) {
      if (rels[j]->arity != q.atom(j).arity()) {
        throw PreconditionError("relation " + rels[j]->name + " arity does not match atom " + q.atom(j).relation);
      }
    }
    plan();
  }

  template <typename Emit>
  void run(Emit&& emit) {
    for (const auto* r : rels_) {
      if (r->size() == 0) return;
    }
    if (!steps_.empty()) descend(0, emit);
  }

 private:
  void plan() {
    const std::size_t l = q_.num_atoms();
    std::vector<bool> used(l, false);
    std::vector<bool> bound(q_.num_variables(), false);
    for (std::size_t s = 0; s < l; ++s) {
      std::size_t best = l;
      std::size_t best_shared = 0;
      for (std::size_t j = 0; j < l; ++j) {
        if (used[j]) continue;
        std::size_t shared = 0;
        for (int v : q_.atom(j).distinct_vars()) shared += bound[static_cast<std::size_t>(v)] ? 1 : 0;
        bool better = best == l || shared > best_shared ||
                      (shared == best_shared && rels_[j]->size() < rels_[best]->size());
        if (better) {
          best = j;
          best_shared = shared;
        }
      }
      used[best] = true;
      Step step;
      step.atom = best;
      const auto& vars = q_.atom(best).vars;
      std::vector<long> first_pos(q_.num_variables(), -1);
      for (std::size_t m = 0; m < vars.size(); ++m) {
        auto v = static_cast<std::size_t>(vars[m]);
        if (bound[v]) {
          step.key_positions.push_back(m);
          step.key_vars.push_back(vars[m]);
        } else if (first_pos[v] >= 0) {
          step.eqs.emplace_back(m, static_cast<std::size_t>(first_pos[v]));
        } else {
          first_pos[v] = static_cast<long>(m);
          step.binds.emplace_back(m, vars[m]);
        }
      }
      for (auto [pos, v] : step.binds) bound[static_cast<std::size_t>(v)] = true;
      const Relation& r = *rels_[best];
      step.rows.resize(r.size());
      std::iota(step.rows.begin(), step.rows.end(), 0);
      const auto& keys = step.key_positions;
      std::sort(step.rows.begin(), step.rows.end(), [&](std::uint32_t a, std::uint32_t b) {
        auto ta = r.tuple(a);
        auto tb = r.tuple(b);
        for (auto pos : keys) {
          if (ta[pos] != tb[pos]) return ta[pos] < tb[pos];
        }
        return a < b;
      });
      steps_.push_back(std::move(step));
    }
  }

  template <typename Emit>
  void descend(std::size_t s, Emit& emit) {
    if (s == steps_.size()) {
      emit(binding_);
      return;
    }
    const Step& step = steps_[s];
    const Relation& r = *rels_[step.atom];
    std::vector<Value> key;
    key.reserve(step.key_vars.size());
    for (int v : step.key_vars) key.push_back(binding_[static_cast<std::size_t>(v)]);
    auto less_row_key = [&](std::uint32_t row, const std::vector<Value>& k) {
      auto t = r.tuple(row);
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (t[step.key_positions[i]] != k[i]) return t[step.key_positions[i]] < k[i];
      }
      return false;
    };
    auto less_key_row = [&](const std::vector<Value>& k, std::uint32_t row) {
      auto t = r.tuple(row);
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (t[step.key_positions[i]] != k[i]) return k[i] < t[step.key_positions[i]];
      }
      return false;
    };
    auto lo = std::lower_bound(step.rows.begin(), step.rows.end(), key, less_row_key);
    auto hi = std::upper_bound(lo, step.rows.end(), key, less_key_row);
    for (auto it = lo; it != hi; ++it) {
      if (++explored_ > budget_) {
        throw GuardError("join budget of " + std::to_string(budget_) + " partial bindings exceeded");
      }
      auto t = r.tuple(*it);
      bool ok = true;
      for (auto [pos, first] : step.eqs) ok = ok && t[pos] == t[first];
      if (!ok) continue;
      for (auto [pos, v] : step.binds) binding_[static_cast<std::size_t>(v)] = t[pos];
      descend(s + 1, emit);
    }
  }

  const ConjunctiveQuery& q_;
  const std::vector<const Relation*>& rels_;
  std::uint64_t budget_;
  std::uint64_t explored_ = 0;
  std::vector<Step> steps_;
  std::vector<Value> binding_;
};

std::vector<const Relation*> pointers(const Instance& instance) {
  std::vector<const Relation*> out;
  for (const auto& r : instance.relations) out.push_back(&r);
  return out;
}

}  // namespace

TupleSet evaluate_join(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                       std::uint64_t budget) {
  TupleSet out;
  out.width = q.num_variables();
  Join join(q, relations, budget);
  join.run([&](const std::vector<Value>& b) { out.data.insert(out.data.end(), b.begin(), b.end()); });
  return out;
}

std::uint64_t count_join(const ConjunctiveQuery& q, const std::vector<const Relation*>& relations,
                         std::uint64_t budget) {
  std::uint64_t count = 0;
  Join join(q, relations, budget);
  join.run([&](const std::vector<Value>&) { ++count; });
  return count;
}

TupleSet oracle_eval(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t budget) {
  TupleSet out = evaluate_join(q, pointers(instance), budget);
  out.sort_unique();
  return out;
}

std::uint64_t oracle_count(const ConjunctiveQuery& q, const Instance& instance, std::uint64_t budget) {
  return count_join(q, pointers(instance), budget);
}

}  // namespace mpcjoin
