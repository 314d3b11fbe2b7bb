#include "mpcjoin/lp.hpp"

#include <algorithm>
#include <set>

#include "mpcjoin/error.hpp"

namespace mpcjoin::lp {
namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows, std::vector<Rational>(cols + 1)), obj_(cols + 1), basis_(rows), cols_(cols) {}

  std::vector<Rational>& row(std::size_t r) { return rows_[r]; }
  std::vector<Rational>& obj() { return obj_; }
  std::size_t& basis(std::size_t r) { return basis_[r]; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t rhs() const { return cols_; }

  void pivot(std::size_t r, std::size_t c) {
    auto& pr = rows_[r];
    Rational inv = 1 / pr[c];
    for (auto& v : pr) {
      if (v != 0) v *= inv;
    }
    auto eliminate = [&](std::vector<Rational>& target) {
      if (target[c] == 0) return;
      Rational f = target[c];
      for (std::size_t j = 0; j <= cols_; ++j) {
        if (pr[j] != 0) target[j] -= f * pr[j];
      }
    };
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i != r) eliminate(rows_[i]);
    }
    eliminate(obj_);
    basis_[r] = c;
  }

  // Maximizes; the objective row holds reduced costs (z + d.x = value).
  Status run(const std::vector<bool>& allowed) {
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (allowed[j] && obj_[j] < 0) {
          enter = j;
          break;
        }
      }
      if (enter == cols_) return Status::kOptimal;
      std::size_t leave = rows_.size();
      Rational best;
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i][enter] <= 0) continue;
        Rational ratio = rows_[i][cols_] / rows_[i][enter];
        if (leave == rows_.size() || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == rows_.size()) return Status::kUnbounded;
      pivot(leave, enter);
    }
  }

  void drop_row(std::size_t r) {
    rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }

 private:
  std::vector<std::vector<Rational>> rows_;
  std::vector<Rational> obj_;
  std::vector<std::size_t> basis_;
  std::size_t cols_;
};

}  // namespace

Solution solve(const Problem& problem) {
  const std::size_t n = problem.num_variables;
  const std::size_t m = problem.constraints.size();

  // Normalize to non-negative right-hand sides.
  std::vector<Constraint> rows = problem.constraints;
  for (auto& c : rows) {
    c.coefficients.resize(n);
    if (c.rhs < 0) {
      for (auto& v : c.coefficients) v = -v;
      c.rhs = -c.rhs;
      if (c.sense == Sense::kLessEqual) {
        c.sense = Sense::kGreaterEqual;
      } else if (c.sense == Sense::kGreaterEqual) {
        c.sense = Sense::kLessEqual;
      }
    }
  }

  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (const auto& c : rows) {
    if (c.sense != Sense::kEqual) ++num_slack;
    if (c.sense != Sense::kLessEqual) ++num_art;
  }
  const std::size_t cols = n + num_slack + num_art;
  Tableau tab(m, cols);
  std::vector<bool> is_art(cols, false);

  std::size_t next_slack = n;
  std::size_t next_art = n + num_slack;
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = tab.row(i);
    for (std::size_t j = 0; j < n; ++j) r[j] = rows[i].coefficients[j];
    r[cols] = rows[i].rhs;
    switch (rows[i].sense) {
      case Sense::kLessEqual:
        r[next_slack] = 1;
        tab.basis(i) = next_slack++;
        break;
      case Sense::kGreaterEqual:
        r[next_slack++] = -1;
        r[next_art] = 1;
        is_art[next_art] = true;
        tab.basis(i) = next_art++;
        break;
      case Sense::kEqual:
        r[next_art] = 1;
        is_art[next_art] = true;
        tab.basis(i) = next_art++;
        break;
    }
  }

  std::vector<bool> allowed(cols, true);
  if (num_art > 0) {
    auto& obj = tab.obj();
    for (std::size_t j = 0; j < cols; ++j) obj[j] = is_art[j] ? 1 : 0;
    obj[cols] = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[tab.basis(i)]) continue;
      for (std::size_t j = 0; j <= cols; ++j) obj[j] -= tab.row(i)[j];
    }
    tab.run(allowed);
    if (tab.obj()[cols] < 0) return Solution{Status::kInfeasible, {}, {}};
    // Pivot remaining (zero-valued) artificials out of the basis.
    for (std::size_t i = 0; i < tab.num_rows();) {
      if (!is_art[tab.basis(i)]) {
        ++i;
        continue;
      }
      std::size_t col = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!is_art[j] && tab.row(i)[j] != 0) {
          col = j;
          break;
        }
      }
      if (col == cols) {
        tab.drop_row(i);  // redundant equality
      } else {
        tab.pivot(i, col);
        ++i;
      }
    }
    for (std::size_t j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  }

  auto& obj = tab.obj();
  std::fill(obj.begin(), obj.end(), Rational(0));
  for (std::size_t j = 0; j < n; ++j) {
    Rational c = j < problem.objective.size() ? problem.objective[j] : Rational(0);
    obj[j] = problem.maximize ? -c : c;
  }
  for (std::size_t i = 0; i < tab.num_rows(); ++i) {
    std::size_t b = tab.basis(i);
    if (obj[b] == 0) continue;
    Rational f = obj[b];
    for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * tab.row(i)[j];
  }
  Status status = tab.run(allowed);
  if (status != Status::kOptimal) return Solution{status, {}, {}};

  Solution sol;
  sol.status = Status::kOptimal;
  sol.x.assign(n, Rational(0));
  for (std::size_t i = 0; i < tab.num_rows(); ++i) {
    if (tab.basis(i) < n) sol.x[tab.basis(i)] = tab.row(i)[cols];
  }
  sol.value = problem.maximize ? tab.obj()[cols] : Rational(-tab.obj()[cols]);
  return sol;
}

Solution solve_lexicographic(const Problem& problem, const std::vector<std::size_t>& order) {
  Solution best = solve(problem);
  if (best.status != Status::kOptimal) return best;
  Problem refined = problem;
  Constraint fix_objective;
  fix_objective.coefficients = problem.objective;
  fix_objective.coefficients.resize(problem.num_variables);
  fix_objective.sense = Sense::kEqual;
  fix_objective.rhs = best.value;
  refined.constraints.push_back(fix_objective);
  for (std::size_t var : order) {
    refined.objective.assign(problem.num_variables, Rational(0));
    refined.objective[var] = 1;
    refined.maximize = false;
    Solution step = solve(refined);
    if (step.status != Status::kOptimal) throw Error("lexicographic refinement lost feasibility");
    Constraint fix;
    fix.coefficients.assign(problem.num_variables, Rational(0));
    fix.coefficients[var] = 1;
    fix.sense = Sense::kEqual;
    fix.rhs = step.value;
    refined.constraints.push_back(fix);
    best.x = step.x;
  }
  return best;
}

bool solve_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b, std::vector<Rational>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    for (std::size_t r = col; r < n; ++r) {
      if (a[r][col] != 0) {
        piv = r;
        break;
      }
    }
    if (piv == n) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col] / a[col][col];
      for (std::size_t j = col; j < n; ++j) {
        if (a[col][j] != 0) a[r][j] -= f * a[col][j];
      }
      b[r] -= f * b[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

std::vector<std::vector<Rational>> enumerate_vertices(std::size_t n, const std::vector<Constraint>& constraints,
                                                      std::size_t max_bases) {
  const std::size_t total = constraints.size() + n;
  // Guard on C(total, n).
  {
    long double count = 1;
    for (std::size_t i = 0; i < n; ++i) count = count * static_cast<long double>(total - i) / (i + 1);
    if (count > static_cast<long double>(max_bases)) {
      throw GuardError("vertex enumeration needs " + std::to_string(static_cast<double>(count)) +
                       " bases (limit " + std::to_string(max_bases) + ")");
    }
  }
  auto feasible = [&](const std::vector<Rational>& x) {
    for (const auto& v : x) {
      if (v < 0) return false;
    }
    for (const auto& c : constraints) {
      Rational lhs = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (c.coefficients[j] != 0) lhs += c.coefficients[j] * x[j];
      }
      if (c.sense == Sense::kLessEqual && lhs > c.rhs) return false;
      if (c.sense == Sense::kGreaterEqual && lhs < c.rhs) return false;
      if (c.sense == Sense::kEqual && lhs != c.rhs) return false;
    }
    return true;
  };

  std::set<std::vector<Rational>> found;
  if (n == 0) {
    if (feasible({})) found.insert({});
    return {found.begin(), found.end()};
  }
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n));
  std::vector<Rational> b(n);
  std::vector<Rational> x;
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t idx = pick[i];
      if (idx < constraints.size()) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = constraints[idx].coefficients[j];
        b[i] = constraints[idx].rhs;
      } else {
        std::fill(a[i].begin(), a[i].end(), Rational(0));
        a[i][idx - constraints.size()] = 1;
        b[i] = 0;
      }
    }
    if (solve_square(a, b, x) && feasible(x)) found.insert(x);
    // Next combination.
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return {found.begin(), found.end()};
}

}  // namespace mpcjoin::lp
