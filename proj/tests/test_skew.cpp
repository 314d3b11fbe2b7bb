#include <gtest/gtest.h>

#include <cmath>

#include "mpcjoin/error.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/query.hpp"
#include "mpcjoin/skew.hpp"

namespace mpcjoin {
namespace {

Instance star_instance(int l, std::uint64_t m, std::vector<std::pair<Value, std::uint64_t>> heavy, std::uint64_t seed) {
  auto q = star_query(l);
  SkewSpec spec(static_cast<std::size_t>(l), {ColumnSpec::heavy_hitters(heavy), ColumnSpec::matching()});
  return skewed_db(q, Statistics::equal(q, m, 4 * m), spec, seed);
}

TEST(HeavyHitters, ThresholdIsExactAndTiesAreHeavy) {
  EXPECT_TRUE(reaches_threshold(25, 100, 4, 1));
  EXPECT_FALSE(reaches_threshold(24, 100, 4, 1));
  EXPECT_TRUE(reaches_threshold(25, 100, 16, Rational(1, 2)));
  EXPECT_FALSE(reaches_threshold(24, 100, 16, Rational(1, 2)));
  // 8^{1/3} = 2 exactly.
  EXPECT_TRUE(reaches_threshold(50, 100, 8, Rational(1, 3)));
  EXPECT_FALSE(reaches_threshold(49, 100, 8, Rational(1, 3)));
}

TEST(HeavyHitters, MatchingInstanceHasNone) {
  auto q = star_query(3);
  auto inst = random_matching_db(q, Statistics::equal(q, 1000, 5000), 2);
  auto cat = detect_heavy_hitters(q, inst, "z", 16);
  EXPECT_EQ(cat.size(), 0u);
  ASSERT_EQ(cat.entries.size(), 3u);
  for (const auto& e : cat.entries) EXPECT_TRUE(e.hitters.empty());
}

TEST(HeavyHitters, ConstantColumnIsOneHitterOfFrequencyM) {
  auto q = star_query(2);
  SkewSpec spec(2, {ColumnSpec::constant_value(9), ColumnSpec::matching()});
  auto inst = skewed_db(q, Statistics::equal(q, 500, 1000), spec, 3);
  auto cat = detect_heavy_hitters(q, inst, "z", 8);
  ASSERT_EQ(cat.heavy, std::vector<Value>{9});
  EXPECT_EQ(cat.frequency.at(9), (std::vector<std::uint64_t>{500, 500}));
  EXPECT_TRUE(cat.contains(9));
  EXPECT_FALSE(cat.contains(8));
  EXPECT_THROW(detect_heavy_hitters(q, inst, "nope", 8), Error);
}

TEST(HeavyHitters, FrequencyIsReportedPerAtom) {
  auto q = star_query(2);
  SkewSpec spec = {{ColumnSpec::heavy_hitters({{5, 300}}), ColumnSpec::matching()},
                   {ColumnSpec::matching(), ColumnSpec::matching()}};
  auto inst = skewed_db(q, Statistics::equal(q, 1000, 4000), spec, 4);
  auto cat = detect_heavy_hitters(q, inst, "z", 10);
  ASSERT_EQ(cat.heavy, std::vector<Value>{5});
  EXPECT_EQ(cat.frequency.at(5)[0], 300u);
  EXPECT_LE(cat.frequency.at(5)[1], 1u);
}

TEST(StarPlan, HeavyLoadFormula) {
  const double M = 1000;
  const std::uint64_t p = 64;
  // One hitter of frequency M everywhere: (prod M / p)^{1/l}.
  EXPECT_NEAR(star_heavy_load({{M, M, M}}, p), std::pow(M * M * M / p, 1.0 / 3), 1e-9);
  // Two hitters of frequency M/2 on a two-atom star: max(M/p, sqrt(M^2 / 2p)).
  EXPECT_NEAR(star_heavy_load({{M / 2, M / 2}, {M / 2, M / 2}}, p), std::sqrt(M * M / (2 * p)), 1e-9);
}

TEST(StarPlan, AllocationRespectsBudget) {
  auto q = star_query(2);
  auto inst = star_instance(2, 4000, {{0, 2000}, {1, 1000}}, 6);
  auto cat = detect_heavy_hitters(q, inst, "z", 16);
  ASSERT_EQ(cat.size(), 2u);
  auto plan = star_skew_plan(q, cat, inst.statistics(q), 16);
  EXPECT_EQ(plan.vertices.size(), 3u);
  EXPECT_EQ(plan.server_budget, 3u * 3u * 16u);
  EXPECT_LE(plan.total_servers, plan.server_budget);
  EXPECT_EQ(plan.light_servers, 16u);
  ASSERT_EQ(plan.pools.size(), 2u);
  for (const auto& pool : plan.pools) {
    EXPECT_EQ(pool.shares[static_cast<std::size_t>(plan.shape.center)], 1u);
    EXPECT_GE(pool.first_server, plan.light_servers);
  }
  EXPECT_NEAR(plan.light_load_tuples, 4000.0 / 16, 1e-9);
  EXPECT_THROW(star_shape(cycle_query(3)), PreconditionError);
}

TEST(StarRun, OutputEqualsOracleAndLoadIsAboveLowerBound) {
  for (int l : {2, 3}) {
    auto q = star_query(l);
    const std::uint64_t m = l == 2 ? 3000 : 200;
    auto inst = star_instance(l, m, {{0, m / 2}, {7, m / 10}}, 10 + static_cast<std::uint64_t>(l));
    auto cat = detect_heavy_hitters(q, inst, "z", 16);
    auto plan = star_skew_plan(q, cat, inst.statistics(q), 16);
    auto run = execute_star_skew(q, inst, plan, 99);
    EXPECT_EQ(run.output, oracle_eval(q, inst)) << l;
    auto lb = skew_lower_bound(q, x_statistics(q, inst, {plan.shape.center}), 16);
    EXPECT_GT(lb.bits, 0);
    EXPECT_LE(lb.bits, static_cast<double>(run.report.max_bits())) << l;
  }
}

TEST(StarRun, DeterministicGivenSeed) {
  auto q = star_query(2);
  auto inst = star_instance(2, 2000, {{3, 800}}, 1);
  auto cat = detect_heavy_hitters(q, inst, "z", 8);
  auto plan = star_skew_plan(q, cat, inst.statistics(q), 8);
  auto a = execute_star_skew(q, inst, plan, 5);
  auto b = execute_star_skew(q, inst, plan, 5);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  EXPECT_EQ(a.case_names, b.case_names);
}

TEST(TriangleRun, OutputEqualsOracleUnderSkew) {
  auto q = parse_query("R(x,y),S(y,z),T(z,x)");
  const std::uint64_t m = 3000;
  SkewSpec spec = {{ColumnSpec::heavy_hitters({{1, 600}}), ColumnSpec::matching()},
                   {ColumnSpec::heavy_hitters({{2, 400}}), ColumnSpec::matching()},
                   {ColumnSpec::matching(), ColumnSpec::heavy_hitters({{1, 700}})}};
  auto inst = skewed_db(q, Statistics::equal(q, m, 3 * m), spec, 12);
  auto tr = triangle_skew_execute(q, inst, 27, 4);
  const auto expected = oracle_eval(q, inst);
  EXPECT_EQ(tr.run.output, expected);
  ASSERT_EQ(tr.outputs_per_case.size(), 7u);
  std::uint64_t total = 0;
  for (auto c : tr.outputs_per_case) total += c;
  EXPECT_GE(total, expected.size());
  EXPECT_NEAR(tr.prediction_tuples.light, m / std::pow(27.0, 2.0 / 3), 1e-9);
  EXPECT_EQ(tr.prediction_tuples.pair_terms.size(), 3u);
  EXPECT_THROW(triangle_skew_execute(line_query(3), random_matching_db(line_query(3), Statistics::equal(line_query(3), 5, 5), 1), 8, 1),
               PreconditionError);
}

TEST(TriangleRun, MatchingInstanceUsesOnlyTheLightCase) {
  auto q = parse_query("R(x,y),S(y,z),T(z,x)");
  auto inst = random_matching_db(q, Statistics::equal(q, 2000, 2000), 7);
  auto tr = triangle_skew_execute(q, inst, 27, 4);
  EXPECT_EQ(tr.run.output, oracle_eval(q, inst));
  for (std::size_t i = 1; i < tr.outputs_per_case.size(); ++i) EXPECT_EQ(tr.outputs_per_case[i], 0u);
}

TEST(LowerBound, SkewFreeInstanceMatchesFractionalBound) {
  auto q = star_query(2);
  auto inst = star_instance(2, 4000, {{0, 4000}}, 2);
  auto lb = skew_lower_bound(q, x_statistics(q, inst, {0}), 16);
  // Single value of frequency m in both atoms: residual is a product of two
  // unary relations, best vertex u = (1,1). Sizes are in bits: m * arity * bpv.
  EXPECT_EQ(lb.witness, (std::vector<Rational>{1, 1}));
  const double M = 4000.0 * 2 * static_cast<double>(inst.statistics(q).bits_per_value());
  EXPECT_NEAR(lb.bits / lb.constant, std::sqrt(M * M / 16), 1e-6 * lb.bits);
  EXPECT_DOUBLE_EQ(lb.constant, 1.0 / 8);
}

}  // namespace
}  // namespace mpcjoin
