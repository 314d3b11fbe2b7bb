#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "json.hpp"
#include "mpcjoin/error.hpp"
#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/query.hpp"
#include "support.hpp"

namespace mpcjoin {
namespace {

using testing::dense_instance;
using testing::make_relation;

TEST(Grid, MixedRadixRoundTrip) {
  const std::vector<std::uint64_t> shares = {2, 3, 4};
  EXPECT_EQ(grid_size(shares), 24u);
  EXPECT_EQ(server_id({1, 0, 0}, shares), 12u);
  EXPECT_EQ(server_id({0, 1, 0}, shares), 4u);
  EXPECT_EQ(server_id({0, 0, 1}, shares), 1u);
  std::set<std::vector<std::uint64_t>> coords;
  for (std::uint64_t id = 0; id < 24; ++id) {
    auto c = server_coordinates(id, shares);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(c[i], shares[i]);
    EXPECT_EQ(server_id(c, shares), id);
    coords.insert(c);
  }
  EXPECT_EQ(coords.size(), 24u);
  EXPECT_THROW(grid_size({2, 0}), PreconditionError);
}

TEST(HashFamily, ValuesStayInRangeAndDependOnSeed) {
  HashFamily h(5, {3, 7}), g(6, {3, 7});
  bool differs = false;
  for (Value v = 0; v < 200; ++v) {
    EXPECT_LT(h(0, v), 3u);
    EXPECT_LT(h(1, v), 7u);
    EXPECT_EQ(h(1, v), HashFamily(5, {3, 7})(1, v));
    differs |= h(1, v) != g(1, v);
  }
  EXPECT_TRUE(differs);
}

TEST(DestinationSubcube, SizeIsProductOfMissingShares) {
  auto c3 = cycle_query(3);
  HashFamily h(1, {2, 2, 2});
  const std::vector<Value> t = {10, 20};
  EXPECT_EQ(destination_subcube(c3.atom(0), t, h).size(), 2u);

  auto full = parse_query("R(x,y,z)");
  const std::vector<Value> u = {1, 2, 3};
  EXPECT_EQ(destination_subcube(full.atom(0), u, HashFamily(1, {2, 2, 2})).size(), 1u);

  auto q = parse_query("R(x),S(x,y)");
  HashFamily h2(9, {4, 3});
  const std::vector<Value> x = {42};
  auto ids = destination_subcube(q.atom(0), x, h2);
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  for (auto id : ids) EXPECT_EQ(server_coordinates(id, {4, 3})[0], h2(0, 42));
}

TEST(DestinationSubcube, RepeatedVariableNeedsAgreeingHashes) {
  auto q = parse_query("R(x,x),S(x,y)");
  HashFamily h(3, {8, 2});
  Value a = 0, b = 1;
  while (h(0, a) == h(0, b)) ++b;
  const std::vector<Value> bad = {a, b}, good = {a, a};
  EXPECT_TRUE(destination_subcube(q.atom(0), bad, h).empty());
  EXPECT_EQ(destination_subcube(q.atom(0), good, h).size(), 2u);
}

TEST(OneRound, OutputEqualsOracle) {
  struct Case {
    const char* query;
    std::vector<std::uint64_t> shares;
  };
  const Case cases[] = {{"C3", {2, 2, 2}}, {"L3", {1, 3, 3, 1}}, {"T3", {8, 1, 1, 1}}, {"K4e", {2, 2, 2, 1}},
                        {"R(x),S(y)", {3, 2}}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    auto q = named_query(c.query);
    auto inst = dense_instance(q, 100, 12, ++seed);
    ASSERT_GT(oracle_count(q, inst), 10u) << c.query;
    auto res = run_one_round(q, relation_pointers(inst), inst.n, c.shares, grid_size(c.shares), seed);
    EXPECT_EQ(res.output, oracle_eval(q, inst)) << c.query;
    EXPECT_EQ(res.report.servers(), grid_size(c.shares));
  }
}

TEST(OneRound, SingleServerReceivesEverything) {
  auto q = cycle_query(3);
  auto inst = random_matching_db(q, Statistics::equal(q, 300, 1000), 8);
  auto res = run_one_round(q, relation_pointers(inst), inst.n, {1, 1, 1}, 1, 8);
  EXPECT_EQ(res.report.max_tuples(), 900u);
  EXPECT_EQ(res.report.max_bits(), 900u * 2 * res.report.bits_per_value);
  EXPECT_EQ(res.report.bits_per_value, 10u);
}

TEST(OneRound, ReplicationIsProductOfMissingShares) {
  auto q = line_query(3);  // x0 x1 x2 x3
  const std::vector<std::uint64_t> shares = {2, 3, 4, 1};
  auto inst = random_matching_db(q, Statistics::equal(q, 500, 5000), 13);
  auto rep = route_one_round(q, relation_pointers(inst), inst.n, shares, 24, 13);
  const std::vector<std::uint64_t> missing = {4, 2, 6};
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(rep.sent[j], 500u * missing[j]);
    std::uint64_t received = 0;
    for (std::size_t s = 0; s < rep.servers(); ++s) received += rep.tuples[s][j];
    EXPECT_EQ(received, rep.sent[j]);
    EXPECT_DOUBLE_EQ(rep.replication()[j], static_cast<double>(missing[j]));
  }
}

TEST(OneRound, ThreadCountDoesNotChangeResults) {
  auto q = cycle_query(4);
  auto inst = random_matching_db(q, Statistics::equal(q, 2000, 2000), 17);
  const std::vector<std::uint64_t> shares = {2, 2, 2, 2};
  auto a = run_one_round(q, relation_pointers(inst), inst.n, shares, 16, 17, 1);
  auto b = run_one_round(q, relation_pointers(inst), inst.n, shares, 16, 17, 3);
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(a.report.tuples, b.report.tuples);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
}

TEST(OneRound, RejectsOversizedGrid) {
  auto q = cycle_query(3);
  auto inst = random_matching_db(q, Statistics::equal(q, 10, 10), 1);
  EXPECT_THROW(route_one_round(q, relation_pointers(inst), inst.n, {2, 2, 2}, 7, 1), PreconditionError);
  EXPECT_THROW(route_one_round(q, relation_pointers(inst), inst.n, {2, 2}, 8, 1), PreconditionError);
}

TEST(LoadReport, JsonCarriesTotals) {
  auto q = parse_query("R(x,y),S(y,z)");
  Instance inst;
  inst.n = 16;
  inst.relations = {make_relation("R", 2, {1, 2, 3, 4}), make_relation("S", 2, {2, 5})};
  auto rep = route_one_round(q, relation_pointers(inst), inst.n, {1, 2, 1}, 2, 4);
  auto j = nlohmann::json::parse(rep.to_json());
  EXPECT_EQ(j["p"], 2);
  EXPECT_EQ(j["per_server"].size(), 2u);
  std::uint64_t total = 0;
  for (const auto& row : j["per_server"]) total += row["tuples"].get<std::uint64_t>();
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(j["max_tuples"].get<std::uint64_t>(), rep.max_tuples());
  EXPECT_EQ(j["replication"].size(), 2u);
}

TEST(LoadReport, AccumulateAddsPerServer) {
  auto a = LoadReport::empty({"R"}, {2}, 3, 8);
  auto b = LoadReport::empty({"R"}, {2}, 2, 8);
  a.tuples = {{1}, {2}, {3}};
  b.tuples = {{10}, {20}};
  a.accumulate(b, 1);
  EXPECT_EQ(a.tuples, (std::vector<std::vector<std::uint64_t>>{{1}, {12}, {23}}));
  EXPECT_EQ(a.max_relation_tuples(), 23u);
}

}  // namespace
}  // namespace mpcjoin
