#include <doctest.h>

#include <cmath>
#include <random>

#include "wgt/error.hpp"
#include "wgt/struct_features.hpp"

using namespace wgt;
using K = InteractionKind;
using N = NodeKind;

namespace {

NodeKey tp(const std::string& d) { return {d, N::Script}; }

void link(WideGraph& g, const NodeKey& a, const NodeKey& b, K label) {
  g.add_node(a);
  g.add_node(b);
  g.add_edge(EdgeKey{a, b, label}, 1, {"r.com"});
}

// r -> A -> B after expansion (r -> B Bounced).
WideGraph path_graph() {
  WideGraph g;
  g.add_root("r.com");
  const NodeKey r{"r.com", N::FirstParty};
  link(g, r, tp("a.net"), K::Script);
  link(g, tp("a.net"), tp("b.net"), K::Script);
  link(g, r, tp("b.net"), K::Bounced);
  return g;
}

// Independent Pearson correlation for the oracle checks.
double oracle_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

StructMatrix matrix_of(std::vector<std::pair<std::string, std::vector<double>>> cols) {
  StructMatrix m;
  for (std::size_t i = 0; i < cols.front().second.size(); ++i) m.nodes.push_back(tp("n" + std::to_string(i)));
  for (auto& [name, values] : cols) m.columns.push_back(FeatureColumn{name, 0, values});
  return m;
}

}  // namespace

TEST_CASE("base features on the path r -> A -> B") {
  const auto g = path_graph();
  const GraphIndex index(g);
  const auto a = base_features(g, index, tp("a.net"));
  CHECK(a.in_degree == 1);
  CHECK(a.out_degree == 1);
  CHECK(a.degree == 2);
  CHECK(a.ego_inter == 3);
  CHECK(a.ego_out == 0);
  CHECK(a.direct_cov == 1.0);
  CHECK(a.indirect_cov == 1.0);
  const auto b = base_features(g, index, tp("b.net"));
  CHECK(b.in_degree == 2);
  CHECK(b.direct_cov == 0.0);
  CHECK(b.indirect_cov == 1.0);
  CHECK_THROWS_AS(base_features(g, index, tp("zz.net")), UsageError);
}

TEST_CASE("base features on a triangle and with an outside edge") {
  WideGraph g;
  link(g, tp("a"), tp("b"), K::Script);
  link(g, tp("b"), tp("c"), K::Script);
  link(g, tp("a"), tp("c"), K::Script);
  {
    const GraphIndex index(g);
    const auto b = base_features(g, index, tp("b"));
    CHECK(b.ego_inter == 3);
    CHECK(b.ego_out == 0);
  }
  link(g, tp("c"), tp("d"), K::Script);
  link(g, tp("e"), tp("d"), K::Script);
  const GraphIndex index(g);
  const auto b = base_features(g, index, tp("b"));
  CHECK(b.ego_inter == 3);
  CHECK(b.ego_out == 1);  // c -> d leaves the egonet {a, b, c}; e -> d does not touch it
  const auto d = base_features(g, index, tp("d"));
  CHECK(d.in_degree == 2);
  CHECK(d.ego_inter == 2);
  CHECK(d.ego_out == 2);  // b -> c and a -> c enter the egonet
}

TEST_CASE("parallel labels count once") {
  WideGraph g;
  link(g, tp("a"), NodeKey{"b", N::Media}, K::Media);
  g.add_edge(EdgeKey{tp("a"), NodeKey{"b", N::Media}, K::Bounced}, 5, {"x.com"});
  const GraphIndex index(g);
  CHECK(base_features(g, index, tp("a")).out_degree == 1);
}

TEST_CASE("one recursion level matches a hand-computed neighbor aggregate") {
  const auto g = path_graph();
  const GraphIndex index(g);
  const auto base = base_matrix(g, index);
  CHECK(base.columns.size() == 7);
  RefexOptions opts;
  opts.depth = 1;
  opts.prune_threshold = 1.0;
  const auto expanded = refex_expand(base, index, opts);
  // neighbors of A are r (degree 2) and B (degree 2)
  const auto row = expanded.row(tp("a.net"));
  const auto names = expanded.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c] == "mean(in_degree)") CHECK(row[c] == doctest::Approx((0.0 + 2.0) / 2));
    if (names[c] == "sum(in_degree)") CHECK(row[c] == doctest::Approx(2.0));
  }
  CHECK(expanded.columns.size() <= 21);
  for (const auto& col : expanded.columns) CHECK(generation_of(col.name) == col.generation);
}

TEST_CASE("depth 0 leaves the matrix unchanged") {
  const auto g = path_graph();
  const GraphIndex index(g);
  const auto base = base_matrix(g, index);
  RefexOptions opts;
  opts.depth = 0;
  const auto same = refex_expand(base, index, opts);
  CHECK(same.column_names() == base.column_names());
  for (std::size_t c = 0; c < base.columns.size(); ++c) CHECK(same.columns[c].values == base.columns[c].values);
}

TEST_CASE("ring graph: expansion adds no retained columns") {
  WideGraph g;
  for (int i = 0; i < 10; ++i) link(g, tp("n" + std::to_string(i)), tp("n" + std::to_string((i + 1) % 10)), K::Script);
  const GraphIndex index(g);
  const auto base = prune_correlated(base_matrix(g, index), 0.95);
  RefexOptions opts;
  opts.depth = 2;
  const auto expanded = refex_expand(base_matrix(g, index), index, opts);
  // every column is constant, so a single representative survives either way
  CHECK(expanded.columns.size() == base.columns.size());
  CHECK(expanded.columns.size() == 1);
}

TEST_CASE("prune_correlated") {
  SUBCASE("duplicate and scaled copies are dropped") {
    const auto m = prune_correlated(matrix_of({{"a", {1, 2, 3, 5}}, {"b", {1, 2, 3, 5}}, {"c", {2, 4, 6, 10}},
                                               {"d", {-3, -6, -9, -15}}, {"e", {4, 1, 3, 0}}}),
                                    0.95);
    CHECK(m.column_names() == std::vector<std::string>{"a", "e"});
  }
  SUBCASE("constant columns: first kept, no correlation with the rest") {
    const auto m = prune_correlated(matrix_of({{"a", {1, 1, 1}}, {"b", {2, 2, 2}}, {"c", {1, 2, 3}}}), 0.95);
    CHECK(m.column_names() == std::vector<std::string>{"a", "c"});
  }
  SUBCASE("order is generation then name") {
    auto m = matrix_of({{"z", {1, 2, 3}}, {"sum(y)", {1, 2, 3}}});
    m.columns[1].generation = 1;
    const auto kept = prune_correlated(m, 0.9);
    CHECK(kept.column_names() == std::vector<std::string>{"z"});
  }
  SUBCASE("threshold outside (0, 1] is rejected") {
    CHECK_THROWS_AS(prune_correlated(matrix_of({{"a", {1, 2}}}), 0.0), UsageError);
    CHECK_THROWS_AS(prune_correlated(matrix_of({{"a", {1, 2}}}), 1.5), UsageError);
  }
}

TEST_CASE("property: independent random columns survive; retained pairs stay below the threshold") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    for (int c = 0; c < 6; ++c) {
      std::vector<double> v(200);
      for (auto& x : v) x = normal(rng);
      cols.emplace_back("c" + std::to_string(c), v);
    }
    // correlated companions
    std::vector<double> near = cols[0].second, mixed = cols[1].second;
    for (std::size_t i = 0; i < near.size(); ++i) {
      near[i] = 3 * near[i] + 0.01 * normal(rng);
      mixed[i] = mixed[i] + cols[2].second[i];
    }
    cols.emplace_back("x_near", near);
    cols.emplace_back("x_mixed", mixed);
    const auto kept = prune_correlated(matrix_of(cols), 0.95);
    const auto names = kept.column_names();
    CHECK(std::find(names.begin(), names.end(), "x_near") == names.end());
    CHECK(std::find(names.begin(), names.end(), "x_mixed") != names.end());
    for (int c = 0; c < 6; ++c) {
      CHECK(std::find(names.begin(), names.end(), "c" + std::to_string(c)) != names.end());
    }
    for (std::size_t i = 0; i < kept.columns.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.columns.size(); ++j) {
        CHECK(std::abs(oracle_r(kept.columns[i].values, kept.columns[j].values)) < 0.95);
      }
    }
  }
}

TEST_CASE("pearson agrees with the oracle and rejects zero variance") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      y[i] = x[i] * 0.5 + u(rng);
    }
    CHECK(*pearson(x, y) == doctest::Approx(oracle_r(x, y)).epsilon(1e-12));
  }
  CHECK_FALSE(pearson({1, 1, 1}, {1, 2, 3}));
}

TEST_CASE("structural_features is deterministic, third-party only, and pairwise decorrelated") {
  std::mt19937_64 rng(21);
  WideGraph g;
  for (int s = 0; s < 15; ++s) {
    const std::string root = "site" + std::to_string(s) + ".com";
    g.add_root(root);
    for (int k = 0; k < 4; ++k) {
      const auto t = tp("t" + std::to_string(rng() % 12) + ".net");
      link(g, NodeKey{root, N::FirstParty}, t, K::Script);
      if (rng() % 2) link(g, t, NodeKey{"m" + std::to_string(rng() % 6) + ".org", N::Media}, K::Media);
    }
  }
  const auto a = structural_features(g, RefexOptions{});
  const auto b = structural_features(g, RefexOptions{});
  CHECK(a.column_names() == b.column_names());
  for (std::size_t c = 0; c < a.columns.size(); ++c) CHECK(a.columns[c].values == b.columns[c].values);
  for (const auto& node : a.nodes) CHECK_FALSE(node.is_first_party());
  const auto names = a.column_names();
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    for (std::size_t j = i + 1; j < a.columns.size(); ++j) {
      const auto r = pearson(a.columns[i].values, a.columns[j].values);
      if (r) CHECK(std::abs(*r) < 0.95);
    }
  }
}
