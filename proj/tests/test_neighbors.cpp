#include <catch2/catch_amalgamated.hpp>

#include "interpnn/neighbors.hpp"
#include "interpnn/random.hpp"

using namespace interpnn;

namespace {

LabeledDataset points_1d(std::initializer_list<double> xs) {
  LabeledDataset ds(Task::kRegression, 1);
  for (double x : xs) ds.add(std::vector<double>{x}, 0.0);
  return ds;
}

LabeledDataset random_dataset(Rng& rng, std::size_t n, int d, bool integer_grid) {
  LabeledDataset ds(Task::kClassification, d);
  std::vector<double> p(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : p)
      c = integer_grid ? static_cast<double>(rng.next_below(4)) : rng.next_normal();
    ds.add(p, static_cast<double>(rng.next_below(2)));
  }
  return ds;
}

}  // namespace

TEST_CASE("single-point dataset answers k = 0 queries") {
  LabeledDataset ds(Task::kRegression, 2);
  ds.add(std::vector<double>{1.0, 2.0}, 5.0);
  const KdTree tree(ds);
  const auto nl = tree.query(std::vector<double>{4.0, 6.0}, 0);
  REQUIRE(nl.indices.size() == 1);
  CHECK(nl.indices[0] == 0);
  CHECK_THAT(nl.distances[0], Catch::Matchers::WithinAbs(5.0, 1e-15));
  CHECK(nl.k() == 0);
}

TEST_CASE("hand-checked 1-d instance") {
  // points at x = 0, 1, 2, 3; query 0.9 with k = 2
  const auto ds = points_1d({0.0, 1.0, 2.0, 3.0});
  const auto nl = KdTree(ds).query(std::vector<double>{0.9}, 2);
  REQUIRE(nl.indices == std::vector<std::uint32_t>{1, 0, 2});
  CHECK_THAT(nl.distances[0], Catch::Matchers::WithinAbs(0.1, 1e-15));
  CHECK_THAT(nl.distances[1], Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(nl.distances[2], Catch::Matchers::WithinAbs(1.1, 1e-15));
}

TEST_CASE("query at a training point reports distance zero there") {
  const auto ds = points_1d({0.0, 1.0, 2.0});
  const auto nl = brute_knn(ds, std::vector<double>{1.0}, 1);
  CHECK(nl.indices[0] == 1);
  CHECK(nl.distances[0] == 0.0);
}

TEST_CASE("equidistant ties resolve to the lower training index") {
  const auto ds = points_1d({-1.0, 1.0, 5.0});
  const auto nl = brute_knn(ds, std::vector<double>{0.0}, 1);
  CHECK(nl.indices == std::vector<std::uint32_t>{0, 1});
  CHECK(nl.distances[0] == nl.distances[1]);
}

TEST_CASE("duplicate points are retained as distinct indices") {
  LabeledDataset ds(Task::kRegression, 2);
  ds.add(std::vector<double>{1.0, 1.0}, 0.0);
  ds.add(std::vector<double>{1.0, 1.0}, 1.0);
  ds.add(std::vector<double>{9.0, 9.0}, 2.0);
  const auto nl = KdTree(ds).query(std::vector<double>{1.0, 1.0}, 1);
  CHECK(nl.indices == std::vector<std::uint32_t>{0, 1});
  CHECK(nl.distances[0] == 0.0);
  CHECK(nl.distances[1] == 0.0);
}

TEST_CASE("error cases") {
  const auto ds = points_1d({0.0, 1.0});
  const KdTree tree(ds);
  CHECK_THROWS_AS(tree.query(std::vector<double>{0.0}, 2), KTooLargeError);
  CHECK_THROWS_AS(tree.query(std::vector<double>{0.0, 0.0}, 1), DimensionMismatchError);
  CHECK_THROWS_AS(brute_knn(ds, std::vector<double>{0.0}, 5), KTooLargeError);
  LabeledDataset empty(Task::kRegression, 1);
  CHECK_THROWS_AS(KdTree(empty), EmptyDatasetError);
}

TEST_CASE("repeated queries return identical results") {
  Rng rng({11, 0});
  const auto ds = random_dataset(rng, 300, 3, false);
  const KdTree tree(ds);
  const std::vector<double> q = {0.1, -0.2, 0.3};
  const auto a = tree.query(q, 7);
  const auto b = tree.query(q, 7);
  CHECK(a == b);
}

TEST_CASE("tree and brute force agree field-for-field on random instances") {
  Rng rng({314159, 0});
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(10));
    const std::size_t n = 1 + rng.next_below(200);
    // every third instance lives on a small integer grid to force distance ties
    const bool grid = trial % 3 == 0;
    const auto ds = random_dataset(rng, n, d, grid);
    const KdTree tree(ds);
    std::vector<double> q(static_cast<std::size_t>(d));
    for (int qi = 0; qi < 5; ++qi) {
      for (auto& c : q) c = grid ? static_cast<double>(rng.next_below(4)) : rng.next_normal();
      const int k = static_cast<int>(rng.next_below(n));
      const auto from_tree = tree.query(q, k);
      const auto from_scan = brute_knn(ds, q, k);
      REQUIRE(from_tree == from_scan);
    }
  }
}
