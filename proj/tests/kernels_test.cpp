#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "execopt/errors.hpp"
#include "execopt/instance.hpp"
#include "execopt/kernels.hpp"
#include "test_support.hpp"

using namespace execopt;

namespace {

std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, int n, int dim) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& r : rows)
    for (auto& v : r) v = g(rng);
  return rows;
}

}  // namespace

TEST(Kernels, GridDecodeIsLexicographic) {
  kernels::Grid g{{0, -1}, {2, 1}};
  EXPECT_EQ(g.size(), 9u);
  std::vector<double> p(2);
  g.decode(0, p);
  EXPECT_EQ(p, (std::vector<double>{0, -1}));
  g.decode(5, p);
  EXPECT_EQ(p, (std::vector<double>{1, 1}));
  g.decode(8, p);
  EXPECT_EQ(p, (std::vector<double>{2, 1}));
}

TEST(Kernels, GridSizeOverflowIsZero) {
  kernels::Grid g{std::vector<long long>(5, 0), std::vector<long long>(5, 1'000'000)};
  EXPECT_EQ(g.size(), 0u);
}

TEST(Kernels, ParallelGridMatchesSerial) {
  const auto p = execopt::testing::food_process();
  const auto inst = instantiate(p);
  std::vector<std::string> free = {"x[3,6]", "x[4,1]", "x[6,2]", "x[6,4]", "x[6,5]"};
  std::map<std::string, double> fixed;
  for (const auto& k : inst.variables)
    if (std::find(free.begin(), free.end(), k) == free.end()) fixed[k] = 0.0;
  const auto model = ground::ground_process(p, inst.env, free, fixed);
  kernels::Grid g{{350, 25, 435, 35, 0}, {370, 40, 450, 50, 20}};
  for (Direction d : {Direction::Minimize, Direction::Maximize}) {
    const auto a = kernels::enumerate_grid(model, g, d);
    const auto b = kernels::enumerate_grid_serial(model, g, d);
    EXPECT_EQ(a.found, b.found);
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.points_evaluated, b.points_evaluated);
  }
  const auto best = kernels::enumerate_grid(model, g, Direction::Minimize);
  EXPECT_EQ(best.objective, 8090.0);
}

TEST(Kernels, CosineScanMatchesSerial) {
  std::mt19937_64 rng(3);
  const auto rows = random_rows(rng, 300, 17);
  const auto q = random_rows(rng, 1, 17)[0];
  EXPECT_EQ(kernels::cosine_scan(q, rows), kernels::cosine_scan_serial(q, rows));
  EXPECT_EQ(kernels::pairwise_cosine(rows), kernels::pairwise_cosine_serial(rows));
}

TEST(Kernels, CosineErrors) {
  std::vector<double> a = {1, 0}, b = {1, 0, 0}, z = {0, 0};
  EXPECT_THROW(kernels::cosine(a, b), DimensionMismatch);
  EXPECT_THROW(kernels::cosine(a, z), ZeroVector);
  EXPECT_DOUBLE_EQ(kernels::cosine(a, a), 1.0);
}

TEST(Kernels, PairwiseDiagonalAndSymmetry) {
  std::mt19937_64 rng(5);
  const auto rows = random_rows(rng, 6, 4);
  const auto m = kernels::pairwise_cosine(rows);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m[i * 6 + i], 1.0);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(m[i * 6 + j], m[j * 6 + i]);
  }
}
