#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a plain
// serial reference with the same contract; tests hold them equal and
// bench/kernels_bench.cpp compares their throughput.

#include <cstdint>
#include <span>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/ground.hpp"

namespace execopt::kernels {

// ---------------------------------------------------------------------------
// Integer grid enumeration

struct Grid {
  std::vector<long long> lower;  // inclusive, one per free slot
  std::vector<long long> upper;  // inclusive

  // Number of points, or 0 when it would overflow 64 bits.
  std::uint64_t size() const;
  // Mixed-radix decode with slot 0 most significant, so increasing linear
  // index is lexicographic order over the point vector.
  void decode(std::uint64_t index, std::span<double> point) const;
};

struct GridOptimum {
  bool found = false;
  std::uint64_t index = 0;  // linear index of the best point
  double objective = 0.0;
  std::uint64_t points_evaluated = 0;
};

// Best feasible point under `direction`; ties go to the smallest index.
GridOptimum enumerate_grid(const ground::Model& model, const Grid& grid, Direction direction);
GridOptimum enumerate_grid_serial(const ground::Model& model, const Grid& grid, Direction direction);

// ---------------------------------------------------------------------------
// Cosine similarity

// Throws DimensionMismatch or ZeroVector.
double cosine(std::span<const double> a, std::span<const double> b);

// cos(query, rows[i]) for every row.
std::vector<double> cosine_scan(std::span<const double> query,
                                std::span<const std::vector<double>> rows);
std::vector<double> cosine_scan_serial(std::span<const double> query,
                                       std::span<const std::vector<double>> rows);

// Symmetric n×n matrix of pairwise cosines, row-major; diagonal is 1.
std::vector<double> pairwise_cosine(std::span<const std::vector<double>> rows);
std::vector<double> pairwise_cosine_serial(std::span<const std::vector<double>> rows);

}  // namespace execopt::kernels
