#include "execopt/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

#include "execopt/errors.hpp"

namespace execopt::kernels {

std::uint64_t Grid::size() const {
  std::uint64_t n = 1;
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (upper[k] < lower[k]) return 0;
    const auto extent = static_cast<std::uint64_t>(upper[k] - lower[k]) + 1;
    if (n > std::numeric_limits<std::uint64_t>::max() / extent) return 0;
    n *= extent;
  }
  return n;
}

void Grid::decode(std::uint64_t index, std::span<double> point) const {
  for (std::size_t k = lower.size(); k-- > 0;) {
    const auto extent = static_cast<std::uint64_t>(upper[k] - lower[k]) + 1;
    point[k] = static_cast<double>(lower[k] + static_cast<long long>(index % extent));
    index /= extent;
  }
}

namespace {

bool better(double candidate, double incumbent, Direction direction) {
  return direction == Direction::Minimize ? candidate < incumbent : candidate > incumbent;
}

// Merges two partial optima; the lower index wins exact objective ties.
void merge(GridOptimum& into, const GridOptimum& other, Direction direction) {
  into.points_evaluated += other.points_evaluated;
  if (!other.found) return;
  if (!into.found || better(other.objective, into.objective, direction) ||
      (other.objective == into.objective && other.index < into.index)) {
    into.found = true;
    into.index = other.index;
    into.objective = other.objective;
  }
}

}  // namespace

GridOptimum enumerate_grid(const ground::Model& model, const Grid& grid, Direction direction) {
  GridOptimum result;
  const std::uint64_t total = grid.size();
  if (model.trivially_infeasible || total == 0) return result;
  const std::size_t dims = grid.lower.size();

#pragma omp parallel
  {
    GridOptimum local;
    std::vector<double> point(dims);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      grid.decode(idx, point);
      ++local.points_evaluated;
      if (!model.feasible(point)) continue;
      const double f = model.objective.evaluate(point);
      if (std::isnan(f)) continue;
      if (!local.found || better(f, local.objective, direction)) {
        local.found = true;
        local.objective = f;
        local.index = idx;
      }
    }
#pragma omp critical(execopt_grid_merge)
    merge(result, local, direction);
  }
  return result;
}

GridOptimum enumerate_grid_serial(const ground::Model& model, const Grid& grid,
                                  Direction direction) {
  GridOptimum result;
  const std::uint64_t total = grid.size();
  if (model.trivially_infeasible || total == 0) return result;
  const std::size_t dims = grid.lower.size();

  // Odometer walk in lexicographic order.
  std::vector<double> point(dims);
  for (std::size_t k = 0; k < dims; ++k) point[k] = static_cast<double>(grid.lower[k]);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    ++result.points_evaluated;
    if (model.feasible(point)) {
      const double f = model.objective.evaluate(point);
      if (!std::isnan(f) && (!result.found || better(f, result.objective, direction))) {
        result.found = true;
        result.objective = f;
        result.index = idx;
      }
    }
    for (std::size_t k = dims; k-- > 0;) {
      if (point[k] < static_cast<double>(grid.upper[k])) {
        point[k] += 1.0;
        break;
      }
      point[k] = static_cast<double>(grid.lower[k]);
    }
  }
  return result;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("vectors have dimensions " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine similarity of a zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::fmax(-1.0, std::fmin(1.0, c));
}

std::vector<double> cosine_scan(std::span<const double> query,
                                std::span<const std::vector<double>> rows) {
  std::vector<double> out(rows.size());
  for (const auto& r : rows) {
    if (r.size() != query.size()) {
      throw DimensionMismatch("stored vector dimension differs from query");
    }
  }
  bool zero = false;
#pragma omp parallel for schedule(static) reduction(|| : zero)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows.size()); ++i) {
    try {
      out[i] = cosine(query, rows[i]);
    } catch (const ZeroVector&) {
      zero = true;
    }
  }
  if (zero) throw ZeroVector("cosine similarity of a zero vector");
  return out;
}

std::vector<double> cosine_scan_serial(std::span<const double> query,
                                       std::span<const std::vector<double>> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(cosine(query, r));
  return out;
}

std::vector<double> pairwise_cosine(std::span<const std::vector<double>> rows) {
  const std::size_t n = rows.size();
  std::vector<double> m(n * n, 1.0);
  bool failed = false;
#pragma omp parallel for schedule(dynamic) reduction(|| : failed)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j) {
      try {
        const double c = cosine(rows[i], rows[j]);
        m[i * n + j] = c;
        m[j * n + i] = c;
      } catch (const Error&) {
        failed = true;
      }
    }
  }
  if (failed) {
    // Re-run serially to surface the precise error.
    return pairwise_cosine_serial(rows);
  }
  return m;
}

std::vector<double> pairwise_cosine_serial(std::span<const std::vector<double>> rows) {
  const std::size_t n = rows.size();
  std::vector<double> m(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = cosine(rows[i], rows[j]);
      m[i * n + j] = c;
      m[j * n + i] = c;
    }
  }
  return m;
}

}  // namespace execopt::kernels
