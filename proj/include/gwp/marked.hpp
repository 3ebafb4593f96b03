#pragma once

// Multivariate (marked) generalized Waring process on W x {1, ..., m} and
// projections of product-grid counts.
//
// The product measure nu(A x C) = mu(A) |C| is realized by treating every
// (cell, mark) pair as a cell of the same volume, so both gw_process
// backends apply unchanged. Marks are numbered from 1.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gwp/errors.hpp"
#include "gwp/process.hpp"

namespace gwp {

struct MarkedGrid {
  QuadratGrid grid;
  int num_marks = 1;

  MarkedGrid(QuadratGrid g, int marks) : grid(std::move(g)), num_marks(marks) {
    if (num_marks < 1) throw DomainError("MarkedGrid: need at least one mark");
  }

  [[nodiscard]] std::size_t num_slots() const noexcept {
    return grid.num_cells() * static_cast<std::size_t>(num_marks);
  }
};

/// Counts stored cell-major: slot = cell * num_marks + (mark - 1).
struct MarkedCountField {
  MarkedGrid marked_grid;
  std::vector<std::int64_t> counts;
  CountMeta meta;

  [[nodiscard]] std::int64_t at(std::size_t cell, int mark) const {
    return counts.at(cell * static_cast<std::size_t>(marked_grid.num_marks) +
                     static_cast<std::size_t>(mark - 1));
  }
};

template <typename URBG>
MarkedCountField simulate_marked_counts(const GwdParams& p, const MarkedGrid& mg, Backend backend,
                                        URBG& rng) {
  p.validate();
  const std::vector<double> shapes(mg.num_slots(), p.k * mg.grid.cell_volume());
  return MarkedCountField{
      mg, detail::simulate_shapes(backend, p.a, p.rho, std::span<const double>(shapes), rng),
      CountMeta{p, 0, backend, "gwp"}};
}

namespace detail {

inline void check_mark(const MarkedCountField& f, int mark) {
  if (mark < 1 || mark > f.marked_grid.num_marks) throw IndexError("mark index out of range");
}

}  // namespace detail

/// Counts of one mark; a GW process with the original (a, k, rho).
inline CountField marginal_counts(const MarkedCountField& f, int mark) {
  detail::check_mark(f, mark);
  const std::size_t cells = f.marked_grid.grid.num_cells();
  std::vector<std::int64_t> counts(cells);
  for (std::size_t c = 0; c < cells; ++c) counts[c] = f.at(c, mark);
  return CountField{f.marked_grid.grid, std::move(counts), f.meta};
}

/// Cellwise sum over a set of distinct marks; a GW process with shape k * |marks|.
inline CountField superpose_marks(const MarkedCountField& f, std::span<const int> marks) {
  if (marks.empty()) throw DomainError("superpose_marks: empty mark set");
  std::vector<int> sorted(marks.begin(), marks.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw IndexError("superpose_marks: duplicate mark index");
  }
  for (int m : sorted) detail::check_mark(f, m);
  const std::size_t cells = f.marked_grid.grid.num_cells();
  std::vector<std::int64_t> counts(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (int m : sorted) counts[c] += f.at(c, m);
  }
  CountMeta meta = f.meta;
  meta.params.k *= static_cast<double>(sorted.size());
  return CountField{f.marked_grid.grid, std::move(counts), meta};
}

inline CountField superpose_marks(const MarkedCountField& f, const std::vector<int>& marks) {
  return superpose_marks(f, std::span<const int>(marks));
}

/// Inverse of marginal_counts over all marks.
inline MarkedCountField stack_marks(std::span<const CountField> per_mark) {
  if (per_mark.empty()) throw DomainError("stack_marks: no fields");
  const QuadratGrid& grid = per_mark.front().grid;
  for (const auto& f : per_mark) {
    if (!(f.grid == grid)) throw HeterogeneityError("stack_marks: fields live on different grids");
  }
  const int m = static_cast<int>(per_mark.size());
  MarkedCountField out{MarkedGrid(grid, m), std::vector<std::int64_t>(grid.num_cells() * per_mark.size()),
                       per_mark.front().meta};
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    for (int j = 0; j < m; ++j) out.counts[c * per_mark.size() + j] = per_mark[j].counts[c];
  }
  return out;
}

/// Sums counts along `axis`, which is removed from the grid. The projected
/// window keeps the remaining axes and multiplies the density by the
/// discarded extent, so cell volumes are unchanged.
inline CountField project_counts(const CountField& f, int axis) {
  const QuadratGrid& g = f.grid;
  if (g.dim() < 2) throw DomainError("project_counts: need at least two axes");
  if (axis < 0 || axis >= g.dim()) throw IndexError("project_counts: axis out of range");

  const Window& w = g.window();
  std::vector<double> lower, upper;
  std::vector<int> cells;
  for (int i = 0; i < g.dim(); ++i) {
    if (i == axis) continue;
    lower.push_back(w.lower()[i]);
    upper.push_back(w.upper(i));
    cells.push_back(g.cells_per_axis()[i]);
  }
  QuadratGrid pg(Window(std::move(lower), std::move(upper), w.density() * w.extent()[axis]),
                 std::move(cells));

  std::vector<std::int64_t> counts(pg.num_cells(), 0);
  std::array<int, kMaxDim> kept{};
  for (std::size_t cell = 0; cell < f.counts.size(); ++cell) {
    const auto idx = g.multi_index(cell);
    int j = 0;
    for (int i = 0; i < g.dim(); ++i) {
      if (i != axis) kept[j++] = idx[i];
    }
    counts[pg.flat_index(std::span<const int>(kept.data(), pg.dim()))] += f.counts[cell];
  }
  return CountField{pg, std::move(counts), f.meta};
}

}  // namespace gwp
