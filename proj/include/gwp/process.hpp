#pragma once

// Generalized Waring process on axis-aligned boxes in R^d (d <= 3) with
// parameter measure mu = density * Lebesgue.
//
// For disjoint cells A_1..A_s the counts (N(A_1), ..., N(A_s)) are
// MGWD(a; k mu(A_1), ..., k mu(A_s); rho). Two exchangeable simulation
// backends realize this law:
//   cox          one p ~ Beta(rho, a), then per cell Poisson(theta * Gamma(k mu(A_i)))
//   conditional  M ~ UGWD(a, k mu(W); rho), then a Dirichlet-multinomial split of M
//                with weights k mu(A_i)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gwp/errors.hpp"
#include "gwp/gwd.hpp"
#include "gwp/rng.hpp"
#include "gwp/special_functions.hpp"

namespace gwp {

inline constexpr int kMaxDim = 3;

/// Box [lower, lower + extent) with measure density * Lebesgue. The extent
/// is stored rather than the upper corner so translation never perturbs
/// volumes.
class Window {
 public:
  Window(std::vector<double> lower, std::vector<double> upper, double density = 1.0)
      : lower_(std::move(lower)), density_(density) {
    if (lower_.empty() || lower_.size() > static_cast<std::size_t>(kMaxDim)) {
      throw DomainError("Window: dimension must be 1, 2 or 3");
    }
    if (upper.size() != lower_.size()) throw DimensionError("Window: lower/upper length mismatch");
    if (!(density_ > 0.0) || !std::isfinite(density_)) {
      throw DomainError("Window: density must be positive");
    }
    extent_.resize(lower_.size());
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!(lower_[i] < upper[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper[i])) {
        throw DomainError("Window: lower must be below upper on every axis");
      }
      extent_[i] = upper[i] - lower_[i];
    }
  }

  static Window unit(int dim, double density = 1.0) {
    return Window(std::vector<double>(static_cast<std::size_t>(dim), 0.0),
                  std::vector<double>(static_cast<std::size_t>(dim), 1.0), density);
  }

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(lower_.size()); }
  [[nodiscard]] const std::vector<double>& lower() const noexcept { return lower_; }
  [[nodiscard]] const std::vector<double>& extent() const noexcept { return extent_; }
  [[nodiscard]] double upper(int axis) const { return lower_.at(axis) + extent_.at(axis); }
  [[nodiscard]] double density() const noexcept { return density_; }

  [[nodiscard]] double volume() const noexcept {
    double v = density_;
    for (double e : extent_) v *= e;
    return v;
  }

  [[nodiscard]] Window translated(std::span<const double> offset) const {
    if (offset.size() != lower_.size()) throw DimensionError("Window::translated: offset length");
    Window w = *this;
    for (std::size_t i = 0; i < lower_.size(); ++i) w.lower_[i] += offset[i];
    return w;
  }

  [[nodiscard]] bool contains(std::span<const double> x) const {
    if (x.size() != lower_.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lower_[i] && x[i] <= lower_[i] + extent_[i])) return false;
    }
    return true;
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> extent_;
  double density_ = 1.0;
};

/// Congruent cells of a window, indexed row-major (axis 0 slowest).
class QuadratGrid {
 public:
  QuadratGrid(Window window, std::vector<int> cells_per_axis)
      : window_(std::move(window)), cells_(std::move(cells_per_axis)) {
    if (cells_.size() != static_cast<std::size_t>(window_.dim())) {
      throw DimensionError("QuadratGrid: one cell count per axis is required");
    }
    for (int n : cells_) {
      if (n < 1) throw DomainError("QuadratGrid: cells per axis must be positive");
    }
    cell_volume_ = window_.density();
    for (std::size_t i = 0; i < cells_.size(); ++i) cell_volume_ *= cell_width(static_cast<int>(i));
  }

  [[nodiscard]] const Window& window() const noexcept { return window_; }
  [[nodiscard]] const std::vector<int>& cells_per_axis() const noexcept { return cells_; }
  [[nodiscard]] int dim() const noexcept { return window_.dim(); }
  [[nodiscard]] double cell_volume() const noexcept { return cell_volume_; }

  [[nodiscard]] std::size_t num_cells() const noexcept {
    std::size_t n = 1;
    for (int c : cells_) n *= static_cast<std::size_t>(c);
    return n;
  }

  [[nodiscard]] double cell_width(int axis) const {
    return window_.extent().at(axis) / cells_.at(axis);
  }

  [[nodiscard]] std::array<int, kMaxDim> multi_index(std::size_t cell) const {
    std::array<int, kMaxDim> idx{};
    for (int axis = dim(); axis-- > 0;) {
      idx[axis] = static_cast<int>(cell % static_cast<std::size_t>(cells_[axis]));
      cell /= static_cast<std::size_t>(cells_[axis]);
    }
    return idx;
  }

  [[nodiscard]] std::size_t flat_index(std::span<const int> idx) const {
    if (idx.size() < static_cast<std::size_t>(dim())) throw DimensionError("flat_index: rank");
    std::size_t cell = 0;
    for (int axis = 0; axis < dim(); ++axis) {
      if (idx[axis] < 0 || idx[axis] >= cells_[axis]) throw IndexError("flat_index: out of range");
      cell = cell * static_cast<std::size_t>(cells_[axis]) + static_cast<std::size_t>(idx[axis]);
    }
    return cell;
  }

  /// Cell holding coordinate x on an axis, clamped to the grid.
  [[nodiscard]] int axis_cell(int axis, double x) const {
    const double rel = (x - window_.lower()[axis]) / cell_width(axis);
    const int c = static_cast<int>(std::floor(rel));
    return std::clamp(c, 0, cells_[axis] - 1);
  }

  [[nodiscard]] QuadratGrid translated(std::span<const double> offset) const {
    return QuadratGrid(window_.translated(offset), cells_);
  }

  friend bool operator==(const QuadratGrid&, const QuadratGrid&) = default;

 private:
  Window window_;
  std::vector<int> cells_;
  double cell_volume_ = 0.0;
};

enum class Backend { cox, conditional };

inline std::string_view to_string(Backend b) noexcept {
  return b == Backend::cox ? "cox" : "conditional";
}

inline std::optional<Backend> parse_backend(std::string_view s) noexcept {
  if (s == "cox") return Backend::cox;
  if (s == "conditional") return Backend::conditional;
  return std::nullopt;
}

struct CountMeta {
  GwdParams params;
  std::uint64_t seed = 0;
  Backend backend = Backend::cox;
  /// "gwp" for GW process fields; baselines record their own model name.
  std::string model = "gwp";
};

struct CountField {
  QuadratGrid grid;
  std::vector<std::int64_t> counts;
  CountMeta meta;

  [[nodiscard]] std::int64_t total() const noexcept {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

struct PointPattern {
  Window window;
  std::vector<std::vector<double>> points;
  std::optional<std::vector<std::int64_t>> marks;
};

// ---------------------------------------------------------------------------
// Exact computations (functions of volumes only)

/// P0(A) = rho_(k mu(A)) / (rho+a)_(k mu(A)).
inline double avoidance_probability(const GwdParams& p, double volume) {
  if (!(volume >= 0.0)) throw DomainError("avoidance_probability: volume must be nonnegative");
  if (volume == 0.0) return 1.0;
  return std::exp(ugwd_log_p0(p.with_shape(p.k * volume)));
}

/// mu(A) recovered from P0(A) by inverting the gamma-ratio equation.
inline double avoidance_volume(const GwdParams& p, double p0, const SolverConfig& cfg = {}) {
  return solve_avoidance_inverse(p.a, p.rho, p0, cfg) / p.k;
}

/// P(N(B) = j | N(W) = n) for B inside W: beta-binomial with shapes
/// k mu(B) and k (mu(W) - mu(B)).
inline double conditional_count_pmf(const GwdParams& p, double vol_b, double vol_w, std::int64_t n,
                                    std::int64_t j) {
  if (!(vol_b > 0.0) || !(vol_b < vol_w)) {
    throw DomainError("conditional_count_pmf: need 0 < vol_B < vol_W");
  }
  if (n < 0 || j < 0 || j > n) throw DomainError("conditional_count_pmf: need 0 <= j <= n");
  const double dn = static_cast<double>(n);
  const double dj = static_cast<double>(j);
  const double log_choose = log_gamma(dn + 1.0) - log_gamma(dj + 1.0) - log_gamma(dn - dj + 1.0);
  const double in_b = p.k * vol_b;
  const double out_b = p.k * (vol_w - vol_b);
  return std::exp(log_choose + log_rising(in_b, dj) + log_rising(out_b, dn - dj) -
                  log_rising(p.k * vol_w, dn));
}

/// Factorial moment measure E[prod N(A_i)(N(A_i)-1)...(N(A_i)-r_i+1)] for
/// disjoint sets of the given volumes: a_(R) prod (k mu_i)_(r_i) / ((rho-1)...(rho-R)).
/// Orders (1) give the intensity measure, (1,1) the second-order moment measure.
inline double moment_measures(const GwdParams& p, std::span<const double> volumes,
                              std::span<const int> orders) {
  if (volumes.size() != orders.size() || volumes.empty()) {
    throw DimensionError("moment_measures: one order per volume");
  }
  std::vector<double> shapes(volumes.size());
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (!(volumes[i] > 0.0)) throw DomainError("moment_measures: volumes must be positive");
    shapes[i] = p.k * volumes[i];
  }
  return mgwd_factorial_moment(MgwdParams(p.a, p.rho, std::move(shapes)), orders);
}

inline double moment_measures(const GwdParams& p, const std::vector<double>& volumes,
                              const std::vector<int>& orders) {
  return moment_measures(p, std::span<const double>(volumes), std::span<const int>(orders));
}

/// d lambda / d mu = a k / (rho - 1).
inline double intensity_rate(const GwdParams& p) {
  if (!(p.rho > 1.0)) throw InfiniteMomentError("intensity is infinite for rho <= 1");
  return p.a * p.k / (p.rho - 1.0);
}

// ---------------------------------------------------------------------------
// Orderliness

struct OrderlinessRow {
  double volume = 0.0;
  double ratio = 0.0;  // P(N > 1) / P(N > 0)
  double p0 = 0.0;
  double p1 = 0.0;
  /// 1 - rho_(x) a x / ((rho+a)_(x+1) - rho_(x)) with x = k * volume.
  double printed_atom_constant = 0.0;
  /// First-order limit of the ratio as volume -> 0:
  /// 1 - a / ((rho+a)(Psi(rho+a) - Psi(rho))).
  double small_volume_limit = 0.0;
};

/// (1 - pi0 - pi1) / (1 - pi0) for N(A) ~ UGWD(a, k mu(A); rho), evaluated in
/// long double with expm1 so small volumes keep their leading digits.
inline double orderliness_ratio(const GwdParams& p, double volume) {
  if (!(volume > 0.0)) throw DomainError("orderliness_ratio: volume must be positive");
  using ld = long double;
  const ld x = static_cast<ld>(p.k) * volume;
  const ld a = p.a;
  const ld rho = p.rho;
  const ld log_p0 = (log_gamma(rho + x) + log_gamma(rho + a)) - (log_gamma(rho) + log_gamma(rho + (a + x)));
  const ld p0 = std::exp(log_p0);
  const ld not_empty = -std::expm1(log_p0);
  if (!(not_empty > 0.0L)) {
    throw DomainError("orderliness_ratio: P(N > 0) underflows at this volume");
  }
  const ld p1 = p0 * a * x / (rho + a + x);
  return static_cast<double>((not_empty - p1) / not_empty);
}

inline std::vector<OrderlinessRow> orderliness_table(const GwdParams& p,
                                                     std::span<const double> volumes) {
  const double limit =
      1.0 - p.a / ((p.rho + p.a) * (digamma(p.rho + p.a) - digamma(p.rho)));
  std::vector<OrderlinessRow> rows;
  rows.reserve(volumes.size());
  for (double v : volumes) {
    OrderlinessRow r;
    r.volume = v;
    r.ratio = orderliness_ratio(p, v);
    const double x = p.k * v;
    r.p0 = avoidance_probability(p, v);
    r.p1 = r.p0 * p.a * x / (p.rho + p.a + x);
    const double rising_x = std::exp(log_rising(p.rho, x));
    const double rising_x1 = std::exp(log_rising(p.rho + p.a, x + 1.0));
    r.printed_atom_constant = 1.0 - rising_x * p.a * x / (rising_x1 - rising_x);
    r.small_volume_limit = limit;
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<OrderlinessRow> orderliness_table(const GwdParams& p,
                                                     const std::vector<double>& volumes) {
  return orderliness_table(p, std::span<const double>(volumes));
}

// ---------------------------------------------------------------------------
// Simulation

namespace detail {

template <typename URBG>
std::vector<std::int64_t> simulate_shapes_cox(double a, double rho, std::span<const double> shapes,
                                              URBG& rng) {
  const MixingDraw mix = draw_mixing(rng, rho, a);
  std::vector<std::int64_t> counts(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) counts[i] = sample_given_mixing(rng, mix, shapes[i]);
  return counts;
}

template <typename URBG>
std::vector<std::int64_t> simulate_shapes_conditional(double a, double rho,
                                                      std::span<const double> shapes, URBG& rng) {
  double total_shape = 0.0;
  for (double s : shapes) total_shape += s;
  GwdParams whole;
  whole.a = a;
  whole.rho = rho;
  whole.k = total_shape;
  const std::int64_t total = sample_ugwd(whole, rng);
  return conditional_allocation(total, shapes, rng);
}

template <typename URBG>
std::vector<std::int64_t> simulate_shapes(Backend backend, double a, double rho,
                                          std::span<const double> shapes, URBG& rng) {
  return backend == Backend::cox ? simulate_shapes_cox(a, rho, shapes, rng)
                                 : simulate_shapes_conditional(a, rho, shapes, rng);
}

}  // namespace detail

template <typename URBG>
CountField simulate_counts(const GwdParams& p, const QuadratGrid& grid, Backend backend, URBG& rng) {
  p.validate();
  const std::vector<double> shapes(grid.num_cells(), p.k * grid.cell_volume());
  CountField field{grid, detail::simulate_shapes(backend, p.a, p.rho, std::span<const double>(shapes), rng),
                   CountMeta{p, 0, backend, "gwp"}};
  return field;
}

template <typename URBG>
CountField simulate_counts_cox(const GwdParams& p, const QuadratGrid& grid, URBG& rng) {
  return simulate_counts(p, grid, Backend::cox, rng);
}

template <typename URBG>
CountField simulate_counts_conditional(const GwdParams& p, const QuadratGrid& grid, URBG& rng) {
  return simulate_counts(p, grid, Backend::conditional, rng);
}

/// Replicate r runs on stream (seed, r); the seed is recorded in each field.
inline std::vector<CountField> simulate_replicates(const GwdParams& p, const QuadratGrid& grid,
                                                   Backend backend, std::uint64_t seed,
                                                   std::size_t replicates) {
  std::vector<CountField> fields;
  fields.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng = make_stream(seed, r);
    fields.push_back(simulate_counts(p, grid, backend, rng));
    fields.back().meta.seed = seed;
  }
  return fields;
}

/// Counts of `pattern` on `grid` (points outside the window are ignored).
inline std::vector<std::int64_t> quadrat_counts(const PointPattern& pattern, const QuadratGrid& grid) {
  std::vector<std::int64_t> counts(grid.num_cells(), 0);
  std::array<int, kMaxDim> idx{};
  for (const auto& pt : pattern.points) {
    if (!grid.window().contains(pt)) continue;
    for (int axis = 0; axis < grid.dim(); ++axis) idx[axis] = grid.axis_cell(axis, pt[axis]);
    ++counts[grid.flat_index(std::span<const int>(idx.data(), grid.dim()))];
  }
  return counts;
}

/// Conditional-backend counts on a resolution grid, with each cell's points
/// placed uniformly inside it. Exact at the grid resolution; the continuum
/// process is approximated by refining it.
template <typename URBG>
PointPattern simulate_points(const GwdParams& p, const Window& window, std::vector<int> resolution,
                             URBG& rng) {
  const QuadratGrid grid(window, std::move(resolution));
  const CountField field = simulate_counts_conditional(p, grid, rng);
  PointPattern pattern{window, {}, std::nullopt};
  pattern.points.reserve(static_cast<std::size_t>(field.total()));
  const int d = grid.dim();
  for (std::size_t cell = 0; cell < field.counts.size(); ++cell) {
    const auto idx = grid.multi_index(cell);
    for (std::int64_t i = 0; i < field.counts[cell]; ++i) {
      std::vector<double> pt(static_cast<std::size_t>(d));
      for (int axis = 0; axis < d; ++axis) {
        const double w = grid.cell_width(axis);
        const double lo = window.lower()[axis];
        // Rounding can push a coordinate across a cell face; redraw until it lands inside.
        do {
          pt[axis] = lo + (idx[axis] + uniform_open01(rng)) * w;
        } while (grid.axis_cell(axis, pt[axis]) != idx[axis]);
      }
      pattern.points.push_back(std::move(pt));
    }
  }
  return pattern;
}

/// Sums blocks of `factors` cells per axis into a coarser aligned grid.
inline CountField merge_cells(const CountField& field, std::span<const int> factors) {
  const QuadratGrid& g = field.grid;
  if (factors.size() != static_cast<std::size_t>(g.dim())) throw DimensionError("merge_cells: factors");
  std::vector<int> coarse(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i] < 1 || g.cells_per_axis()[i] % factors[i] != 0) {
      throw DomainError("merge_cells: factors must divide the cell counts");
    }
    coarse[i] = g.cells_per_axis()[i] / factors[i];
  }
  QuadratGrid cg(g.window(), coarse);
  std::vector<std::int64_t> counts(cg.num_cells(), 0);
  for (std::size_t cell = 0; cell < field.counts.size(); ++cell) {
    auto idx = g.multi_index(cell);
    for (int axis = 0; axis < g.dim(); ++axis) idx[axis] /= factors[axis];
    counts[cg.flat_index(std::span<const int>(idx.data(), g.dim()))] += field.counts[cell];
  }
  return CountField{cg, std::move(counts), field.meta};
}

inline CountField merge_cells(const CountField& field, const std::vector<int>& factors) {
  return merge_cells(field, std::span<const int>(factors));
}

// ---------------------------------------------------------------------------
// Summaries and diagnostics

struct EmpiricalSummary {
  double cell_volume = 0.0;
  std::size_t replicates = 0;
  std::size_t observations = 0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  double index_of_dispersion = 0.0;
  double index_of_dispersion_se = 0.0;
};

/// Pooled per-cell moments over an ensemble of fields on one grid. Cells of a
/// field are dependent, so standard errors come from the spread of the
/// per-field contributions.
inline EmpiricalSummary empirical_summary(std::span<const CountField> fields) {
  if (fields.empty()) throw DomainError("empirical_summary: no fields");
  const QuadratGrid& grid = fields.front().grid;
  for (const auto& f : fields) {
    if (f.grid.cells_per_axis() != grid.cells_per_axis() || f.grid.cell_volume() != grid.cell_volume()) {
      throw HeterogeneityError("empirical_summary: fields live on different grids");
    }
  }
  const std::size_t r = fields.size();
  const std::size_t cells = grid.num_cells();
  EmpiricalSummary s;
  s.cell_volume = grid.cell_volume();
  s.replicates = r;
  s.observations = r * cells;

  std::vector<double> field_means(r);
  CompensatedSum grand;
  for (std::size_t i = 0; i < r; ++i) {
    CompensatedSum m;
    for (auto c : fields[i].counts) m += static_cast<double>(c);
    field_means[i] = m.value() / static_cast<double>(cells);
    grand += field_means[i];
  }
  s.mean = grand.value() / static_cast<double>(r);

  std::vector<double> field_sq(r);
  CompensatedSum sq;
  for (std::size_t i = 0; i < r; ++i) {
    CompensatedSum m;
    for (auto c : fields[i].counts) {
      const double d = static_cast<double>(c) - s.mean;
      m += d * d;
    }
    field_sq[i] = m.value() / static_cast<double>(cells);
    sq += field_sq[i];
  }
  const double n = static_cast<double>(s.observations);
  s.variance = n > 1.0 ? sq.value() / static_cast<double>(r) * n / (n - 1.0) : 0.0;

  auto spread = [r](const std::vector<double>& v) {
    if (r < 2) return std::numeric_limits<double>::quiet_NaN();
    CompensatedSum m;
    for (double x : v) m += x;
    const double mean = m.value() / static_cast<double>(r);
    CompensatedSum ss;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss.value() / static_cast<double>(r - 1) / static_cast<double>(r));
  };
  s.mean_se = spread(field_means);
  s.variance_se = spread(field_sq) * (n > 1.0 ? n / (n - 1.0) : 1.0);
  if (s.mean > 0.0) {
    s.index_of_dispersion = s.variance / s.mean;
    const double rel_v = s.variance > 0.0 ? s.variance_se / s.variance : 0.0;
    const double rel_m = s.mean_se / s.mean;
    s.index_of_dispersion_se = s.index_of_dispersion * std::sqrt(rel_v * rel_v + rel_m * rel_m);
  } else {
    s.index_of_dispersion = std::numeric_limits<double>::quiet_NaN();
    s.index_of_dispersion_se = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

inline EmpiricalSummary empirical_summary(const std::vector<CountField>& fields) {
  return empirical_summary(std::span<const CountField>(fields));
}

struct ErgodicityRow {
  double volume = 0.0;
  double mean = 0.0;      // mean over replicates of N(W)/volume
  double variance = 0.0;  // across-replicate variance of N(W)/volume
  double mean_se = 0.0;
  double ensemble_intensity = 0.0;  // a k / (rho - 1)
  double theory_variance = 0.0;     // Var N(W) / volume^2, NaN when rho <= 2
  double poisson_mean = 0.0;        // calibration: Poisson with the same intensity
  double poisson_variance = 0.0;
  double poisson_theory_variance = 0.0;  // intensity / volume
};

/// Spatial averages N(W)/mu(W) over independent windows of growing volume,
/// next to a homogeneous Poisson process with the same intensity. Replicate r
/// of volume i uses stream (seed, i * replicates + r); the Poisson column
/// uses the same indices under splitmix64(seed).
inline std::vector<ErgodicityRow> ergodicity_diagnostic(const GwdParams& p,
                                                        std::span<const double> window_volumes,
                                                        std::size_t replicates, std::uint64_t seed) {
  if (replicates < 100) throw DomainError("ergodicity_diagnostic: need at least 100 replicates");
  for (std::size_t i = 0; i < window_volumes.size(); ++i) {
    if (!(window_volumes[i] > 0.0) || (i > 0 && !(window_volumes[i] > window_volumes[i - 1]))) {
      throw DomainError("ergodicity_diagnostic: volumes must be positive and increasing");
    }
  }
  const double intensity = intensity_rate(p);
  const std::uint64_t poisson_seed = splitmix64(seed);
  std::vector<ErgodicityRow> rows;
  for (std::size_t vi = 0; vi < window_volumes.size(); ++vi) {
    const double vol = window_volumes[vi];
    const GwdParams whole = p.with_shape(p.k * vol);
    CompensatedSum s1, s2, q1, q2;
    std::vector<double> avg(replicates), pavg(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
      const std::uint64_t stream = vi * replicates + r;
      Rng rng = make_stream(seed, stream);
      avg[r] = static_cast<double>(sample_ugwd(whole, rng)) / vol;
      Rng prng = make_stream(poisson_seed, stream);
      pavg[r] = static_cast<double>(poisson_variate(prng, intensity * vol)) / vol;
      s1 += avg[r];
      q1 += pavg[r];
    }
    const double nr = static_cast<double>(replicates);
    ErgodicityRow row;
    row.volume = vol;
    row.mean = s1.value() / nr;
    row.poisson_mean = q1.value() / nr;
    for (std::size_t r = 0; r < replicates; ++r) {
      s2 += (avg[r] - row.mean) * (avg[r] - row.mean);
      q2 += (pavg[r] - row.poisson_mean) * (pavg[r] - row.poisson_mean);
    }
    row.variance = s2.value() / (nr - 1.0);
    row.poisson_variance = q2.value() / (nr - 1.0);
    row.mean_se = std::sqrt(row.variance / nr);
    row.ensemble_intensity = intensity;
    row.theory_variance = p.rho > 2.0 ? ugwd_variance(whole) / (vol * vol)
                                      : std::numeric_limits<double>::quiet_NaN();
    row.poisson_theory_variance = intensity / vol;
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<ErgodicityRow> ergodicity_diagnostic(const GwdParams& p,
                                                        const std::vector<double>& window_volumes,
                                                        std::size_t replicates, std::uint64_t seed) {
  return ergodicity_diagnostic(p, std::span<const double>(window_volumes), replicates, seed);
}

}  // namespace gwp
