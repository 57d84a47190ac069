#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/kde.hpp"
#include "gmmgrid/l2.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/parallel.hpp"

namespace gmmgrid {

enum class SearchMode { faithful, refine };

inline std::string to_string(SearchMode m) { return m == SearchMode::faithful ? "faithful" : "refine"; }

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "faithful") return SearchMode::faithful;
  if (s == "refine") return SearchMode::refine;
  throw Error("unknown search mode '" + s + "' (expected faithful|refine)");
}

/// Candidate parameter vector: k means in R^dim and k mixing weights.
struct Theta {
  std::vector<Vector> means;
  std::vector<double> weights;
};

/// Lattice over means x weights. Each of the k*dim mean coordinates has its
/// own node list (component-major), each of the k-1 free weights likewise; the
/// last weight is 1 - sum(others). Weight points outside [alpha_min, 1] are
/// dropped.
struct ParameterGrid {
  int k = 1;
  int dim = 1;
  std::vector<std::vector<double>> mean_axes;
  std::vector<std::vector<double>> weight_axes;
  double mean_step = 0.1;
  double weight_step = 0.1;
  double mean_half_width = 1.0;
  double weight_half_width = 0.5;
  double alpha_min = 0.0;
  SearchMode mode = SearchMode::refine;
  int rounds = 3;
  std::size_t budget = 100'000'000;

  /// Nodes lo + i*step, i = 0, 1, ... while <= hi (with a small tolerance).
  static std::vector<double> lattice(double lo, double hi, double step) {
    detail::require(step > 0.0, "grid step must be positive");
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> nodes;
    for (long long i = 0; i < std::max(count, 1LL); ++i) nodes.push_back(lo + static_cast<double>(i) * step);
    return nodes;
  }

  /// Nodes center + j*step for |j*step| <= half_width.
  static std::vector<double> centered(double center, double half_width, double step) {
    detail::require(step > 0.0, "grid step must be positive");
    const auto reach = static_cast<long long>(std::floor(half_width / step + 1e-9));
    std::vector<double> nodes;
    for (long long j = -reach; j <= reach; ++j) nodes.push_back(center + static_cast<double>(j) * step);
    return nodes;
  }

  double weight_lo() const { return std::max(alpha_min, 0.0); }
  double weight_hi() const { return 1.0 - (k - 1) * alpha_min; }

  /// Every mean coordinate in [-half_width, half_width] on a lattice anchored
  /// at -half_width; free weights on multiples of weight_step.
  static ParameterGrid box(int k, int dim, double half_width, double step, double weight_step, double alpha_min,
                           SearchMode mode = SearchMode::refine, int rounds = 3, std::size_t budget = 100'000'000) {
    detail::require(k >= 1 && dim >= 1, "ParameterGrid: k and dim must be positive");
    detail::require(half_width > 0.0, "ParameterGrid: half width must be positive");
    detail::require(alpha_min >= 0.0 && alpha_min * k <= 1.0 + 1e-12, "ParameterGrid: need 0 <= alpha_min*k <= 1");
    ParameterGrid g;
    g.k = k;
    g.dim = dim;
    g.mean_step = step;
    g.weight_step = weight_step;
    g.mean_half_width = half_width;
    g.alpha_min = alpha_min;
    g.mode = mode;
    g.rounds = rounds;
    g.budget = budget;
    g.mean_axes.assign(static_cast<std::size_t>(k * dim), lattice(-half_width, half_width, step));
    const double lo = g.weight_lo(), hi = g.weight_hi();
    g.weight_half_width = 0.5 * (hi - lo);
    std::vector<double> w;
    const auto first = std::max<long long>(1, static_cast<long long>(std::ceil(lo / weight_step - 1e-9)));
    for (long long j = first; static_cast<double>(j) * weight_step <= hi + 1e-9; ++j)
      w.push_back(static_cast<double>(j) * weight_step);
    g.weight_axes.assign(static_cast<std::size_t>(k - 1), w);
    return g;
  }

  /// Grid of the next refinement round: box shrunk by `shrink` around the
  /// incumbent, steps divided by `step_div`.
  ParameterGrid refined_around(const Theta& incumbent, double shrink = 4.0, double step_div = 2.0) const {
    ParameterGrid g = *this;
    g.mean_half_width = mean_half_width / shrink;
    g.weight_half_width = weight_half_width / shrink;
    g.mean_step = mean_step / step_div;
    g.weight_step = weight_step / step_div;
    for (int c = 0; c < k; ++c)
      for (int d = 0; d < dim; ++d)
        g.mean_axes[static_cast<std::size_t>(c * dim + d)] =
            centered(incumbent.means[static_cast<std::size_t>(c)](d), g.mean_half_width, g.mean_step);
    const double lo = weight_lo(), hi = weight_hi();
    for (int c = 0; c + 1 < k; ++c) {
      std::vector<double> w;
      for (double x : centered(incumbent.weights[static_cast<std::size_t>(c)], g.weight_half_width, g.weight_step))
        if (x >= lo - 1e-12 && x <= hi + 1e-12 && x > 0.0) w.push_back(x);
      g.weight_axes[static_cast<std::size_t>(c)] = w;
    }
    return g;
  }

  /// Valid weight vectors in lexicographic order of the free weights.
  std::vector<std::vector<double>> weight_points() const {
    std::vector<std::vector<double>> out;
    if (k == 1) {
      out.push_back({1.0});
      return out;
    }
    std::vector<std::size_t> idx(weight_axes.size(), 0);
    for (const auto& a : weight_axes)
      if (a.empty()) return out;
    while (true) {
      std::vector<double> w;
      double sum = 0.0;
      for (std::size_t a = 0; a < idx.size(); ++a) {
        w.push_back(weight_axes[a][idx[a]]);
        sum += w.back();
      }
      const double last = 1.0 - sum;
      const bool ok = last > 1e-12 && last >= alpha_min - 1e-12 &&
                      std::all_of(w.begin(), w.end(), [&](double x) { return x > 0.0 && x >= alpha_min - 1e-12; });
      if (ok) {
        w.push_back(last);
        out.push_back(std::move(w));
      }
      std::size_t a = idx.size();
      while (a > 0) {
        --a;
        if (++idx[a] < weight_axes[a].size()) break;
        idx[a] = 0;
        if (a == 0) return out;
      }
    }
  }

  /// Number of mean nodes of component c (product of its dim axis sizes).
  std::size_t component_nodes(int c) const {
    std::size_t n = 1;
    for (int d = 0; d < dim; ++d) n *= mean_axes[static_cast<std::size_t>(c * dim + d)].size();
    return n;
  }

  double mean_point_count() const {
    double n = 1.0;
    for (const auto& a : mean_axes) n *= static_cast<double>(a.size());
    return n;
  }

  double size() const { return mean_point_count() * static_cast<double>(weight_points().size()); }
};

/// Raises if the grid holds more points than its budget.
inline void check_budget(const ParameterGrid& grid) {
  const double n = grid.size();
  if (n > static_cast<double>(grid.budget))
    throw Error("grid has " + std::to_string(static_cast<long double>(n)) + " points, over the budget of " +
                std::to_string(grid.budget) + "; use --mode refine with a coarser --grid-step or raise --budget");
}

/// Visits every grid point in lexicographic order: component 0's coordinates,
/// ..., component k-1's, then the free weights. Stops early if fn returns false.
inline void enumerate_grid(const ParameterGrid& grid,
                           const std::function<bool(std::size_t index, const Theta&)>& fn) {
  check_budget(grid);
  const auto wpts = grid.weight_points();
  if (wpts.empty() || grid.mean_point_count() == 0) return;
  const std::size_t naxes = grid.mean_axes.size();
  std::vector<std::size_t> idx(naxes, 0);
  Theta t;
  t.means.assign(static_cast<std::size_t>(grid.k), Vector(grid.dim));
  std::size_t index = 0;
  while (true) {
    for (std::size_t a = 0; a < naxes; ++a)
      t.means[a / static_cast<std::size_t>(grid.dim)](static_cast<Eigen::Index>(a % static_cast<std::size_t>(grid.dim))) =
          grid.mean_axes[a][idx[a]];
    for (const auto& w : wpts) {
      t.weights = w;
      if (!fn(index++, t)) return;
    }
    std::size_t a = naxes;
    while (a > 0) {
      --a;
      if (++idx[a] < grid.mean_axes[a].size()) break;
      idx[a] = 0;
      if (a == 0) return;
    }
  }
}

struct TheoreticalGrid {
  double value;
  double log10_value;
  bool underflow;
};

/// G = alpha_min^(4k) / k^(3/2) * (eps / (8 n k^2))^(c1 k^2), evaluated in log
/// space. c1 is unknown in theory and supplied by the caller.
inline TheoreticalGrid theoretical_grid_size(int n, int k, double eps, double alpha_min, double c1 = 1.0) {
  detail::require(n >= 1 && k >= 1 && eps > 0.0 && alpha_min > 0.0 && c1 > 0.0,
                  "theoretical_grid_size: all inputs must be positive");
  const double kk = k;
  const double ln = 4.0 * kk * std::log(alpha_min) - 1.5 * std::log(kk) +
                    c1 * kk * kk * std::log(eps / (8.0 * n * kk * kk));
  const double value = std::exp(ln);
  const bool underflow = !(value >= std::numeric_limits<double>::min());
  if (underflow)
    std::clog << "warning: theoretical grid size underflows double precision (log10 G = " << ln / std::log(10.0)
              << ")\n";
  return {value, ln / std::log(10.0), underflow};
}

struct SearchOptions {
  /// Compare the KDE against the candidate convolved with the kernel, i.e.
  /// candidate components of width sqrt(sigma^2 + h^2). E[p_kde] equals the
  /// true density convolved with the kernel, so this removes the bandwidth
  /// bias from the argmin. Off gives the plain ||p(theta) - p_kde|| objective.
  bool bandwidth_compensation = true;
  unsigned workers = 0;  // 0: worker_count()
  bool trace = false;
  std::size_t trace_limit = 100'000;
  /// ||p_kde||^2 is O(N^2); it is computed when N is at most this, else the
  /// reported objective omits that constant.
  std::size_t exact_self_norm_limit = 20'000;
  std::optional<double> kde_self_norm;  // precomputed, overrides the above
};

struct TraceEntry {
  int round;
  std::size_t index;
  Theta theta;
  double objective;
};

struct RoundSummary {
  double mean_step;
  double weight_step;
  std::size_t points;
  double reduced_objective;
};

struct SearchResult {
  Theta theta_star;
  double objective = 0.0;            // ||q(theta*) - p_kde||^2 when kde_self_norm is known
  double reduced_objective = 0.0;    // same minus ||p_kde||^2
  std::optional<double> kde_self_norm;
  std::size_t evaluations = 0;
  double sigma = 0.0;
  double effective_sigma = 0.0;      // component width actually compared
  double bandwidth = 0.0;
  std::vector<RoundSummary> rounds;
  std::vector<TraceEntry> trace;

  bool objective_is_complete() const { return kde_self_norm.has_value(); }
};

/// Candidate mixture that the objective compares against p_kde.
inline SignedMixture candidate_mixture(const Theta& theta, double effective_sigma) {
  SignedMixture m(static_cast<int>(theta.means.front().size()));
  for (std::size_t i = 0; i < theta.means.size(); ++i) m.add(theta.weights[i], theta.means[i], effective_sigma);
  return m;
}

namespace detail {

// Cross term <N(node, s^2 I), p_kde> tabulated on one component's node lattice.
// The Gaussian factorizes over axes, so each sample contributes an outer
// product of per-axis exponentials. Work is split over first-axis nodes, which
// keeps every table entry's summation order fixed.
struct CrossTable {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;     // row-major over axes
  std::vector<double> coords;     // node coordinates, dim per node
};

inline CrossTable tabulate_cross(const std::vector<std::vector<double>>& axes, const KdeEstimate& kde,
                                 double cross_var, unsigned workers) {
  const int dim = static_cast<int>(axes.size());
  CrossTable t;
  t.axes = axes;
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  t.values.assign(total, 0.0);
  t.coords.resize(total * static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rem = n;
    for (int d = dim - 1; d >= 0; --d) {
      const auto& ax = axes[static_cast<std::size_t>(d)];
      t.coords[n * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)] = ax[rem % ax.size()];
      rem /= ax.size();
    }
  }
  const std::size_t first = axes[0].size();
  const std::size_t inner = total / first;
  const auto& X = kde.mixture.means();
  const auto N = X.rows();
  const double inv2v = 1.0 / (2.0 * cross_var);

  parallel_chunks(first, workers, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<std::vector<double>> ex(static_cast<std::size_t>(dim));
    std::vector<double> buf(inner), tmp(inner);
    for (Eigen::Index s = 0; s < N; ++s) {
      for (int d = 1; d < dim; ++d) {
        const auto& ax = axes[static_cast<std::size_t>(d)];
        auto& e_d = ex[static_cast<std::size_t>(d)];
        e_d.resize(ax.size());
        const double x = X(s, d);
        for (std::size_t p = 0; p < ax.size(); ++p) e_d[p] = std::exp(-(ax[p] - x) * (ax[p] - x) * inv2v);
      }
      // outer product of axes 1..dim-1
      std::size_t len = 1;
      buf[0] = 1.0;
      for (int d = 1; d < dim; ++d) {
        const auto& e_d = ex[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < len; ++i)
          for (std::size_t j = 0; j < e_d.size(); ++j) tmp[i * e_d.size() + j] = buf[i] * e_d[j];
        len *= e_d.size();
        std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len), buf.begin());
      }
      const double x0 = X(s, 0);
      for (std::size_t p = b; p < e; ++p) {
        const double e0 = std::exp(-(axes[0][p] - x0) * (axes[0][p] - x0) * inv2v);
        if (e0 == 0.0) continue;
        double* row = t.values.data() + p * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] += e0 * buf[i];
      }
    }
  });
  const double scale = std::pow(2.0 * kPi * cross_var, -0.5 * dim) / static_cast<double>(N);
  for (double& v : t.values) v *= scale;
  return t;
}

struct RoundOutcome {
  Theta best;
  double reduced = std::numeric_limits<double>::infinity();
  std::size_t points = 0;
  std::vector<TraceEntry> trace;
};

inline RoundOutcome search_round(const ParameterGrid& grid, const KdeEstimate& kde, double s_eff, unsigned workers,
                                 int round, const SearchOptions& opts) {
  check_budget(grid);
  const int k = grid.k, dim = grid.dim;
  detail::require(dim == kde.dim(), "search: grid dimension does not match the KDE");
  const auto wpts = grid.weight_points();
  if (wpts.empty() || grid.mean_point_count() == 0) throw Error("search: the parameter grid is empty");

  // One cross table per distinct component lattice.
  const double h = kde.bandwidth;
  const double cross_var = s_eff * s_eff + h * h;
  std::vector<CrossTable> tables;
  std::vector<std::size_t> table_of(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::vector<std::vector<double>> axes(grid.mean_axes.begin() + c * dim, grid.mean_axes.begin() + (c + 1) * dim);
    std::size_t found = tables.size();
    for (std::size_t t = 0; t < tables.size(); ++t)
      if (tables[t].axes == axes) found = t;
    if (found == tables.size()) tables.push_back(tabulate_cross(axes, kde, cross_var, workers));
    table_of[static_cast<std::size_t>(c)] = found;
  }
  std::vector<std::size_t> comp_nodes(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) comp_nodes[static_cast<std::size_t>(c)] = grid.component_nodes(c);
  std::size_t mean_combos = 1;
  for (auto n : comp_nodes) mean_combos *= n;

  const double self_diag = std::pow(4.0 * kPi * s_eff * s_eff, -0.5 * dim);
  const double inv4s2 = 1.0 / (4.0 * s_eff * s_eff);
  const std::size_t W = wpts.size();

  struct Partial {
    double best = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    std::vector<TraceEntry> trace;
  };
  const unsigned nchunks = std::max(1u, workers);
  std::vector<Partial> partials(nchunks);

  auto theta_at = [&](const std::vector<std::size_t>& node, const std::vector<double>& w) {
    Theta t;
    for (int c = 0; c < k; ++c) {
      const auto& tab = tables[table_of[static_cast<std::size_t>(c)]];
      Vector m(dim);
      for (int d = 0; d < dim; ++d)
        m(d) = tab.coords[node[static_cast<std::size_t>(c)] * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
      t.means.push_back(m);
    }
    t.weights = w;
    return t;
  };

  parallel_chunks(mean_combos, nchunks, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    Partial& part = partials[chunk];
    std::vector<std::size_t> node(static_cast<std::size_t>(k));
    std::vector<const double*> mu(static_cast<std::size_t>(k));
    std::vector<double> cross(static_cast<std::size_t>(k));
    std::vector<double> pair(static_cast<std::size_t>(k * k));
    for (std::size_t mi = b; mi < e; ++mi) {
      std::size_t rem = mi;
      for (int c = k - 1; c >= 0; --c) {
        const auto cc = static_cast<std::size_t>(c);
        node[cc] = rem % comp_nodes[cc];
        rem /= comp_nodes[cc];
        const auto& tab = tables[table_of[cc]];
        mu[cc] = tab.coords.data() + node[cc] * static_cast<std::size_t>(dim);
        cross[cc] = tab.values[node[cc]];
      }
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
          double d2 = 0.0;
          for (int d = 0; d < dim; ++d) {
            const double diff = mu[static_cast<std::size_t>(i)][d] - mu[static_cast<std::size_t>(j)][d];
            d2 += diff * diff;
          }
          pair[static_cast<std::size_t>(i * k + j)] = self_diag * std::exp(-d2 * inv4s2);
        }
      for (std::size_t wi = 0; wi < W; ++wi) {
        const auto& w = wpts[wi];
        double quad = 0.0, lin = 0.0;
        for (int i = 0; i < k; ++i) {
          const double a = w[static_cast<std::size_t>(i)];
          quad += a * a * self_diag;
          for (int j = i + 1; j < k; ++j) quad += 2.0 * a * w[static_cast<std::size_t>(j)] * pair[static_cast<std::size_t>(i * k + j)];
          lin += a * cross[static_cast<std::size_t>(i)];
        }
        const double J = quad - 2.0 * lin;
        const std::size_t index = mi * W + wi;
        if (J < part.best) {
          part.best = J;
          part.index = index;
        }
        if (opts.trace && part.trace.size() < opts.trace_limit)
          part.trace.push_back({round, index, theta_at(node, w), J});
      }
    }
  });

  RoundOutcome out;
  std::size_t best_index = 0;
  for (auto& p : partials) {
    if (p.best < out.reduced || (p.best == out.reduced && p.index < best_index)) {
      out.reduced = p.best;
      best_index = p.index;
    }
    for (auto& te : p.trace)
      if (out.trace.size() < opts.trace_limit) out.trace.push_back(std::move(te));
  }
  out.points = mean_combos * W;
  std::vector<std::size_t> node(static_cast<std::size_t>(k));
  std::size_t rem = best_index / W;
  for (int c = k - 1; c >= 0; --c) {
    node[static_cast<std::size_t>(c)] = rem % comp_nodes[static_cast<std::size_t>(c)];
    rem /= comp_nodes[static_cast<std::size_t>(c)];
  }
  out.best = theta_at(node, wpts[best_index % W]);
  return out;
}

}  // namespace detail

/// argmin over the grid of ||q(theta) - p_kde||^2, where q(theta) has
/// component width sigma (or sqrt(sigma^2 + h^2) with bandwidth
/// compensation). Ties go to the smallest lexicographic grid index. Refine
/// mode runs grid.rounds rounds, each re-centred on the incumbent with the box
/// shrunk 4x and the step halved.
inline SearchResult search(const KdeEstimate& kde, const ParameterGrid& grid, double sigma,
                           const SearchOptions& opts = {}) {
  detail::require(sigma > 0.0 && std::isfinite(sigma), "search: sigma must be positive");
  detail::require(grid.rounds >= 1, "search: need at least one round");
  const unsigned workers = opts.workers ? opts.workers : worker_count();
  const double h = kde.bandwidth;
  const double s_eff = opts.bandwidth_compensation ? std::sqrt(sigma * sigma + h * h) : sigma;

  SearchResult res;
  res.sigma = sigma;
  res.effective_sigma = s_eff;
  res.bandwidth = h;

  ParameterGrid current = grid;
  const int rounds = grid.mode == SearchMode::refine ? grid.rounds : 1;
  for (int r = 0; r < rounds; ++r) {
    if (r > 0) current = current.refined_around(res.theta_star);
    auto outcome = detail::search_round(current, kde, s_eff, workers, r, opts);
    res.evaluations += outcome.points;
    res.rounds.push_back({current.mean_step, current.weight_step, outcome.points, outcome.reduced});
    res.theta_star = std::move(outcome.best);
    res.reduced_objective = outcome.reduced;
    for (auto& te : outcome.trace)
      if (res.trace.size() < opts.trace_limit) res.trace.push_back(std::move(te));
  }

  if (opts.kde_self_norm)
    res.kde_self_norm = opts.kde_self_norm;
  else if (static_cast<std::size_t>(kde.size()) <= opts.exact_self_norm_limit)
    res.kde_self_norm = kde_self_norm_sq(kde, workers);
  res.objective = res.reduced_objective + res.kde_self_norm.value_or(0.0);
  if (res.kde_self_norm) res.objective = std::max(0.0, res.objective);
  return res;
}

}  // namespace gmmgrid
