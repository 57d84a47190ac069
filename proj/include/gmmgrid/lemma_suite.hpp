#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gmmgrid/mixture.hpp"
#include "gmmgrid/parallel.hpp"
#include "gmmgrid/rng.hpp"
#include "gmmgrid/theory.hpp"

namespace gmmgrid {

struct SweepSizes {
  std::size_t minor_det = 500;
  std::size_t norm_bound = 200;
  std::size_t direction = 100;
  std::size_t parseval = 100;
  std::size_t positivity = 200;
  std::size_t projection = 200;
  std::size_t perturbation = 200;

  static SweepSizes uniform(std::size_t n) { return {n, n, n, n, n, n, n}; }
};

/// Outcome of one randomized sweep: how many instances violated the property
/// and the worst observed margin (smaller is worse; negative means violated).
struct SweepOutcome {
  std::string name;
  std::size_t instances = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  nlohmann::json worst_instance;
  nlohmann::json extra = nlohmann::json::object();

  bool pass() const { return violations == 0; }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"pass", pass()}, {"instances", instances}, {"violations", violations},
                        {"worst_margin", worst_margin}, {"worst_instance", worst_instance}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }
};

namespace detail {

struct InstanceResult {
  double margin = 0.0;
  bool ok = true;
  nlohmann::json description;
};

// Evaluates `fn(rng)` for instances 0..n-1, each with its own derived seed, and
// folds the results in index order.
template <typename Fn>
SweepOutcome run_sweep(const std::string& name, std::size_t n, std::uint64_t seed, unsigned workers, Fn&& fn) {
  std::vector<InstanceResult> results(n);
  parallel_chunks(n, workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(derive_seed(seed, name + "/" + std::to_string(i)));
      results[i] = fn(rng);
    }
  });
  SweepOutcome out;
  out.name = name;
  out.instances = n;
  for (auto& r : results) {
    if (!r.ok) ++out.violations;
    if (r.margin < out.worst_margin) {
      out.worst_margin = r.margin;
      out.worst_instance = std::move(r.description);
    }
  }
  if (n == 0) out.worst_margin = 0.0;
  return out;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(std::min<double>(rng.uniform01() * (hi - lo + 1), hi - lo));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

inline SweepOutcome sweep_minor_det(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  return detail::run_sweep("vandermonde_minor_det", n, seed, workers, [](Rng& rng) {
    const int size = detail::uniform_int(rng, 1, 6);
    std::vector<double> x;
    for (int i = 0; i < size; ++i) x.push_back(rng.uniform(-2.0, 2.0));
    const int row = detail::uniform_int(rng, 1, size + 1);
    const auto r = vandermonde_minor_det(x, row);
    const double err = r.relative_error();
    return detail::InstanceResult{1e-9 - err, err <= 1e-9,
                                  {{"nodes", x}, {"removed_row", row}, {"det", r.det}, {"predicted", r.predicted},
                                   {"relative_error", err}}};
  });
}

inline SweepOutcome sweep_norm_bound(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  return detail::run_sweep("vandermonde_norm_bound", n, seed, workers, [](Rng& rng) {
    const int k = detail::uniform_int(rng, 1, 5);
    const double a = rng.uniform(0.5, 3.0);
    const double alpha_min = rng.uniform(0.05, 0.5);
    std::vector<double> x, w;
    for (int i = 0; i < k; ++i) {
      x.push_back(rng.uniform(-a, a));
      w.push_back((rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(alpha_min, 1.0));
    }
    const auto inst = VandermondeInstance::make(x, a, detail::uniform_int(rng, 0, k - 1), w, alpha_min);
    const auto r = vandermonde_norm_bound(inst);
    // margin as log ratio of the tightest admissible norm to the bound
    const double margin = std::log(std::min(r.actual, r.worst_case) / r.bound);
    return detail::InstanceResult{margin, r.holds(),
                                  {{"nodes", x}, {"a", a}, {"t", inst.t}, {"weights", w}, {"alpha_min", alpha_min},
                                   {"actual", r.actual}, {"worst_case", r.worst_case}, {"bound", r.bound}}};
  });
}

inline SweepOutcome sweep_direction(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  auto out = detail::run_sweep("find_separating_direction", n, seed, workers, [](Rng& rng) {
    const int k = detail::uniform_int(rng, 2, 5);
    const int dim = detail::uniform_int(rng, 1, 10);
    std::vector<Vector> pts;
    for (int i = 0; i < k; ++i) {
      Vector p(dim);
      for (int d = 0; d < dim; ++d) p(d) = rng.normal();
      pts.push_back(p);
    }
    const auto r = find_separating_direction(pts, rng.next_u64());
    return detail::InstanceResult{r.achieved - r.target, r.found,
                                  {{"k", k}, {"dim", dim}, {"draws", r.draws}, {"achieved", r.achieved},
                                   {"target", r.target}}};
  });
  return out;
}

inline SignedMixture random_signed_mixture_1d(Rng& rng, int components, double sigma, double mean_range = 3.0) {
  SignedMixture q(1);
  for (int i = 0; i < components; ++i) {
    Vector mu(1);
    mu(0) = rng.uniform(-mean_range, mean_range);
    q.add(rng.uniform(-1.0, 1.0), mu, sigma);
  }
  return q;
}

inline SweepOutcome sweep_parseval(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  return detail::run_sweep("fourier_norm_check", n, seed, workers, [](Rng& rng) {
    const int m = detail::uniform_int(rng, 1, 6);
    const double sigma = rng.uniform(0.2, 2.0);
    const auto q = random_signed_mixture_1d(rng, m, sigma);
    const auto r = fourier_norm_check(q);
    const double err = r.relative_error();
    return detail::InstanceResult{1e-6 - err, err <= 1e-6,
                                  {{"components", m}, {"sigma", sigma}, {"spatial", r.spatial},
                                   {"fourier", r.fourier}, {"relative_error", err}}};
  });
}

inline SweepOutcome sweep_positivity(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  return detail::run_sweep("lower_bound_positivity", n, seed, workers, [](Rng& rng) {
    const int m = detail::uniform_int(rng, 1, 6);
    const double sigma = rng.uniform(0.2, 2.0);
    const double alpha_min = rng.uniform(0.05, 0.5);
    std::vector<double> mus;
    while (static_cast<int>(mus.size()) < m) {
      const double c = rng.uniform(-3.0, 3.0);
      if (std::all_of(mus.begin(), mus.end(), [&](double u) { return std::abs(u - c) >= 0.05; })) mus.push_back(c);
    }
    SignedMixture q(1);
    for (double mu : mus)
      q.add((rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(alpha_min, 1.0), Vector::Constant(1, mu), sigma);
    const double norm = l2_norm_sq(q);
    return detail::InstanceResult{std::log10(std::max(norm, 1e-320)) + 300.0, norm > 1e-300,
                                  {{"means", mus}, {"weights", detail::to_std(q.weights())}, {"sigma", sigma},
                                   {"norm_sq", norm}}};
  });
}

inline SweepOutcome sweep_projection(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  return detail::run_sweep("norm_projection_bound", n, seed, workers, [](Rng& rng) {
    const int dim = detail::uniform_int(rng, 2, 4);
    const int m = detail::uniform_int(rng, 1, 5);
    SignedMixture f(dim);
    for (int i = 0; i < m; ++i) {
      Vector mu(dim);
      for (int d = 0; d < dim; ++d) mu(d) = rng.uniform(-1.0, 1.0);
      f.add(rng.uniform(-1.0, 1.0), mu, rng.uniform(0.1, 1.0));
    }
    Vector v(dim);
    for (int d = 0; d < dim; ++d) v(d) = rng.normal();
    v.normalize();
    const auto r = norm_projection_check(f, v);
    const double margin = r.full > 0.0 ? std::log(r.factor * r.full / std::max(r.projected, 1e-300)) : 0.0;
    return detail::InstanceResult{margin, r.holds(),
                                  {{"dim", dim}, {"components", m}, {"projected", r.projected}, {"full", r.full},
                                   {"L", r.L}, {"factor", r.factor}}};
  });
}

inline SweepOutcome sweep_perturbation(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  auto out = detail::run_sweep("perturbation_upper_bound", n, seed, workers, [](Rng& rng) {
    const int dim = detail::uniform_int(rng, 1, 3);
    const int k = detail::uniform_int(rng, 1, 4);
    const double sigma = rng.uniform(0.1, 0.5);
    auto simplex = [&] {
      std::vector<double> w(static_cast<std::size_t>(k));
      double s = 0.0;
      for (auto& x : w) s += (x = -std::log(1.0 - rng.uniform01()) + 1e-3);
      for (auto& x : w) x /= s;
      return w;
    };
    std::vector<Vector> mu, mu2;
    for (int i = 0; i < k; ++i) {
      Vector a(dim), b(dim);
      for (int d = 0; d < dim; ++d) a(d) = rng.uniform(-1.0, 1.0);
      for (int d = 0; d < dim; ++d) b(d) = rng.normal();
      mu.push_back(a);
      mu2.push_back(a + rng.uniform(0.0, 0.2) * b.normalized());
    }
    const SphericalMixture p(mu, simplex(), sigma), q(mu2, simplex(), sigma);
    const auto r = perturbation_bound(p, q);
    return detail::InstanceResult{std::log(r.bound / std::max(r.distance, 1e-300)), r.holds(),
                                  {{"dim", dim}, {"k", k}, {"sigma", sigma}, {"distance", r.distance},
                                   {"bound", r.bound}}};
  });
  out.extra["sigma_range"] = {0.1, 0.5};
  return out;
}

/// Runs every sweep plus the fixed lower-bound probe and returns the report
/// written by `verify-lemmas`.
inline nlohmann::json verify_lemmas(const SweepSizes& sizes, std::uint64_t seed, unsigned workers = 1) {
  std::vector<SweepOutcome> sweeps{
      sweep_minor_det(sizes.minor_det, seed, workers),   sweep_norm_bound(sizes.norm_bound, seed, workers),
      sweep_direction(sizes.direction, seed, workers),   sweep_parseval(sizes.parseval, seed, workers),
      sweep_positivity(sizes.positivity, seed, workers), sweep_projection(sizes.projection, seed, workers),
      sweep_perturbation(sizes.perturbation, seed, workers)};
  nlohmann::json report = {{"schema", "gmmgrid/1"}, {"seed", seed}};
  bool all = true;
  for (const auto& s : sweeps) {
    report["lemmas"][s.name] = s.to_json();
    all = all && s.pass();
  }
  const auto probe = lower_bound_probe(2, {0.5, 0.25, 0.125, 0.0625}, 0.3, 1.0);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : probe.rows) rows.push_back({{"t", r.t}, {"norm_sq", r.norm_sq}, {"bound_shape", r.bound_shape}});
  report["lemmas"]["lower_bound_probe"] = {{"pass", probe.all_positive},
                                           {"k", 2},
                                           {"alpha_min", 0.3},
                                           {"sigma", 1.0},
                                           {"rows", rows},
                                           {"fitted_slope", probe.fitted_slope},
                                           {"slope_bound", probe.slope_bound},
                                           {"slope_within_shape", probe.fitted_slope <= probe.slope_bound}};
  all = all && probe.all_positive;
  report["pass"] = all;
  return report;
}

}  // namespace gmmgrid
