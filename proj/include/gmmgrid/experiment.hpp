#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/grid_search.hpp"
#include "gmmgrid/io.hpp"
#include "gmmgrid/kde.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/rng.hpp"
#include "gmmgrid/spectral.hpp"
#include "gmmgrid/variance.hpp"

namespace gmmgrid {

struct GridConfig {
  SearchMode mode = SearchMode::refine;
  double step = 0.1;
  std::optional<double> weight_step;      // defaults to step
  int rounds = 3;
  std::size_t budget = 100'000'000;
  std::optional<double> mean_half_width;  // defaults to sqrt(n / k)
  double c1 = 1.0;                        // exponent constant of the theoretical grid size
};

struct ExperimentConfig {
  int n = 2;
  int k = 1;
  double d_min = 0.0;
  double alpha_min = 0.0;
  std::optional<double> sigma;  // nullopt: estimate from the samples
  double true_sigma = 1.0;      // used to generate the instance
  double epsilon = 0.1;
  std::size_t n_samples = 10'000;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> weights;  // fixed true weights instead of simplex draws
  GridConfig grid;
  std::optional<double> bandwidth;
  std::optional<std::size_t> kde_subsample;
  bool bandwidth_compensation = true;
  bool write_samples = true;
  std::optional<double> tau_max;
  std::string out_dir = "run";

  /// Throws before any work when the configuration is outside the problem class.
  void validate() const {
    auto fail = [](const std::string& m) { throw Error("config: " + m, "validate"); };
    if (n < 1 || k < 1) fail("n and k must be positive");
    if (k > n) fail("k must not exceed n (the projection keeps k directions)");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (d_min < 0.0) fail("d_min must be nonnegative");
    if (k > 1 && epsilon > d_min / 2.0)
      fail("epsilon " + std::to_string(epsilon) + " exceeds d_min/2 = " + std::to_string(d_min / 2.0) +
           " (the recovery guarantee requires epsilon <= d_min/2)");
    if (alpha_min < 0.0 || alpha_min * k > 1.0 + 1e-12) fail("alpha_min must satisfy 0 <= alpha_min * k <= 1");
    if (!(true_sigma > 0.0)) fail("sigma must be positive");
    if (sigma && !(*sigma > 0.0)) fail("sigma must be positive");
    if (n_samples < 2) fail("n_samples must be at least 2");
    if (!(grid.step > 0.0)) fail("grid.step must be positive");
    if (grid.weight_step && !(*grid.weight_step > 0.0)) fail("grid.weight_step must be positive");
    if (grid.rounds < 1) fail("grid.rounds must be at least 1");
    if (weights) {
      if (static_cast<int>(weights->size()) != k) fail("weights must have k entries");
      double s = 0.0;
      for (double w : *weights) {
        if (w < alpha_min) fail("fixed weight below alpha_min");
        s += w;
      }
      if (std::abs(s - 1.0) > 1e-12) fail("fixed weights must sum to 1");
    }
    if (kde_subsample && (*kde_subsample < 1 || *kde_subsample > n_samples))
      fail("kde_subsample must be in 1..n_samples");
  }

  Json to_json() const {
    Json g = {{"mode", to_string(grid.mode)}, {"step", grid.step},     {"rounds", grid.rounds},
              {"budget", grid.budget},        {"c1", grid.c1}};
    if (grid.weight_step) g["weight_step"] = *grid.weight_step;
    if (grid.mean_half_width) g["mean_half_width"] = *grid.mean_half_width;
    Json j = {{"n", n},
              {"k", k},
              {"d_min", d_min},
              {"alpha_min", alpha_min},
              {"sigma", sigma ? Json(*sigma) : Json("estimate")},
              {"true_sigma", true_sigma},
              {"epsilon", epsilon},
              {"n_samples", n_samples},
              {"seed", seed},
              {"grid", g},
              {"bandwidth_compensation", bandwidth_compensation},
              {"write_samples", write_samples}};
    if (weights) j["weights"] = *weights;
    if (bandwidth) j["bandwidth"] = *bandwidth;
    if (kde_subsample) j["kde_subsample"] = *kde_subsample;
    if (tau_max) j["tau_max"] = *tau_max;
    return j;
  }

  /// `sigma` is a number (known, also used to generate) or "estimate" (then
  /// `true_sigma` gives the generating value).
  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig c;
    try {
      c.n = j.at("n").get<int>();
      c.k = j.at("k").get<int>();
      c.d_min = j.value("d_min", 0.0);
      c.alpha_min = j.value("alpha_min", 0.0);
      const auto& s = j.at("sigma");
      if (s.is_string()) {
        if (s.get<std::string>() != "estimate") throw Error("config: sigma must be a number or \"estimate\"", "validate");
        c.true_sigma = j.at("true_sigma").get<double>();
      } else {
        c.sigma = s.get<double>();
        c.true_sigma = j.value("true_sigma", *c.sigma);
      }
      c.epsilon = j.at("epsilon").get<double>();
      c.n_samples = j.at("n_samples").get<std::size_t>();
      c.seed = j.value("seed", std::uint64_t{0});
      if (j.contains("weights")) c.weights = j.at("weights").get<std::vector<double>>();
      if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid.mode = parse_search_mode(g.value("mode", std::string("refine")));
        c.grid.step = g.value("step", c.grid.step);
        if (g.contains("weight_step")) c.grid.weight_step = g.at("weight_step").get<double>();
        c.grid.rounds = g.value("rounds", c.grid.rounds);
        c.grid.budget = g.value("budget", c.grid.budget);
        if (g.contains("mean_half_width")) c.grid.mean_half_width = g.at("mean_half_width").get<double>();
        c.grid.c1 = g.value("c1", c.grid.c1);
      }
      if (j.contains("bandwidth")) c.bandwidth = j.at("bandwidth").get<double>();
      if (j.contains("kde_subsample")) c.kde_subsample = j.at("kde_subsample").get<std::size_t>();
      c.bandwidth_compensation = j.value("bandwidth_compensation", true);
      c.write_samples = j.value("write_samples", true);
      if (j.contains("tau_max")) c.tau_max = j.at("tau_max").get<double>();
      c.out_dir = j.value("out_dir", c.out_dir);
    } catch (const Json::exception& e) {
      throw Error(std::string("config: ") + e.what(), "validate");
    }
    return c;
  }
};

struct InstanceSpec {
  int n = 2;
  int k = 1;
  double d_min = 0.0;
  double alpha_min = 0.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> weights;
};

/// Means uniform in [-1,1]^n and weights uniform on the simplex, each
/// resampled until the d_min / alpha_min constraints hold.
inline SphericalMixture generate_instance(const InstanceSpec& spec, std::size_t budget = 100'000) {
  detail::require(spec.n >= 1 && spec.k >= 1, "generate_instance: n and k must be positive");
  Rng rng(derive_seed(spec.seed, "instance"));
  std::vector<Vector> means;
  std::size_t draws = 0;
  while (true) {
    if (++draws > budget)
      throw Error("generate_instance: no mean configuration with separation >= " + std::to_string(spec.d_min) +
                      " found in " + std::to_string(budget) + " draws (infeasible in [-1,1]^n?)",
                  "generate");
    means.clear();
    for (int i = 0; i < spec.k; ++i) {
      Vector m(spec.n);
      for (int d = 0; d < spec.n; ++d) m(d) = rng.uniform(-1.0, 1.0);
      means.push_back(m);
    }
    if (spec.k == 1 || min_pairwise_distance(means) >= spec.d_min) break;
  }
  std::vector<double> w;
  if (spec.weights) {
    w = *spec.weights;
  } else {
    draws = 0;
    while (true) {
      if (++draws > budget)
        throw Error("generate_instance: no weight vector with minimum >= " + std::to_string(spec.alpha_min) +
                        " found in " + std::to_string(budget) + " draws",
                    "generate");
      w.assign(static_cast<std::size_t>(spec.k), 0.0);
      double s = 0.0;
      for (auto& x : w) s += (x = -std::log(1.0 - rng.uniform01()));
      for (auto& x : w) x /= s;
      // exact unit sum: fold rounding into the last weight
      double head = 0.0;
      for (std::size_t i = 0; i + 1 < w.size(); ++i) head += w[i];
      w.back() = 1.0 - head;
      if (*std::min_element(w.begin(), w.end()) >= spec.alpha_min && w.back() > 0.0) break;
    }
  }
  return SphericalMixture(means, w, spec.sigma, {spec.alpha_min, spec.d_min});
}

struct ExperimentReport {
  SphericalMixture truth;
  SphericalMixture estimate;
  ComponentMatch match;
  double hausdorff_distance = 0.0;
  std::optional<VarianceEstimate> variance;
  SearchResult search;
  TheoreticalGrid theoretical_grid;
  double projection_error = 0.0;  // max_i || mu_i - proj_V mu_i ||
  std::vector<std::pair<std::string, double>> timings;
  bool success = false;
  Json result_json;  // deterministic part
  Json report_json;  // result plus timings and provenance
};

namespace detail {

class StageTimer {
 public:
  template <typename Fn>
  auto run(const std::string& stage, std::vector<std::pair<std::string, double>>& timings, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        timings.emplace_back(stage, seconds_since(t0));
      } else {
        auto r = fn();
        timings.emplace_back(stage, seconds_since(t0));
        return r;
      }
    } catch (const Error& e) {
      throw Error(e.what(), e.stage().empty() ? stage : e.stage());
    } catch (const std::exception& e) {
      throw Error(e.what(), stage);
    }
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace detail

struct RunOptions {
  bool trace = false;
  bool write_files = true;
  unsigned workers = 0;
};

/// sample -> (estimate sigma) -> fit basis / project -> KDE -> grid search ->
/// lift -> match, writing samples.csv, mixture.json, basis.json, result.json
/// and report.json under config.out_dir.
inline ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& ropts = {}) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path out(config.out_dir);
  std::vector<std::pair<std::string, double>> timings;
  detail::StageTimer timer;

  if (ropts.write_files) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message(), "setup");
  }

  const auto truth = timer.run("generate", timings, [&] {
    return generate_instance({config.n, config.k, config.d_min, config.alpha_min, config.true_sigma, config.seed,
                              config.weights});
  });
  const auto samples =
      timer.run("sample", timings, [&] { return sample(truth, config.n_samples, derive_seed(config.seed, "sample")); });

  std::optional<VarianceEstimate> variance;
  double sigma = config.sigma.value_or(0.0);
  if (!config.sigma) {
    variance = timer.run("estimate_variance", timings, [&] {
      VarianceOptions vo;
      vo.tau_max = config.tau_max;
      return estimate_variance(samples, config.k, vo);
    });
    sigma = variance->sigma_star;
  }

  const auto basis = timer.run("fit_basis", timings, [&] { return fit_basis(samples, config.k); });
  const auto projected = timer.run("project", timings, [&] { return project(samples, basis); });

  auto kde = timer.run("kde", timings, [&] { return build_kde(projected, config.bandwidth); });
  if (config.kde_subsample)
    kde = timer.run("kde", timings,
                    [&] { return subsample(kde, *config.kde_subsample, derive_seed(config.seed, "kde_subsample")); });

  const double half_width = config.grid.mean_half_width.value_or(std::sqrt(static_cast<double>(config.n) / config.k));
  const auto grid = ParameterGrid::box(config.k, config.k, half_width, config.grid.step,
                                       config.grid.weight_step.value_or(config.grid.step), config.alpha_min,
                                       config.grid.mode, config.grid.rounds, config.grid.budget);
  SearchOptions so;
  so.bandwidth_compensation = config.bandwidth_compensation;
  so.trace = ropts.trace;
  so.workers = ropts.workers;
  const auto result = timer.run("search", timings, [&] { return search(kde, grid, sigma, so); });
  const auto theoretical =
      theoretical_grid_size(config.n, config.k, config.epsilon, std::max(config.alpha_min, 1e-300), config.grid.c1);

  const auto lifted = timer.run("lift", timings, [&] { return lift(result.theta_star.means, basis); });
  const SphericalMixture estimate(lifted, result.theta_star.weights, sigma);
  const auto match = timer.run("match", timings, [&] { return match_components(truth, estimate); });
  const double hd = hausdorff(truth.means(), estimate.means());

  double proj_err = 0.0;
  for (const auto& m : truth.means()) proj_err = std::max(proj_err, (m - lift(project(m, basis), basis)).norm());

  ExperimentReport rep{truth, estimate, match, hd, variance, result, theoretical, proj_err, {}, false, {}, {}};
  rep.success = match.max_mean_error <= config.epsilon && match.max_weight_error <= config.epsilon;

  Json var = nullptr;
  if (variance)
    var = {{"sigma_star", variance->sigma_star},
           {"abs_error", std::abs(variance->sigma_star - config.true_sigma)},
           {"bracket", {variance->bracket_lo, variance->bracket_hi}},
           {"dhat_degree", variance->dhat_degree},
           {"n_used", variance->n_used},
           {"flat_root", variance->flat_root}};
  rep.result_json = {{"schema", "gmmgrid/1"},
                     {"search", io::to_json(result, ropts.trace)},
                     {"estimate", io::to_json(estimate)},
                     {"match", io::to_json(match)},
                     {"hausdorff", hd},
                     {"sigma_used", sigma},
                     {"variance", var},
                     {"projection_error", proj_err},
                     {"success", rep.success}};
  const std::string cfg_dump = config.to_json().dump();
  Json timing_json = Json::object();
  for (const auto& [stage, t] : timings) timing_json[stage] = timing_json.value(stage, 0.0) + t;
  rep.timings = timings;
  rep.report_json = {{"schema", "gmmgrid/1"},
                     {"provenance", {{"config_hash", fnv1a64(cfg_dump)}, {"seed", config.seed}, {"config", config.to_json()}}},
                     {"mean_errors", match.mean_errors},
                     {"weight_errors", match.weight_errors},
                     {"max_mean_error", match.max_mean_error},
                     {"max_weight_error", match.max_weight_error},
                     {"hausdorff", hd},
                     {"sigma_star", variance ? Json(variance->sigma_star) : Json(nullptr)},
                     {"sigma_abs_error", variance ? Json(std::abs(variance->sigma_star - config.true_sigma)) : Json(nullptr)},
                     {"objective", result.kde_self_norm ? Json(result.objective) : Json(nullptr)},
                     {"reduced_objective", result.reduced_objective},
                     {"evaluations", result.evaluations},
                     {"projection_error", proj_err},
                     {"theoretical_grid", {{"log10", theoretical.log10_value}, {"underflow", theoretical.underflow}}},
                     {"success", rep.success},
                     {"wall_clock_seconds", timing_json}};

  if (ropts.write_files) {
    timer.run("write", timings, [&] {
      if (config.write_samples) io::write_file(out / "samples.csv", io::to_csv(samples));
      io::write_json(out / "mixture.json", io::to_json(truth));
      io::write_json(out / "basis.json", io::to_json(basis));
      io::write_json(out / "result.json", rep.result_json);
      io::write_json(out / "report.json", rep.report_json);
    });
  }
  return rep;
}

}  // namespace gmmgrid
