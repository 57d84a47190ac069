#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gmmgrid/gmmgrid.hpp"

namespace fs = std::filesystem;
using namespace gmmgrid;

namespace {

void emit(const Json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    io::write_json(out, j);
}

SampleMatrix load_samples(const std::string& path) { return io::samples_from_csv(io::read_file(path)); }

// "known:<v>" -> v, "estimate" -> nullopt
std::optional<double> parse_sigma(const std::string& s) {
  if (s == "estimate") return std::nullopt;
  if (s.rfind("known:", 0) == 0) {
    try {
      const double v = std::stod(s.substr(6));
      if (v > 0.0) return v;
    } catch (...) {
    }
  }
  throw Error("--sigma must be known:<positive number> or estimate, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn mixtures of identical spherical Gaussians by SVD projection, KDE and L2 grid search"};
  app.require_subcommand(1);

  // generate
  InstanceSpec gen;
  std::vector<double> gen_weights;
  std::string gen_out;
  auto* c_gen = app.add_subcommand("generate", "Draw a random mixture satisfying separation and weight bounds");
  c_gen->add_option("--n", gen.n, "ambient dimension")->required();
  c_gen->add_option("--k", gen.k, "number of components")->required();
  c_gen->add_option("--d-min", gen.d_min, "minimum pairwise mean distance");
  c_gen->add_option("--alpha-min", gen.alpha_min, "minimum mixing weight");
  c_gen->add_option("--sigma", gen.sigma, "shared standard deviation");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--weights", gen_weights, "fixed weights (comma separated)")->delimiter(',');
  c_gen->add_option("--out", gen_out, "output mixture.json (default stdout)");

  // sample
  std::string smp_mix, smp_out, smp_format = "csv";
  std::size_t smp_n = 10000;
  std::uint64_t smp_seed = 0;
  auto* c_smp = app.add_subcommand("sample", "Draw points from a mixture");
  c_smp->add_option("--mixture", smp_mix, "mixture.json")->required();
  c_smp->add_option("--n-samples", smp_n)->required();
  c_smp->add_option("--seed", smp_seed);
  c_smp->add_option("--format", smp_format)->check(CLI::IsMember({"csv", "ndjson"}));
  c_smp->add_option("--out", smp_out, "output file")->required();

  // project
  std::string prj_in, prj_out, prj_basis_in, prj_basis_out;
  int prj_k = 0;
  auto* c_prj = app.add_subcommand("project", "Fit the top-k right singular vectors and project samples onto them");
  c_prj->add_option("--input", prj_in, "samples.csv")->required();
  c_prj->add_option("--k", prj_k, "number of directions (ignored with --basis)");
  c_prj->add_option("--basis", prj_basis_in, "apply an existing basis.json instead of fitting");
  c_prj->add_option("--basis-out", prj_basis_out, "write the fitted basis.json");
  c_prj->add_option("--out", prj_out, "projected.csv")->required();

  // kde
  std::string kde_in, kde_out;
  std::optional<double> kde_h;
  auto* c_kde = app.add_subcommand("kde", "Build the Gaussian KDE of (projected) samples");
  c_kde->add_option("--input", kde_in, "samples.csv")->required();
  c_kde->add_option("--bandwidth", kde_h, "kernel width (default: sample-size rule)");
  c_kde->add_option("--out", kde_out, "kde.json (default stdout)");

  // estimate-variance
  std::string var_in, var_dir = "e1", var_out;
  int var_k = 0;
  std::optional<double> var_tau;
  std::uint64_t var_seed = 0;
  auto* c_var = app.add_subcommand("estimate-variance", "Estimate sigma from Hermite moments along one direction");
  c_var->add_option("--k", var_k)->required();
  c_var->add_option("--input", var_in, "samples.csv")->required();
  c_var->add_option("--direction", var_dir)->check(CLI::IsMember({"random", "e1"}));
  c_var->add_option("--tau-max", var_tau, "upper end of the root scan (default 1.5 x sample std)");
  c_var->add_option("--seed", var_seed, "seed for --direction random");
  c_var->add_option("--out", var_out);

  // search
  std::string srch_in, srch_kde, srch_mode = "refine", srch_sigma, srch_out;
  double srch_step = 0.1, srch_alpha = 0.0;
  std::optional<double> srch_wstep, srch_half;
  int srch_rounds = 3;
  std::size_t srch_budget = 100'000'000;
  bool srch_trace = false, srch_nocomp = false;
  auto* c_srch = app.add_subcommand("search", "Grid search for the mixture closest in L2 to the KDE");
  c_srch->add_option("--input", srch_in, "projected samples.csv (KDE built with the default bandwidth)");
  c_srch->add_option("--kde", srch_kde, "kde.json from the kde subcommand");
  c_srch->add_option("--grid-step", srch_step);
  c_srch->add_option("--weight-step", srch_wstep, "default: --grid-step");
  c_srch->add_option("--mode", srch_mode)->check(CLI::IsMember({"faithful", "refine"}));
  c_srch->add_option("--rounds", srch_rounds);
  c_srch->add_option("--budget", srch_budget);
  c_srch->add_option("--alpha-min", srch_alpha);
  c_srch->add_option("--half-width", srch_half, "mean box half-width (default sqrt(dim/k) = 1)");
  c_srch->add_option("--sigma", srch_sigma, "known:<v> or estimate")->required();
  c_srch->add_flag("--trace", srch_trace);
  c_srch->add_flag("--no-compensation", srch_nocomp, "compare against width sigma instead of sqrt(sigma^2+h^2)");
  c_srch->add_option("--out", srch_out);

  // run
  std::string run_cfg, run_out;
  bool run_trace = false, run_plots = false;
  auto* c_run = app.add_subcommand("run", "Full pipeline from a config file");
  c_run->add_option("--config", run_cfg, "config.json")->required();
  c_run->add_option("--out", run_out, "output directory (overrides config)");
  c_run->add_flag("--trace", run_trace);
  c_run->add_flag("--plots", run_plots);

  // verify-lemmas
  std::size_t vl_size = 0;
  std::uint64_t vl_seed = 0;
  std::string vl_out;
  auto* c_vl = app.add_subcommand("verify-lemmas", "Randomized checks of the structural lemmas");
  c_vl->add_option("--sweep-size", vl_size, "instances per sweep (default: per-check sizes)");
  c_vl->add_option("--seed", vl_seed);
  c_vl->add_option("--out", vl_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_gen) {
      if (!gen_weights.empty()) gen.weights = gen_weights;
      emit(io::to_json(generate_instance(gen)), gen_out);
    } else if (*c_smp) {
      const auto mix = io::spherical_from_json(io::read_json(smp_mix));
      const auto s = sample(mix, smp_n, smp_seed);
      io::write_file(smp_out, smp_format == "csv" ? io::to_csv(s) : io::to_ndjson(s));
    } else if (*c_prj) {
      const auto s = load_samples(prj_in);
      ProjectionBasis basis;
      if (!prj_basis_in.empty()) {
        basis = io::basis_from_json(io::read_json(prj_basis_in));
      } else {
        if (prj_k < 1) throw Error("project: --k is required unless --basis is given");
        basis = fit_basis(s, prj_k);
      }
      if (!prj_basis_out.empty()) io::write_json(prj_basis_out, io::to_json(basis));
      io::write_file(prj_out, io::to_csv(project(s, basis)));
    } else if (*c_kde) {
      emit(io::to_json(build_kde(load_samples(kde_in), kde_h)), kde_out);
    } else if (*c_var) {
      const auto s = load_samples(var_in);
      VarianceOptions vo;
      vo.tau_max = var_tau;
      if (var_dir == "random") {
        Rng rng(derive_seed(var_seed, "direction"));
        Vector v(s.dim());
        for (int d = 0; d < s.dim(); ++d) v(d) = rng.normal();
        vo.direction = v.normalized();
      }
      const auto est = estimate_variance(s, var_k, vo);
      if (est.flat_root) std::clog << "warning: determinant is flat at the bracketed root; it may be a multiple root\n";
      emit({{"sigma_star", est.sigma_star},
            {"bracket", {est.bracket_lo, est.bracket_hi}},
            {"dhat_degree", est.dhat_degree},
            {"n_used", est.n_used},
            {"tau_max", est.tau_max},
            {"flat_root", est.flat_root}},
           var_out);
    } else if (*c_srch) {
      if (srch_in.empty() == srch_kde.empty()) throw Error("search: give exactly one of --input or --kde");
      const auto sigma_opt = parse_sigma(srch_sigma);
      std::optional<SampleMatrix> s;
      KdeEstimate kde = srch_kde.empty() ? build_kde(*(s = load_samples(srch_in)))
                                         : io::kde_from_json(io::read_json(srch_kde));
      double sigma = 0.0;
      if (sigma_opt) {
        sigma = *sigma_opt;
      } else {
        if (!s) throw Error("search: --sigma estimate needs --input samples");
        sigma = estimate_variance(*s, kde.dim()).sigma_star;
      }
      const int k = kde.dim();
      const auto grid = ParameterGrid::box(k, k, srch_half.value_or(1.0), srch_step, srch_wstep.value_or(srch_step),
                                           srch_alpha, parse_search_mode(srch_mode), srch_rounds, srch_budget);
      SearchOptions so;
      so.trace = srch_trace;
      so.bandwidth_compensation = !srch_nocomp;
      emit(io::to_json(search(kde, grid, sigma, so), srch_trace), srch_out);
    } else if (*c_run) {
      auto cfg = ExperimentConfig::from_json(io::read_json(run_cfg));
      if (!run_out.empty()) cfg.out_dir = run_out;
      RunOptions ro;
      ro.trace = run_trace;
      const auto rep = run_experiment(cfg, ro);
      if (run_plots) {
        const fs::path out(cfg.out_dir);
        if (cfg.k == 1 && cfg.n == 1) {
          io::write_file(out / "density.svg", plot::density_overlay_1d(rep.truth, rep.estimate));
        } else {
          const auto basis = io::basis_from_json(io::read_json(out / "basis.json"));
          std::vector<Vector> t, e;
          for (const auto& m : rep.truth.means()) t.push_back(project(m, basis));
          for (const auto& m : rep.estimate.means()) e.push_back(project(m, basis));
          if (cfg.k >= 2) {
            const auto s = sample(rep.truth, 2000, derive_seed(cfg.seed, "plot"));
            io::write_file(out / "means.svg", plot::means_2d(project(s.data, basis), t, e));
          }
        }
      }
      std::cout << rep.report_json.dump(2) << "\n";
      return rep.success ? 0 : 2;
    } else if (*c_vl) {
      const auto sizes = vl_size ? SweepSizes::uniform(vl_size) : SweepSizes{};
      const auto report = verify_lemmas(sizes, vl_seed, worker_count());
      emit(report, vl_out);
      return report.at("pass").get<bool>() ? 0 : 2;
    }
  } catch (const Error& e) {
    std::cerr << "error" << (e.stage().empty() ? "" : " [" + e.stage() + "]") << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
