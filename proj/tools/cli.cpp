#include "cli.hpp"

#include "methsnp/config.hpp"
#include "methsnp/error.hpp"
#include "methsnp/harness.hpp"
#include "methsnp/inference.hpp"
#include "methsnp/io.hpp"
#include "methsnp/simgen.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace methsnp::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

void require_distinct(const std::vector<fs::path>& paths) {
  std::set<fs::path> seen;
  for (const auto& p : paths) {
    if (p.empty()) continue;
    if (!seen.insert(fs::weakly_canonical(p)).second) {
      throw UsageError("path '" + p.string() + "' is used more than once");
    }
  }
}

struct DataPaths {
  std::string methylation;
  std::string genotypes;
  std::string phenotype;
  std::string snps;
};

// Flags that override analysis settings from a config file.
struct AnalysisFlags {
  std::string config;
  std::optional<int> k;
  std::optional<double> h_min;
  std::optional<int> grid_size;
  std::optional<std::string> weight;
  std::optional<int> basis_size;
  bool binary = false;
  std::optional<std::vector<std::string>> first_stage;
  std::optional<double> window_bp;
  std::optional<double> alpha;

  AnalysisOptions resolve() const {
    AnalysisOptions o;
    if (!config.empty()) o = analysis_options_from_json(load_config_file(config));
    if (k) o.smoothing.k = *k;
    if (h_min) o.smoothing.h_min = *h_min;
    if (grid_size) o.smoothing.grid_size = *grid_size;
    if (weight) o.weight = parse_weight_spec(*weight);
    if (basis_size) o.basis_size = *basis_size;
    if (binary) o.binary = true;
    if (first_stage) o.first_stage_covariates = *first_stage;
    if (window_bp) o.window_bp = *window_bp;
    if (alpha) o.alpha = *alpha;
    o.validate();
    return o;
  }
};

void add_data_options(CLI::App& cmd, DataPaths& paths) {
  cmd.add_option("--methylation", paths.methylation, "long CSV individual_id,position,level")->required();
  cmd.add_option("--genotypes", paths.genotypes, "CSV individual_id,<snp ids>")->required();
  cmd.add_option("--phenotype", paths.phenotype, "CSV individual_id,y,<covariates>")->required();
  cmd.add_option("--snps", paths.snps, "CSV snp_id,position_bp")->required();
}

void add_smoothing_options(CLI::App& cmd, AnalysisFlags& flags) {
  cmd.add_option("--config", flags.config, "TOML or JSON settings file; flags override it");
  cmd.add_option("--k", flags.k, "nearest-CpG count for the bandwidth");
  cmd.add_option("--h-min", flags.h_min, "bandwidth floor in base pairs");
  cmd.add_option("--grid-size", flags.grid_size, "grid points on [0,1]");
}

void add_model_options(CLI::App& cmd, AnalysisFlags& flags) {
  cmd.add_option("--weight", flags.weight, "weight function form:rho, e.g. exponential:1");
  cmd.add_option("--basis-size", flags.basis_size, "number of cubic B-spline functions");
}

void add_binary_options(CLI::App& cmd, AnalysisFlags& flags) {
  cmd.add_flag("--binary", flags.binary, "phenotype is 0/1; fit logistic working residuals first");
  cmd.add_option("--first-stage", flags.first_stage, "covariate columns for the logistic stage (default all)")
      ->delimiter(',');
}

// Applies the logistic first stage: y becomes the working residuals and the
// first-stage covariates leave the functional model.
void apply_binary_stage(LoadedData& data, const AnalysisOptions& options) {
  auto& ds = data.dataset;
  for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
    if (ds.y(i) != 0.0 && ds.y(i) != 1.0) {
      throw DataError("binary phenotype must be 0 or 1; individual '" + ds.curves.ids[static_cast<std::size_t>(i)] +
                      "' has " + fmt(ds.y(i)));
    }
  }
  std::vector<int> first;
  if (options.first_stage_covariates.empty()) {
    for (int c = 0; c < ds.s(); ++c) first.push_back(c);
  } else {
    for (const auto& name : options.first_stage_covariates) {
      const auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(), name);
      if (it == data.covariate_names.end()) throw UsageError("unknown first-stage covariate '" + name + "'");
      first.push_back(static_cast<int>(it - data.covariate_names.begin()));
    }
  }
  Eigen::MatrixXd z(ds.n(), static_cast<Eigen::Index>(first.size()));
  for (std::size_t j = 0; j < first.size(); ++j) z.col(static_cast<Eigen::Index>(j)) = ds.w.col(first[j]);
  ds.y = logistic_working_residuals(ds.y, z).residuals;

  std::vector<int> rest;
  for (int c = 0; c < ds.s(); ++c) {
    if (std::find(first.begin(), first.end(), c) == first.end()) rest.push_back(c);
  }
  Eigen::MatrixXd w(ds.n(), static_cast<Eigen::Index>(rest.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rest.size(); ++j) {
    w.col(static_cast<Eigen::Index>(j)) = ds.w.col(rest[j]);
    names.push_back(data.covariate_names[static_cast<std::size_t>(rest[j])]);
  }
  ds.w = std::move(w);
  data.covariate_names = std::move(names);
}

FittedModel fit_from_files(const DataPaths& paths, const AnalysisOptions& options) {
  LoadedData data = load_dataset(paths.methylation, paths.genotypes, paths.phenotype, paths.snps, options.smoothing);
  if (options.binary) apply_binary_stage(data, options);
  return fit_reml(data.dataset, SplineBasis(options.basis_size), options.weight, options.search);
}

int run_smooth(const std::string& methylation, const std::string& out_path, const AnalysisFlags& flags,
               std::ostream& out) {
  require_distinct({methylation, out_path, flags.config});
  const AnalysisOptions options = flags.resolve();
  const auto samples = read_methylation_csv(methylation);
  const CurveSet curves = build_curve_set(samples, options.smoothing);
  auto file = open_output(out_path);
  write_curves_csv(file, curves);
  out << "curves=" << curves.size() << " grid=" << curves.grid.size() << '\n';
  return 0;
}

int run_fit(const DataPaths& paths, const std::string& out_path, const AnalysisFlags& flags, std::ostream& out) {
  require_distinct({paths.methylation, paths.genotypes, paths.phenotype, paths.snps, out_path, flags.config});
  const FittedModel fit = fit_from_files(paths, flags.resolve());
  write_json(out_path, to_json(fit));
  out << "lambda=" << fmt(fit.lambda) << " sigma2=" << fmt(fit.sigma2) << " reml=" << fmt(fit.reml_value) << '\n';
  return 0;
}

int run_test(const DataPaths& paths, const std::string& out_path, const AnalysisFlags& flags, std::ostream& out,
             std::ostream& err) {
  require_distinct({paths.methylation, paths.genotypes, paths.phenotype, paths.snps, out_path, flags.config});
  const FittedModel fit = fit_from_files(paths, flags.resolve());
  for (const auto& w : fit.warnings) err << "warning: " << w << '\n';
  const TestResult result = wald_interaction_test(fit);
  if (!out_path.empty()) write_json(out_path, to_json(result));
  out << "T_D=" << fmt(result.statistic) << " df=(" << result.df1 << ',' << result.df2 << ") p=" << fmt(result.p_value)
      << '\n';
  return 0;
}

// The pairwise baseline needs every individual measured at the same CpGs.
BaselineInput baseline_input(const LoadedData& data) {
  const auto& samples = data.methylation;
  const auto positions = samples.front().positions();
  BaselineInput in;
  in.cpg_positions = positions;
  in.cpg_levels.resize(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].positions() != positions) {
      throw DataError("baseline requires the same CpG positions for every individual; '" + samples[i].individual_id +
                      "' differs from '" + samples.front().individual_id + "'");
    }
    const auto levels = samples[i].levels();
    for (std::size_t j = 0; j < levels.size(); ++j) {
      in.cpg_levels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = levels[j];
    }
  }
  in.y = data.dataset.y;
  in.w = data.dataset.w;
  in.g = data.dataset.g;
  in.snp_positions = data.snp_positions_bp;
  return in;
}

int run_baseline(const DataPaths& paths, const std::string& snp, const std::string& json_path,
                 const std::string& csv_path, const AnalysisFlags& flags, std::ostream& out) {
  require_distinct(
      {paths.methylation, paths.genotypes, paths.phenotype, paths.snps, json_path, csv_path, flags.config});
  const AnalysisOptions options = flags.resolve();
  const LoadedData data =
      load_dataset(paths.methylation, paths.genotypes, paths.phenotype, paths.snps, options.smoothing);
  const BaselineInput input = baseline_input(data);
  const auto& ids = data.dataset.snp_ids;

  std::vector<int> selected;
  if (snp.empty()) {
    for (int d = 0; d < static_cast<int>(ids.size()); ++d) selected.push_back(d);
  } else {
    const auto it = std::find(ids.begin(), ids.end(), snp);
    if (it == ids.end()) throw UsageError("unknown SNP '" + snp + "'");
    selected.push_back(static_cast<int>(it - ids.begin()));
  }

  nlohmann::json doc = nlohmann::json::array();
  std::ostringstream csv;
  for (int d : selected) {
    const BaselineResult result = pairwise_baseline(input, d, options.window_bp, options.alpha);
    nlohmann::json entry = to_json(result);
    entry["snp_id"] = ids[static_cast<std::size_t>(d)];
    doc.push_back(std::move(entry));
    std::ostringstream part;
    write_baseline_csv(part, result);
    std::string text = part.str();
    if (d != selected.front()) text = text.substr(text.find('\n') + 1);
    csv << text;
    double min_p = 1.0;
    for (const auto& pair : result.pairs) min_p = std::min(min_p, pair.p_value);
    out << "snp=" << ids[static_cast<std::size_t>(d)] << " tests=" << result.n_tests
        << " significant=" << result.significant.size() << " min_p=" << fmt(min_p) << '\n';
  }
  if (!json_path.empty()) write_json(json_path, doc);
  if (!csv_path.empty()) {
    auto file = open_output(csv_path);
    file << csv.str();
  }
  return 0;
}

struct SimulateFlags {
  std::string config;
  std::optional<int> n;
  std::optional<int> d;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::optional<std::string> weight;
  std::optional<std::string> noise;
  std::uint64_t replicate = 0;
  std::string out_dir;
};

int run_simulate(const SimulateFlags& flags, std::ostream& out) {
  SimConfig config;
  if (!flags.config.empty()) {
    const auto doc = load_config_file(flags.config);
    config = sim_config_from_json(doc.contains("sim") ? doc.at("sim") : doc);
  }
  if (flags.n) config.n = *flags.n;
  if (flags.d) config.d = *flags.d;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.weight) config.weight_spec = parse_weight_spec(*flags.weight);
  if (flags.noise) config.noise = parse_noise_kind(*flags.noise);
  if (flags.eta) config.eta.assign(static_cast<std::size_t>(config.d), *flags.eta);
  config.validate();

  const SimulationContext context(config);
  const SimulatedData sim = simulate_dataset(context, flags.replicate);
  const fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  const auto& ds = sim.dataset;
  std::vector<std::string> covariates;
  for (int c = 0; c < ds.s(); ++c) covariates.push_back("w_" + std::to_string(c + 1));
  {
    auto f = open_output(dir / "methylation.csv");
    write_methylation_csv(f, sim.methylation);
  }
  {
    auto f = open_output(dir / "genotypes.csv");
    write_genotypes_csv(f, ds.curves.ids, ds.snp_ids, ds.g);
  }
  {
    auto f = open_output(dir / "snps.csv");
    write_snp_positions_csv(f, ds.snp_ids, sim.snp_positions_bp);
  }
  {
    auto f = open_output(dir / "phenotype.csv");
    write_phenotype_csv(f, ds.curves.ids, ds.y, ds.w, covariates);
  }
  nlohmann::json echo = to_json(config);
  echo["replicate"] = flags.replicate;
  write_json(dir / "sim_config.json", echo);
  out << "individuals=" << ds.n() << " snps=" << ds.d() << " dir=" << dir.string() << '\n';
  return 0;
}

struct StudyFlags {
  std::string config;
  std::optional<std::string> kind;
  std::optional<int> replicates;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int run_study_command(const StudyFlags& flags, std::ostream& out, std::ostream& err) {
  StudySpec spec;
  if (!flags.config.empty()) {
    nlohmann::json doc = load_config_file(flags.config);
    if (flags.kind) doc["study"] = *flags.kind;
    spec = study_spec_from_json(doc);
  } else if (flags.kind) {
    spec = default_study(parse_study_kind(*flags.kind));
  } else {
    throw UsageError("study needs --config or --kind");
  }
  if (flags.replicates) spec.replicates = *flags.replicates;
  if (flags.seed) {
    spec.sim.seed = *flags.seed;
    spec.array.seed = *flags.seed;
  }
  if (flags.workers) spec.workers = *flags.workers;
  if (spec.workers <= 0) spec.workers = default_worker_count();
  spec.validate();

  const StudyResult result = run_study(spec);
  write_study_outputs(result, flags.out_dir);
  for (const auto& e : result.exclusions) err << "excluded replicate " << e.replicate << ": " << e.reason << '\n';
  out << "study=" << to_string(spec.kind) << " replicates=" << result.replicates_used
      << " cells=" << result.cells.size() << " failed=" << (result.failed ? "true" : "false") << '\n';
  if (result.failed) throw NumericalError("study failed: " + result.failure);
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Methylation-curve by SNP interaction testing"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string methylation_only;
  std::string out_path;
  std::string json_path;
  std::string csv_path;
  std::string snp;
  DataPaths paths;
  AnalysisFlags flags;
  SimulateFlags sim_flags;
  StudyFlags study_flags;

  auto* smooth = app.add_subcommand("smooth", "smooth methylation onto the unit grid");
  smooth->add_option("--methylation", methylation_only, "long CSV individual_id,position,level")->required();
  smooth->add_option("--out", out_path, "curves CSV individual_id,t,value")->required();
  add_smoothing_options(*smooth, flags);

  auto* fit = app.add_subcommand("fit", "fit the penalized functional model by REML");
  add_data_options(*fit, paths);
  add_smoothing_options(*fit, flags);
  add_model_options(*fit, flags);
  add_binary_options(*fit, flags);
  fit->add_option("--out", out_path, "fitted model JSON")->required();

  auto* test = app.add_subcommand("test", "test all SNP x methylation interactions");
  add_data_options(*test, paths);
  add_smoothing_options(*test, flags);
  add_model_options(*test, flags);
  add_binary_options(*test, flags);
  test->add_option("--out", out_path, "test result JSON");

  auto* baseline = app.add_subcommand("baseline", "pairwise SNP x CpG tests with Bonferroni correction");
  add_data_options(*baseline, paths);
  add_smoothing_options(*baseline, flags);
  baseline->add_option("--snp", snp, "SNP id (default: every SNP)");
  baseline->add_option("--window-bp", flags.window_bp, "CpG window half-width in base pairs");
  baseline->add_option("--alpha", flags.alpha, "family-wise level");
  baseline->add_option("--out-json", json_path, "results JSON");
  baseline->add_option("--out-csv", csv_path, "per-pair CSV");

  auto* simulate = app.add_subcommand("simulate", "write one simulated dataset as CSV files");
  simulate->add_option("--config", sim_flags.config, "TOML or JSON simulation settings");
  simulate->add_option("--n", sim_flags.n, "individuals");
  simulate->add_option("--d", sim_flags.d, "SNPs");
  simulate->add_option("--seed", sim_flags.seed, "master seed");
  simulate->add_option("--eta", sim_flags.eta, "interaction magnitude for every SNP");
  simulate->add_option("--weight", sim_flags.weight, "generating weight form:rho");
  simulate->add_option("--noise", sim_flags.noise, "gaussian_snr10 or mixture");
  simulate->add_option("--replicate", sim_flags.replicate, "replicate index");
  simulate->add_option("--out-dir", sim_flags.out_dir, "output directory")->required();

  auto* study = app.add_subcommand("study", "run a Monte Carlo study");
  study->add_option("--config", study_flags.config, "TOML or JSON study settings");
  study->add_option("--kind", study_flags.kind, "type1, power, misspec, mixture_h0 or baseline_compare");
  study->add_option("--replicates", study_flags.replicates, "replicates per cell");
  study->add_option("--workers", study_flags.workers, "worker threads (default METHSNP_WORKERS or 1)");
  study->add_option("--seed", study_flags.seed, "master seed");
  study->add_option("--out-dir", study_flags.out_dir, "output directory")->required();

  try {
    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 1;
  }

  try {
    if (*smooth) return run_smooth(methylation_only, out_path, flags, out);
    if (*fit) return run_fit(paths, out_path, flags, out);
    if (*test) return run_test(paths, out_path, flags, out, err);
    if (*baseline) return run_baseline(paths, snp, json_path, csv_path, flags, out);
    if (*simulate) return run_simulate(sim_flags, out);
    if (*study) return run_study_command(study_flags, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace methsnp::cli
