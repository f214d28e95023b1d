#include "methsnp/harness.hpp"

#include "methsnp/config.hpp"
#include "methsnp/error.hpp"
#include "methsnp/inference.hpp"
#include "text_format.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

namespace methsnp {

namespace {

const std::vector<double> kPowerEtaGrid = {0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0};
const std::vector<double> kComparisonBaseGrid = {0.0, 0.05, 0.1, 0.2, 0.4, 0.8};

constexpr std::string_view kProposed = "proposed";
constexpr std::string_view kBaseline = "baseline";

std::vector<WeightSpec> exponential_specs(std::initializer_list<double> rhos) {
  std::vector<WeightSpec> out;
  for (double r : rhos) out.push_back({WeightForm::exponential, r});
  return out;
}

bool is_h0_kind(StudyKind kind) { return kind == StudyKind::type1 || kind == StudyKind::mixture_h0; }

std::string generation_label(const StudySpec& spec, const WeightSpec& gen) {
  if (spec.kind == StudyKind::baseline_compare) return "scenario:" + std::to_string(spec.scenario);
  return is_h0_kind(spec.kind) ? "h0" : gen.label();
}

struct Outcome {
  std::vector<PValueRecord> records;
  std::optional<std::string> error;
};

// Replicates are claimed from an atomic counter and stored by index, so the
// gathered order never depends on the number of workers.
template <typename Task>
std::vector<Outcome> run_replicates(int replicates, int workers, const Task& task) {
  std::vector<Outcome> outcomes(static_cast<std::size_t>(replicates));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= replicates) return;
      auto& out = outcomes[static_cast<std::size_t>(r)];
      try {
        out.records = task(r);
      } catch (const Error& e) {
        out.records.clear();
        out.error = e.what();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(replicates);
        return;
      }
    }
  };
  const int count = std::clamp(workers, 1, std::max(replicates, 1));
  if (count == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < count; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

StudyResult gather(const StudySpec& spec, std::vector<Outcome> outcomes) {
  StudyResult result;
  result.spec = spec;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    auto& o = outcomes[r];
    if (o.error) {
      result.exclusions.push_back({static_cast<int>(r), *o.error});
      continue;
    }
    ++result.replicates_used;
    for (auto& rec : o.records) result.pvalues.push_back(std::move(rec));
  }

  struct Key {
    std::string method, generation, fit;
    int n;
    double eta;
    bool operator<(const Key& o) const {
      return std::tie(method, generation, fit, n, eta) < std::tie(o.method, o.generation, o.fit, o.n, o.eta);
    }
  };
  std::map<Key, std::size_t> index;
  std::vector<std::vector<double>> groups;
  std::map<std::string, WeightSpec> fit_specs;
  for (const auto& w : spec.fit_weight_specs) fit_specs[w.label()] = w;
  for (const auto& w : spec.generations()) fit_specs[w.label()] = w;
  for (const auto& rec : result.pvalues) {
    const Key key{rec.method, rec.generation, rec.fit_spec, rec.n, rec.eta};
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) {
      groups.emplace_back();
      PowerCell cell;
      cell.method = rec.method;
      cell.generation = rec.generation;
      cell.fit = fit_specs.at(rec.fit_spec);
      cell.n = rec.n;
      cell.eta = rec.eta;
      result.cells.push_back(cell);
    }
    groups[it->second].push_back(rec.p);
  }
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    auto& cell = result.cells[c];
    const auto& ps = groups[c];
    cell.replicates = static_cast<int>(ps.size());
    cell.rejections = static_cast<int>(std::count_if(ps.begin(), ps.end(), [&](double p) { return p < spec.alpha_level; }));
    cell.power = static_cast<double>(cell.rejections) / cell.replicates;
    cell.se = std::sqrt(cell.power * (1.0 - cell.power) / cell.replicates);
    cell.ks = ks_uniform(ps);
  }

  const double fraction = static_cast<double>(result.exclusions.size()) / spec.replicates;
  if (fraction > spec.max_exclusion_fraction) {
    result.failed = true;
    result.failure = std::to_string(result.exclusions.size()) + " of " + std::to_string(spec.replicates) +
                     " replicates excluded (limit " + format_double(spec.max_exclusion_fraction) + ")";
  }
  return result;
}

int resolve_workers(const StudySpec& spec) { return spec.workers > 0 ? spec.workers : default_worker_count(); }

// Maps M x k quadrature weights to the N x k integrals of every curve.
using CurveFunctional = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// Lazily built per-spec covariates and factorized designs for one draw.
class DesignCache {
 public:
  DesignCache(CurveFunctional integrate, const std::vector<double>& grid, const Eigen::MatrixXd& w,
              const Eigen::MatrixXd& g, std::vector<double> snp_positions, const SplineBasis& basis,
              const Eigen::MatrixXd& penalty, const LambdaSearch& search)
      : integrate_(std::move(integrate)),
        grid_(grid),
        w_(w),
        g_(g),
        positions_(std::move(snp_positions)),
        penalty_(penalty),
        search_(search) {
    z_ = integrate_(basis_quadrature(basis, grid_));
  }

  const Eigen::MatrixXd& omega(const WeightSpec& spec) {
    auto it = omega_.find(spec.label());
    if (it == omega_.end()) {
      it = omega_.emplace(spec.label(), integrate_(interaction_quadrature(spec, positions_, grid_))).first;
    }
    return it->second;
  }

  const PreparedDesign& prepared(const WeightSpec& spec) {
    auto it = prepared_.find(spec.label());
    if (it == prepared_.end()) {
      it = prepared_.emplace(spec.label(), PreparedDesign(assemble_design(w_, g_, omega(spec), z_), penalty_, search_))
               .first;
    }
    return it->second;
  }

 private:
  CurveFunctional integrate_;
  const std::vector<double>& grid_;
  const Eigen::MatrixXd& w_;
  const Eigen::MatrixXd& g_;
  std::vector<double> positions_;
  const Eigen::MatrixXd& penalty_;
  const LambdaSearch& search_;
  Eigen::MatrixXd z_;
  std::map<std::string, Eigen::MatrixXd> omega_;
  std::map<std::string, PreparedDesign> prepared_;
};

double proposed_p(const PreparedDesign& design, const Eigen::VectorXd& y) {
  return wald_interaction_test(design.fit(y)).p_value;
}

StudyResult run_simulation_study(const StudySpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  const SimulationContext context(spec.sim);
  const SplineBasis basis(spec.basis_size);
  const Eigen::MatrixXd penalty = penalty_matrix(basis);
  const auto gens = spec.generations();
  const auto sizes = spec.sizes();
  const int d = spec.sim.d;

  auto task = [&](int r) {
    std::vector<PValueRecord> records;
    for (int n : sizes) {
      const ReplicateDraw draw = context.draw(n, static_cast<std::uint64_t>(r));
      DesignCache cache([&draw](const Eigen::MatrixXd& q) { return Eigen::MatrixXd(draw.curves.values * q); },
                        draw.curves.grid, draw.w, draw.genotypes.g, draw.snp_positions, basis, penalty, spec.search);
      const Eigen::MatrixXd no_interaction = Eigen::MatrixXd::Zero(n, d);
      for (const auto& gen : gens) {
        const auto fits = spec.kind == StudyKind::power ? std::vector<WeightSpec>{gen} : spec.fit_weight_specs;
        for (double eta : spec.eta_grid) {
          const std::vector<double> eta_vec(static_cast<std::size_t>(d), eta);
          const Eigen::MatrixXd& omega = eta == 0.0 ? no_interaction : cache.omega(gen);
          const Eigen::VectorXd y = phenotype_from_draw(draw, spec.sim, eta_vec, omega).y;
          for (const auto& fit : fits) {
            records.push_back({r, n, generation_label(spec, gen), eta, fit.label(), std::string(kProposed),
                               proposed_p(cache.prepared(fit), y)});
          }
        }
      }
    }
    return records;
  };
  StudyResult result = gather(spec, run_replicates(spec.replicates, resolve_workers(spec), task));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

}  // namespace

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::type1: return "type1";
    case StudyKind::power: return "power";
    case StudyKind::misspec: return "misspec";
    case StudyKind::mixture_h0: return "mixture_h0";
    case StudyKind::baseline_compare: return "baseline_compare";
  }
  return "type1";
}

StudyKind parse_study_kind(std::string_view name) {
  for (auto k : {StudyKind::type1, StudyKind::power, StudyKind::misspec, StudyKind::mixture_h0,
                 StudyKind::baseline_compare}) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown study kind '" + std::string(name) + "'");
}

std::vector<WeightSpec> StudySpec::generations() const {
  return generation_specs.empty() ? std::vector<WeightSpec>{sim.weight_spec} : generation_specs;
}

std::vector<int> StudySpec::sizes() const {
  if (kind == StudyKind::baseline_compare) return {array.n};
  return sample_sizes.empty() ? std::vector<int>{sim.n} : sample_sizes;
}

void StudySpec::validate() const {
  require(replicates >= 1, "replicates must be at least 1");
  require(alpha_level > 0.0 && alpha_level < 1.0, "alpha level must lie in (0,1)");
  require(basis_size >= 4, "basis size must be at least 4");
  require(max_exclusion_fraction >= 0.0 && max_exclusion_fraction < 1.0, "exclusion limit must lie in [0,1)");
  require(workers >= 0, "worker count must be non-negative");
  require(!eta_grid.empty(), "eta grid must not be empty");
  for (double e : eta_grid) require(std::isfinite(e), "eta grid values must be finite");
  for (const auto& w : fit_weight_specs) w.validate();
  for (const auto& w : generation_specs) w.validate();
  for (int n : sizes()) require(n >= 8, "sample sizes must be at least 8");
  if (kind == StudyKind::baseline_compare) {
    array.validate();
    comparison_scenario(scenario);
    require(!fit_weight_specs.empty(), "at least one fit weight spec is required");
    require(window_bp > 0.0, "baseline window must be positive");
    return;
  }
  sim.validate();
  if (kind == StudyKind::power) {
    require(fit_weight_specs.empty() || fit_weight_specs == generations(),
            "power studies fit with the generating weight specs");
  } else {
    require(!fit_weight_specs.empty(), "at least one fit weight spec is required");
  }
  if (is_h0_kind(kind)) {
    for (double e : sim.eta) require(e == 0.0, "null studies require eta = 0");
    require(eta_grid.size() == 1 && eta_grid.front() == 0.0, "null studies use the eta grid {0}");
  }
  if (kind == StudyKind::mixture_h0) require(sim.noise == NoiseKind::mixture, "mixture study requires mixture noise");
}

StudySpec default_study(StudyKind kind) {
  StudySpec spec;
  spec.kind = kind;
  switch (kind) {
    case StudyKind::type1:
      for (auto form : {WeightForm::exponential, WeightForm::gaussian, WeightForm::linear}) {
        for (double rho : {0.1, 1.0, 8.0}) spec.fit_weight_specs.push_back({form, rho});
      }
      spec.eta_grid = {0.0};
      break;
    case StudyKind::power:
      spec.generation_specs = exponential_specs({0.1, 1.0, 8.0});
      spec.sample_sizes = {200, 400};
      spec.eta_grid = kPowerEtaGrid;
      break;
    case StudyKind::misspec:
      spec.sim.n = 400;
      spec.generation_specs = exponential_specs({0.1, 8.0});
      spec.fit_weight_specs = exponential_specs({0.1, 0.2, 0.4, 0.9, 1.0, 1.2, 2.0, 8.0, 8.5, 9.0});
      spec.eta_grid = kPowerEtaGrid;
      break;
    case StudyKind::mixture_h0:
      spec.sim.n = 355;
      spec.sim.d = 5;
      spec.sim.noise = NoiseKind::mixture;
      spec.fit_weight_specs = exponential_specs({10.0});
      spec.eta_grid = {0.0};
      break;
    case StudyKind::baseline_compare:
      spec.fit_weight_specs = exponential_specs({10.0});
      spec.eta_grid = comparison_grid(spec.scenario);
      break;
  }
  return spec;
}

const PowerCell& StudyResult::cell(std::string_view method, std::string_view generation, const WeightSpec& fit,
                                   int n, double eta) const {
  for (const auto& c : cells) {
    if (c.method == method && c.generation == generation && c.fit == fit && c.n == n && c.eta == eta) return c;
  }
  throw UsageError("no study cell for " + std::string(method) + " " + std::string(generation) + " " + fit.label());
}

std::vector<double> comparison_grid(int scenario) {
  const double scale = 20.0 / comparison_scenario(scenario).interacting_cpgs;
  std::vector<double> out;
  for (double g : kComparisonBaseGrid) out.push_back(g * scale);
  return out;
}

double ks_uniform(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - values[i], values[i] - static_cast<double>(i) / n});
  }
  return d;
}

StudyResult run_type1_study(const StudySpec& spec) {
  require(spec.kind == StudyKind::type1, "expected a type1 study");
  spec.validate();
  return run_simulation_study(spec);
}

StudyResult run_power_study(const StudySpec& spec) {
  require(spec.kind == StudyKind::power, "expected a power study");
  spec.validate();
  return run_simulation_study(spec);
}

StudyResult run_misspec_study(const StudySpec& spec) {
  require(spec.kind == StudyKind::misspec, "expected a misspec study");
  spec.validate();
  return run_simulation_study(spec);
}

StudyResult run_mixture_h0_study(const StudySpec& spec) {
  require(spec.kind == StudyKind::mixture_h0, "expected a mixture_h0 study");
  spec.validate();
  return run_simulation_study(spec);
}

StudyResult run_baseline_comparison(const StudySpec& spec) {
  require(spec.kind == StudyKind::baseline_compare, "expected a baseline_compare study");
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const ArrayContext context(spec.array);
  const ComparisonScenario& scenario = comparison_scenario(spec.scenario);
  const SplineBasis basis(spec.basis_size);
  const Eigen::MatrixXd penalty = penalty_matrix(basis);
  const std::string generation = generation_label(spec, {});
  const int n = spec.array.n;

  auto task = [&](int r) {
    std::vector<PValueRecord> records;
    // Curves are never materialized: integrals go through the smoother.
    const ArrayDraw draw = context.draw(static_cast<std::uint64_t>(r), false);
    DesignCache cache(
        [&](const Eigen::MatrixXd& q) { return Eigen::MatrixXd(draw.levels * (context.smoother().transpose() * q)); },
        context.grid(), draw.w, draw.g, {context.snp_position_unit()}, basis, penalty, spec.search);
    BaselineInput input;
    input.w = draw.w;
    input.g = draw.g;
    input.snp_positions = {context.snp_position_bp()};
    input.cpg_positions = context.cpg_positions();
    input.cpg_levels = draw.levels;
    for (double gamma : spec.eta_grid) {
      input.y = comparison_phenotype(draw, scenario, gamma, context.nearest());
      for (const auto& fit : spec.fit_weight_specs) {
        records.push_back({r, n, generation, gamma, fit.label(), std::string(kProposed),
                           proposed_p(cache.prepared(fit), input.y)});
      }
      // Bonferroni-adjusted minimum p: rejects exactly when some pair is
      // significant at alpha / n_tests.
      const BaselineResult base = pairwise_baseline(input, 0, spec.window_bp, spec.alpha_level);
      double min_p = 1.0;
      for (const auto& pair : base.pairs) min_p = std::min(min_p, pair.p_value);
      const double adjusted = std::min(1.0, min_p * base.n_tests);
      for (const auto& fit : spec.fit_weight_specs) {
        records.push_back({r, n, generation, gamma, fit.label(), std::string(kBaseline), adjusted});
      }
    }
    return records;
  };
  StudyResult result = gather(spec, run_replicates(spec.replicates, resolve_workers(spec), task));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

StudyResult run_study(const StudySpec& spec) {
  switch (spec.kind) {
    case StudyKind::type1: return run_type1_study(spec);
    case StudyKind::power: return run_power_study(spec);
    case StudyKind::misspec: return run_misspec_study(spec);
    case StudyKind::mixture_h0: return run_mixture_h0_study(spec);
    case StudyKind::baseline_compare: return run_baseline_comparison(spec);
  }
  throw UsageError("unknown study kind");
}

int default_worker_count() {
  const char* env = std::getenv("METHSNP_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw UsageError("METHSNP_WORKERS must be a positive integer");
  return static_cast<int>(v);
}

void write_study_outputs(const StudyResult& result, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  auto open = [&directory](const char* name) {
    std::ofstream out(directory / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (directory / name).string());
    return out;
  };

  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"method", c.method},
                     {"generation", c.generation},
                     {"fit_spec", c.fit.label()},
                     {"N", c.n},
                     {"eta", c.eta},
                     {"replicates", c.replicates},
                     {"rejections", c.rejections},
                     {"power", c.power},
                     {"se", c.se},
                     {"ks", c.ks}});
  }
  nlohmann::json exclusions = nlohmann::json::array();
  for (const auto& e : result.exclusions) exclusions.push_back({{"replicate", e.replicate}, {"reason", e.reason}});
  const nlohmann::json doc = {{"study", std::string(to_string(result.spec.kind))},
                              {"seed", result.spec.kind == StudyKind::baseline_compare ? result.spec.array.seed
                                                                                       : result.spec.sim.seed},
                              {"spec", to_json(result.spec)},
                              {"replicates_requested", result.spec.replicates},
                              {"replicates_used", result.replicates_used},
                              {"exclusions", exclusions},
                              {"failed", result.failed},
                              {"failure", result.failure},
                              {"cells", cells}};
  open("study_result.json") << doc.dump(2) << '\n';

  {
    auto out = open("pvalues.csv");
    out << "replicate,fit_spec,p,N,generation,eta,method\n";
    for (const auto& r : result.pvalues) {
      out << r.replicate << ',' << r.fit_spec << ',' << format_double(r.p) << ',' << r.n << ',' << r.generation
          << ',' << format_double(r.eta) << ',' << r.method << '\n';
    }
  }
  {
    auto out = open("power.csv");
    out << "eta,rho_fit,N,power,se,form_fit,generation,method,replicates,rejections\n";
    for (const auto& c : result.cells) {
      out << format_double(c.eta) << ',' << format_double(c.fit.rho) << ',' << c.n << ',' << format_double(c.power)
          << ',' << format_double(c.se) << ',' << to_string(c.fit.form) << ',' << c.generation << ',' << c.method
          << ',' << c.replicates << ',' << c.rejections << '\n';
    }
  }
  {
    // Null cells only: expected (k - 0.5) / n against the k-th smallest p.
    auto out = open("qq.csv");
    out << "fit_spec,expected_quantile,observed_p,N,generation,method\n";
    std::map<std::string, std::vector<double>> groups;
    std::vector<std::pair<std::string, const PValueRecord*>> order;
    for (const auto& r : result.pvalues) {
      if (r.eta != 0.0) continue;
      const std::string key = r.method + '|' + r.generation + '|' + std::to_string(r.n) + '|' + r.fit_spec;
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) order.emplace_back(key, &r);
      it->second.push_back(r.p);
    }
    for (const auto& [key, first] : order) {
      auto ps = groups[key];
      std::sort(ps.begin(), ps.end());
      for (std::size_t k = 0; k < ps.size(); ++k) {
        out << first->fit_spec << ',' << format_double((static_cast<double>(k) + 0.5) / ps.size()) << ','
            << format_double(ps[k]) << ',' << first->n << ',' << first->generation << ',' << first->method << '\n';
      }
    }
  }
  const nlohmann::json timing = {{"wall_seconds", result.wall_seconds},
                                 {"workers", result.spec.workers > 0 ? result.spec.workers : default_worker_count()}};
  open("timing.json") << timing.dump(2) << '\n';
}

}  // namespace methsnp
