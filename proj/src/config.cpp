#include "methsnp/config.hpp"

#include "methsnp/error.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace methsnp {

namespace {

// Reads keys from one JSON object and rejects any key left unread.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw UsageError(where() + "must be a table/object");
  }

  template <typename T>
  void read(const char* key, T& value) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      value = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError("configuration key '" + path_ + key + "' has the wrong type");
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  std::string child_path(const char* key) const { return path_ + key + "."; }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw UsageError("unknown configuration key '" + path_ + key + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "configuration " : "configuration key '" + path_ + "' "; }

  const nlohmann::json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<WeightSpec> weight_specs_from(const nlohmann::json& doc, const std::string& key) {
  if (!doc.is_array()) throw UsageError("configuration key '" + key + "' must be a list");
  std::vector<WeightSpec> out;
  for (const auto& item : doc) {
    if (!item.is_string()) throw UsageError("configuration key '" + key + "' must list \"form:rho\" strings");
    out.push_back(parse_weight_spec(item.get<std::string>()));
  }
  return out;
}

nlohmann::json weight_specs_to_json(const std::vector<WeightSpec>& specs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& w : specs) out.push_back(w.label());
  return out;
}

nlohmann::json smoothing_to_json(const SmoothingConfig& c) {
  return {{"k", c.k}, {"h_min", c.h_min}, {"grid_size", c.grid_size}};
}

void read_smoothing(const nlohmann::json& doc, const std::string& path, SmoothingConfig& c) {
  ObjectReader r(doc, path);
  r.read("k", c.k);
  r.read("h_min", c.h_min);
  r.read("grid_size", c.grid_size);
  r.finish();
}

nlohmann::json mixture_to_json(const MixtureNoise& m) {
  auto component = [](const MixtureComponent& c) {
    return nlohmann::json{{"mean", c.mean}, {"variance", c.variance}, {"weight", c.weight}};
  };
  return {{"first", component(m.first)}, {"second", component(m.second)}};
}

void read_mixture(const nlohmann::json& doc, const std::string& path, MixtureNoise& m) {
  ObjectReader r(doc, path);
  for (auto [key, comp] : {std::pair{"first", &m.first}, std::pair{"second", &m.second}}) {
    if (const auto* c = r.child(key)) {
      ObjectReader cr(*c, r.child_path(key));
      cr.read("mean", comp->mean);
      cr.read("variance", comp->variance);
      cr.read("weight", comp->weight);
      cr.finish();
    }
  }
  r.finish();
}

template <typename Enum, typename Parse>
void read_enum(ObjectReader& r, const char* key, Enum& value, Parse parse) {
  std::string text;
  bool present = false;
  if (const auto* c = r.child(key)) {
    if (!c->is_string()) throw UsageError(std::string("configuration key '") + key + "' must be a string");
    text = c->get<std::string>();
    present = true;
  }
  if (present) value = parse(text);
}

nlohmann::json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  throw UsageError("unsupported TOML value (dates and times are not accepted)");
}

}  // namespace

WeightSpec parse_weight_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw UsageError("weight spec must look like form:rho, got '" + std::string(text) + "'");
  WeightSpec spec;
  spec.form = parse_weight_form(text.substr(0, colon));
  const std::string rho(text.substr(colon + 1));
  std::size_t used = 0;
  try {
    spec.rho = std::stod(rho, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != rho.size()) throw UsageError("invalid rho in weight spec '" + std::string(text) + "'");
  spec.validate();
  return spec;
}

nlohmann::json to_json(const SimConfig& c) {
  const auto& p = c.profiles;
  return {{"n", c.n},
          {"d", c.d},
          {"maf_range", {c.maf_lo, c.maf_hi}},
          {"alpha", c.alpha_or_default()},
          {"eta", c.eta_or_zero()},
          {"zeta0", c.zeta0},
          {"zeta", c.zeta},
          {"covariate_sd", c.covariate_sd},
          {"delta", std::string(to_string(c.delta))},
          {"weight", c.weight_spec.label()},
          {"noise", std::string(to_string(c.noise))},
          {"snr", c.snr},
          {"mixture", mixture_to_json(c.mixture)},
          {"seed", c.seed},
          {"sigma_t", c.sigma_t},
          {"profiles",
           {{"count", p.count},
            {"sites", p.sites},
            {"region_start", p.region_start},
            {"region_length", p.region_length},
            {"sinusoids", p.sinusoids},
            {"site_noise_sd", p.site_noise_sd}}},
          {"smoothing", smoothing_to_json(c.smoothing)}};
}

SimConfig sim_config_from_json(const nlohmann::json& doc, SimConfig c) {
  ObjectReader r(doc, "sim.");
  r.read("n", c.n);
  r.read("d", c.d);
  if (const auto* m = r.child("maf_range")) {
    if (!m->is_array() || m->size() != 2 || !(*m)[0].is_number() || !(*m)[1].is_number()) {
      throw UsageError("configuration key 'sim.maf_range' must be [lo, hi]");
    }
    c.maf_lo = (*m)[0].get<double>();
    c.maf_hi = (*m)[1].get<double>();
  }
  r.read("alpha", c.alpha);
  r.read("eta", c.eta);
  r.read("zeta0", c.zeta0);
  r.read("zeta", c.zeta);
  r.read("covariate_sd", c.covariate_sd);
  read_enum(r, "delta", c.delta, parse_delta_kind);
  read_enum(r, "weight", c.weight_spec, parse_weight_spec);
  read_enum(r, "noise", c.noise, parse_noise_kind);
  r.read("snr", c.snr);
  if (const auto* m = r.child("mixture")) read_mixture(*m, r.child_path("mixture"), c.mixture);
  r.read("seed", c.seed);
  r.read("sigma_t", c.sigma_t);
  if (const auto* p = r.child("profiles")) {
    ObjectReader pr(*p, r.child_path("profiles"));
    pr.read("count", c.profiles.count);
    pr.read("sites", c.profiles.sites);
    pr.read("region_start", c.profiles.region_start);
    pr.read("region_length", c.profiles.region_length);
    pr.read("sinusoids", c.profiles.sinusoids);
    pr.read("site_noise_sd", c.profiles.site_noise_sd);
    pr.finish();
  }
  if (const auto* s = r.child("smoothing")) read_smoothing(*s, r.child_path("smoothing"), c.smoothing);
  r.finish();
  // An empty alpha/eta list means the default, so resizing D alone works.
  if (doc.contains("d") && !doc.contains("alpha")) c.alpha.clear();
  if (doc.contains("d") && !doc.contains("eta")) c.eta.clear();
  c.validate();
  return c;
}

nlohmann::json to_json(const ArrayDesign& a) {
  return {{"n", a.n},
          {"cpg_count", a.cpg_count},
          {"region_start", a.region_start},
          {"region_length", a.region_length},
          {"profiles", a.profiles},
          {"sinusoids", a.sinusoids},
          {"site_noise_sd", a.site_noise_sd},
          {"sigma_t", a.sigma_t},
          {"maf", a.maf},
          {"age_range", {a.age_lo, a.age_hi}},
          {"male_fraction", a.male_fraction},
          {"mixture", mixture_to_json(a.mixture)},
          {"seed", a.seed},
          {"smoothing", smoothing_to_json(a.smoothing)}};
}

ArrayDesign array_design_from_json(const nlohmann::json& doc, ArrayDesign a) {
  ObjectReader r(doc, "array.");
  r.read("n", a.n);
  r.read("cpg_count", a.cpg_count);
  r.read("region_start", a.region_start);
  r.read("region_length", a.region_length);
  r.read("profiles", a.profiles);
  r.read("sinusoids", a.sinusoids);
  r.read("site_noise_sd", a.site_noise_sd);
  r.read("sigma_t", a.sigma_t);
  r.read("maf", a.maf);
  if (const auto* ages = r.child("age_range")) {
    if (!ages->is_array() || ages->size() != 2 || !(*ages)[0].is_number() || !(*ages)[1].is_number()) {
      throw UsageError("configuration key 'array.age_range' must be [lo, hi]");
    }
    a.age_lo = (*ages)[0].get<double>();
    a.age_hi = (*ages)[1].get<double>();
  }
  r.read("male_fraction", a.male_fraction);
  if (const auto* m = r.child("mixture")) read_mixture(*m, r.child_path("mixture"), a.mixture);
  r.read("seed", a.seed);
  if (const auto* s = r.child("smoothing")) read_smoothing(*s, r.child_path("smoothing"), a.smoothing);
  r.finish();
  a.validate();
  return a;
}

nlohmann::json to_json(const StudySpec& s) {
  nlohmann::json doc = {{"study", std::string(to_string(s.kind))},
                        {"replicates", s.replicates},
                        {"fit_weight_specs", weight_specs_to_json(s.fit_weight_specs)},
                        {"eta_grid", s.eta_grid},
                        {"alpha_level", s.alpha_level},
                        {"basis_size", s.basis_size},
                        {"lambda_search",
                         {{"log10_lo", s.search.log10_lo},
                          {"log10_hi", s.search.log10_hi},
                          {"coarse_points", s.search.coarse_points},
                          {"tolerance", s.search.tolerance}}},
                        {"max_exclusion_fraction", s.max_exclusion_fraction}};
  if (s.kind == StudyKind::baseline_compare) {
    doc["scenario"] = s.scenario;
    doc["window_bp"] = s.window_bp;
    doc["array"] = to_json(s.array);
  } else {
    doc["generation_specs"] = weight_specs_to_json(s.generations());
    doc["sample_sizes"] = s.sizes();
    doc["sim"] = to_json(s.sim);
  }
  return doc;
}

StudySpec study_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw UsageError("study configuration must be a table/object");
  auto kind_it = doc.find("study");
  if (kind_it == doc.end() || !kind_it->is_string()) throw UsageError("study configuration needs a 'study' kind");
  StudySpec s = default_study(parse_study_kind(kind_it->get<std::string>()));

  ObjectReader r(doc, "");
  r.child("study");
  r.read("replicates", s.replicates);
  if (const auto* sim = r.child("sim")) s.sim = sim_config_from_json(*sim, s.sim);
  if (const auto* w = r.child("fit_weight_specs")) s.fit_weight_specs = weight_specs_from(*w, "fit_weight_specs");
  if (const auto* w = r.child("generation_specs")) s.generation_specs = weight_specs_from(*w, "generation_specs");
  r.read("eta_grid", s.eta_grid);
  r.read("sample_sizes", s.sample_sizes);
  r.read("alpha_level", s.alpha_level);
  r.read("workers", s.workers);
  r.read("basis_size", s.basis_size);
  if (const auto* l = r.child("lambda_search")) {
    ObjectReader lr(*l, "lambda_search.");
    lr.read("log10_lo", s.search.log10_lo);
    lr.read("log10_hi", s.search.log10_hi);
    lr.read("coarse_points", s.search.coarse_points);
    lr.read("tolerance", s.search.tolerance);
    lr.finish();
  }
  r.read("max_exclusion_fraction", s.max_exclusion_fraction);
  r.read("scenario", s.scenario);
  r.read("window_bp", s.window_bp);
  if (const auto* a = r.child("array")) s.array = array_design_from_json(*a, s.array);
  r.finish();
  if (s.kind == StudyKind::baseline_compare && !doc.contains("eta_grid")) s.eta_grid = comparison_grid(s.scenario);
  s.validate();
  return s;
}

void AnalysisOptions::validate() const {
  smoothing.validate();
  weight.validate();
  if (basis_size < 4) throw UsageError("basis_size must be at least 4");
  if (!(search.log10_lo < search.log10_hi) || search.coarse_points < 3 || !(search.tolerance > 0.0)) {
    throw UsageError("invalid lambda_search settings");
  }
  if (!(window_bp > 0.0)) throw UsageError("window_bp must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
}

nlohmann::json to_json(const AnalysisOptions& o) {
  return {{"smoothing", smoothing_to_json(o.smoothing)},
          {"weight", o.weight.label()},
          {"basis_size", o.basis_size},
          {"lambda_search",
           {{"log10_lo", o.search.log10_lo},
            {"log10_hi", o.search.log10_hi},
            {"coarse_points", o.search.coarse_points},
            {"tolerance", o.search.tolerance}}},
          {"binary", o.binary},
          {"first_stage_covariates", o.first_stage_covariates},
          {"window_bp", o.window_bp},
          {"alpha", o.alpha}};
}

AnalysisOptions analysis_options_from_json(const nlohmann::json& doc, AnalysisOptions o) {
  ObjectReader r(doc, "");
  if (const auto* s = r.child("smoothing")) read_smoothing(*s, r.child_path("smoothing"), o.smoothing);
  std::string weight;
  r.read("weight", weight);
  if (!weight.empty()) o.weight = parse_weight_spec(weight);
  r.read("basis_size", o.basis_size);
  if (const auto* l = r.child("lambda_search")) {
    ObjectReader lr(*l, "lambda_search.");
    lr.read("log10_lo", o.search.log10_lo);
    lr.read("log10_hi", o.search.log10_hi);
    lr.read("coarse_points", o.search.coarse_points);
    lr.read("tolerance", o.search.tolerance);
    lr.finish();
  }
  r.read("binary", o.binary);
  r.read("first_stage_covariates", o.first_stage_covariates);
  r.read("window_bp", o.window_bp);
  r.read("alpha", o.alpha);
  r.finish();
  o.validate();
  return o;
}

nlohmann::json parse_toml(std::string_view text, std::string_view source) {
  try {
    const toml::table table = toml::parse(text, source);
    return toml_to_json(table);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "invalid TOML in " << source << " (line " << e.source().begin.line << "): " << e.description();
    throw UsageError(os.str());
  }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read configuration file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (path.extension() == ".toml") return parse_toml(text, path.string());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace methsnp
