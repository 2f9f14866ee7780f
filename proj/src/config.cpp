#include "nestor/config.hpp"

#include <cstdlib>

#include "nestor/schema_embed.hpp"

namespace nestor {

namespace {

std::string joined(const std::vector<SchemaViolation>& v) {
  std::string out = "invalid config";
  for (const auto& e : v) out += "\n  " + (e.path.empty() ? std::string("/") : e.path) + ": " + e.message;
  return out;
}

template <class T>
void read(const nlohmann::json& obj, const char* key, T& out) {
  if (const auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

Vector to_vector(const nlohmann::json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

Domain inline_domain(const nlohmann::json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "box") {
    if (!d.contains("lo") || !d.contains("hi")) throw ConfigError("/model/domain", "box needs \"lo\" and \"hi\"");
    const Vector lo = to_vector(d.at("lo"));
    const Vector hi = to_vector(d.at("hi"));
    if (lo.size() != hi.size()) throw ConfigError("/model/domain/hi", "length differs from \"lo\"");
    return lo.size() == 1 ? make_interval(lo[0], hi[0]) : make_box(lo, hi);
  }
  const int m = d.value("m", 2);
  if (kind == "paraboloid") return make_paraboloid(m, d.value("flatness", 1.0), d.value("height", 1.0));
  if (kind == "shell") return make_shell(m, d.value("r_inner", 0.0), d.value("r_outer", 1.0));
  return make_pie(d.value("theta0", 0.7853981633974483), d.value("radius", 1.0));
}

Polynomial inline_polynomial(const nlohmann::json& p, int m, const std::string& path) {
  std::vector<Polynomial::Term> terms;
  for (std::size_t i = 0; i < p.at("terms").size(); ++i) {
    const auto& t = p.at("terms")[i];
    Polynomial::Term term{t.at("coef").get<double>(), t.at("pow").get<std::vector<int>>()};
    if (static_cast<int>(term.pow.size()) != m) {
      throw ConfigError(path + "/terms/" + std::to_string(i) + "/pow", "expected " + std::to_string(m) + " exponents");
    }
    terms.push_back(std::move(term));
  }
  return Polynomial(m, std::move(terms));
}

}  // namespace

ConfigError::ConfigError(std::vector<SchemaViolation> violations)
    : Error(ErrorKind::Config, joined(violations)), violations_(std::move(violations)) {}

ConfigError::ConfigError(const std::string& path, const std::string& message)
    : ConfigError(std::vector<SchemaViolation>{{path, message}}) {}

const char* run_config_schema_text() { return detail::kRunConfigSchema; }

const JsonSchema& run_config_schema() {
  static const JsonSchema schema(nlohmann::json::parse(detail::kRunConfigSchema));
  return schema;
}

std::string default_out_dir() {
  const char* env = std::getenv("NESTOR_OUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("nestor-out");
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  auto violations = run_config_schema().validate(doc);
  if (!violations.empty()) throw ConfigError(std::move(violations));
  if (doc.contains("scenario") == doc.contains("model")) {
    throw ConfigError("", "exactly one of \"scenario\" and \"model\" is required");
  }

  RunConfig c;
  read(doc, "seed", c.seed);
  c.scenario_params.seed = c.seed;
  c.nestedness.seed = c.seed;
  c.detection.seed = c.seed;
  if (const auto s = doc.find("scenario"); s != doc.end()) {
    c.scenario = s->at("name").get<std::string>();
    read(*s, "m", c.scenario_params.m);
    read(*s, "theta0", c.scenario_params.theta0);
    read(*s, "flatness", c.scenario_params.flatness);
    read(*s, "inner_radius", c.scenario_params.inner_radius);
  } else {
    c.model_spec = doc.at("model");
  }
  if (const auto q = doc.find("quadrature"); q != doc.end()) {
    if (q->contains("mode")) c.quadrature_mode = quadrature_mode_from_string(q->at("mode").get<std::string>());
    if (q->contains("resolution")) c.resolution = q->at("resolution").get<int>();
  }
  if (const auto s = doc.find("solver"); s != doc.end()) {
    read(*s, "y_nodes", c.solver.y_nodes);
    read(*s, "tol_mass", c.solver.tol_mass);
    read(*s, "epsilon_band", c.solver.epsilon);
    if (s->contains("estimator")) c.solver.estimator = estimator_from_string(s->at("estimator").get<std::string>());
    read(*s, "map_tol", c.solver.map_tol);
    read(*s, "plateau_gap", c.solver.plateau_gap);
    read(*s, "tangential_fraction", c.solver.tangential_fraction);
    read(*s, "zero_speed", c.solver.zero_speed);
    read(*s, "splitting_scan", c.solver.splitting_scan);
    read(*s, "splitting_noise", c.solver.splitting_noise);
  }
  if (const auto n = doc.find("nestedness"); n != doc.end()) {
    read(*n, "monotonicity_stride", c.nestedness.monotonicity_stride);
    read(*n, "probes", c.nestedness.probes);
  }
  if (const auto d = doc.find("detection"); d != doc.end()) {
    read(*d, "sample_points", c.detection.sample_points);
    read(*d, "max_pairs", c.detection.max_pairs);
    read(*d, "y_tests", c.detection.y_tests);
    read(*d, "match_tol", c.detection.match_tol);
    read(*d, "min_separation", c.detection.min_separation);
    read(*d, "max_failure_rate", c.detection.max_failure_rate);
  }
  if (const auto o = doc.find("oracle"); o != doc.end()) {
    read(*o, "source_atoms", c.source_atoms);
    read(*o, "target_atoms", c.target_atoms);
  }
  if (const auto h = doc.find("holder"); h != doc.end() && h->contains("window")) {
    const auto& w = h->at("window");
    c.holder_window = {w[0].get<double>(), w[1].get<double>()};
    if (!(c.holder_window.first < c.holder_window.second)) {
      throw ConfigError("/holder/window", "lower end must be below the upper end");
    }
  }
  if (const auto r = doc.find("reduce_1d"); r != doc.end()) read(*r, "resolution", c.reduce_resolution);
  if (const auto o = doc.find("outputs"); o != doc.end()) {
    read(*o, "curve", c.outputs.curve);
    read(*o, "map", c.outputs.map);
    read(*o, "map_samples", c.outputs.map_samples);
    read(*o, "nestedness", c.outputs.nestedness);
    read(*o, "oracle", c.outputs.oracle);
    read(*o, "holder", c.outputs.holder);
    read(*o, "reduce_1d", c.outputs.reduce_1d);
    read(*o, "timings", c.outputs.timings);
  }
  read(doc, "require_nested", c.require_nested);
  read(doc, "out_dir", c.out_dir);
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  if (scenario) {
    j["scenario"] = {{"name", *scenario},
                     {"m", scenario_params.m},
                     {"theta0", scenario_params.theta0},
                     {"flatness", scenario_params.flatness},
                     {"inner_radius", scenario_params.inner_radius}};
  }
  if (model_spec) j["model"] = *model_spec;
  nlohmann::json q = nlohmann::json::object();
  if (quadrature_mode) q["mode"] = to_string(*quadrature_mode);
  if (resolution) q["resolution"] = *resolution;
  j["quadrature"] = q;
  j["solver"] = {{"y_nodes", solver.y_nodes},
                 {"tol_mass", solver.tol_mass},
                 {"epsilon_band", solver.epsilon},
                 {"estimator", to_string(solver.estimator)},
                 {"map_tol", solver.map_tol},
                 {"plateau_gap", solver.plateau_gap},
                 {"tangential_fraction", solver.tangential_fraction},
                 {"zero_speed", solver.zero_speed},
                 {"splitting_scan", solver.splitting_scan},
                 {"splitting_noise", solver.splitting_noise}};
  j["nestedness"] = {{"monotonicity_stride", nestedness.monotonicity_stride}, {"probes", nestedness.probes}};
  j["detection"] = {{"sample_points", detection.sample_points},
                    {"max_pairs", detection.max_pairs},
                    {"y_tests", detection.y_tests},
                    {"match_tol", detection.match_tol},
                    {"min_separation", detection.min_separation},
                    {"max_failure_rate", detection.max_failure_rate}};
  j["oracle"] = {{"source_atoms", source_atoms}, {"target_atoms", target_atoms}};
  j["holder"] = {{"window", {holder_window.first, holder_window.second}}};
  j["reduce_1d"] = {{"resolution", reduce_resolution}};
  j["outputs"] = {{"curve", outputs.curve},         {"map", outputs.map},
                  {"map_samples", outputs.map_samples}, {"nestedness", outputs.nestedness},
                  {"oracle", outputs.oracle},       {"holder", outputs.holder},
                  {"reduce_1d", outputs.reduce_1d}, {"timings", outputs.timings}};
  j["seed"] = seed;
  j["require_nested"] = require_nested;
  j["out_dir"] = out_dir.empty() ? default_out_dir() : out_dir;
  return j;
}

std::shared_ptr<const Model> build_inline_model(const nlohmann::json& spec, const QuadratureSettings& quad) {
  const Domain dom = inline_domain(spec.at("domain"));
  const int m = dom.dim;
  const auto& tgt = spec.at("target");
  const TargetInterval target{tgt[0].get<double>(), tgt[1].get<double>()};
  if (!(target.lo < target.hi)) throw ConfigError("/model/target", "target interval must satisfy lo < hi");

  std::vector<PolynomialSurplus::Term> terms;
  const auto& st = spec.at("surplus").at("terms");
  for (std::size_t i = 0; i < st.size(); ++i) {
    PolynomialSurplus::Term t{st[i].at("coef").get<double>(), st[i].at("x_pow").get<std::vector<int>>(),
                              st[i].at("y_pow").get<int>()};
    if (static_cast<int>(t.x_pow.size()) != m) {
      throw ConfigError("/model/surplus/terms/" + std::to_string(i) + "/x_pow",
                        "expected " + std::to_string(m) + " exponents");
    }
    terms.push_back(std::move(t));
  }
  auto surplus = std::make_shared<PolynomialSurplus>(m, std::move(terms));

  Model::SourceDensity f = [](PointRef) { return 1.0; };
  if (spec.contains("source_density")) {
    f = [p = inline_polynomial(spec.at("source_density"), m, "/model/source_density")](PointRef x) { return p(x); };
  }
  Model::TargetDensity g = [](double) { return 1.0; };
  if (spec.contains("target_density")) {
    g = [p = inline_polynomial(spec.at("target_density"), 1, "/model/target_density")](double y) {
      Vector v(1);
      v[0] = y;
      return p(v);
    };
  }
  return std::make_shared<const Model>(dom, target, std::move(surplus), std::move(f), std::move(g), quad);
}

}  // namespace nestor
