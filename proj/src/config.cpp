#include "vsrd/config.hpp"

#include "vsrd/expression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace vsrd {

using nlohmann::json;

ConfigError::ConfigError(const std::string& field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(field) {}

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void expect_object(const json& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : node.items())
    if (!allowed.count(item.key())) throw ConfigError(join(path, item.key()), "unknown key");
}

void read(const json& node, const std::string& path, const char* key, double& out) {
  if (!node.contains(key)) return;
  const json& v = node.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw ConfigError(join(path, key), "must be finite");
}

void read(const json& node, const std::string& path, const char* key, int& out) {
  if (!node.contains(key)) return;
  const json& v = node.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  out = v.get<int>();
}

void read(const json& node, const std::string& path, const char* key, bool& out) {
  if (!node.contains(key)) return;
  const json& v = node.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  out = v.get<bool>();
}

void read(const json& node, const std::string& path, const char* key, std::string& out) {
  if (!node.contains(key)) return;
  const json& v = node.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  out = v.get<std::string>();
}

template <class T>
void read(const json& node, const std::string& path, const char* key, std::vector<T>& out) {
  if (!node.contains(key)) return;
  const json& v = node.at(key);
  const std::string field = join(path, key);
  if (!v.is_array()) throw ConfigError(field, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = field + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!v[i].is_number_integer()) throw ConfigError(item, "expected an integer");
    } else {
      if (!v[i].is_number()) throw ConfigError(item, "expected a number");
    }
    out.push_back(v[i].get<T>());
  }
}

std::vector<std::pair<std::string, double>> parameter_fields(const ModelParams& params) {
  if (const auto* p = std::get_if<TwoSpeciesParams>(&params))
    return {{"d_L", p->d_L}, {"d_l", p->d_l}, {"lambda", p->lambda}, {"gamma", p->gamma}};
  const auto& q = std::get<FourSpeciesParams>(params);
  return {{"d_L", q.d_L},     {"d_P", q.d_P},   {"d_l", q.d_l},       {"d_p", q.d_p},
          {"alpha", q.alpha}, {"beta", q.beta}, {"lambda", q.lambda}, {"gamma", q.gamma},
          {"sigma", q.sigma}, {"kappa", q.kappa}, {"eta", q.eta},     {"xi", q.xi}};
}

double* parameter_slot(ModelParams& params, const std::string& name) {
  if (auto* p = std::get_if<TwoSpeciesParams>(&params)) {
    if (name == "d_L") return &p->d_L;
    if (name == "d_l") return &p->d_l;
    if (name == "lambda") return &p->lambda;
    if (name == "gamma") return &p->gamma;
    return nullptr;
  }
  auto& q = std::get<FourSpeciesParams>(params);
  for (auto [key, slot] : {std::pair{"d_L", &q.d_L}, {"d_P", &q.d_P}, {"d_l", &q.d_l}, {"d_p", &q.d_p},
                           {"alpha", &q.alpha}, {"beta", &q.beta}, {"lambda", &q.lambda}, {"gamma", &q.gamma},
                           {"sigma", &q.sigma}, {"kappa", &q.kappa}, {"eta", &q.eta}, {"xi", &q.xi}})
    if (name == key) return slot;
  return nullptr;
}

void positive(double value, const std::string& field) {
  if (!(value > 0.0)) throw ConfigError(field, "must be positive");
}

}  // namespace

RunConfig RunConfig::defaults(const std::string& model) {
  RunConfig c;
  c.model = model;
  if (model == "two-species") return c;
  if (model != "four-species") throw ConfigError("model", "expected \"two-species\" or \"four-species\"");
  c.params = FourSpeciesParams{};
  c.initial_data = "paper-4species";
  c.mesh = {13, 1};
  c.time = {0.01, 3.0};
  c.options.snapshot_times = {0.0, 0.13, 1.56, 3.0};
  return c;
}

RunConfig RunConfig::from_json(const json& doc) {
  expect_object(doc, "", {"model", "params", "mesh", "gamma2", "time", "initial_data", "options", "convergence",
                          "decay", "gap"});
  std::string model = "two-species";
  read(doc, "", "model", model);
  RunConfig c = defaults(model);

  if (doc.contains("params")) {
    const json& p = doc.at("params");
    std::set<std::string> allowed;
    for (const auto& f : parameter_fields(c.params)) allowed.insert(f.first);
    expect_object(p, "params", allowed);
    for (const auto& item : p.items()) read(p, "params", item.key().c_str(), *parameter_slot(c.params, item.key()));
  }
  if (doc.contains("mesh")) {
    const json& m = doc.at("mesh");
    expect_object(m, "mesh", {"rings", "refinements"});
    read(m, "mesh", "rings", c.mesh.rings);
    read(m, "mesh", "refinements", c.mesh.refinements);
  }
  if (doc.contains("gamma2")) {
    if (c.model != "four-species") throw ConfigError("gamma2", "only used by the four-species model");
    const json& g = doc.at("gamma2");
    expect_object(g, "gamma2", {"theta_min", "theta_max"});
    read(g, "gamma2", "theta_min", c.gamma2.theta_min);
    read(g, "gamma2", "theta_max", c.gamma2.theta_max);
  }
  if (doc.contains("time")) {
    const json& t = doc.at("time");
    expect_object(t, "time", {"tau", "t_final"});
    read(t, "time", "tau", c.time.tau);
    read(t, "time", "t_final", c.time.t_final);
  }
  if (doc.contains("initial_data")) {
    const json& d = doc.at("initial_data");
    const auto layout = species_layout(c.params);
    if (d.is_string()) {
      c.initial_data = d.get<std::string>();
      c.expressions.clear();
    } else if (d.is_object()) {
      std::set<std::string> names;
      for (const auto& s : layout) names.insert(s.name);
      expect_object(d, "initial_data", names);
      c.initial_data.clear();
      c.expressions.clear();
      for (const auto& s : layout) {
        const std::string field = "initial_data." + s.name;
        if (!d.contains(s.name)) throw ConfigError(field, "missing expression");
        if (!d.at(s.name).is_string()) throw ConfigError(field, "expected an expression string");
        c.expressions.push_back(d.at(s.name).get<std::string>());
      }
    } else {
      throw ConfigError("initial_data", "expected a builtin name or an object of expressions");
    }
  }
  if (doc.contains("options")) {
    const json& o = doc.at("options");
    expect_object(o, "options", {"lumping", "snapshot_every", "snapshot_times", "output_dir"});
    read(o, "options", "lumping", c.options.lumping);
    read(o, "options", "snapshot_every", c.options.snapshot_every);
    read(o, "options", "snapshot_times", c.options.snapshot_times);
    read(o, "options", "output_dir", c.options.output_dir);
  }
  if (!doc.contains("options") || !doc.at("options").contains("snapshot_times")) {
    auto& ts = c.options.snapshot_times;
    ts.erase(std::remove_if(ts.begin(), ts.end(), [&](double t) { return t > c.time.t_final; }), ts.end());
  }
  if (doc.contains("convergence")) {
    const json& v = doc.at("convergence");
    expect_object(v, "convergence", {"levels", "taus", "tau_level"});
    read(v, "convergence", "levels", c.convergence.levels);
    read(v, "convergence", "taus", c.convergence.taus);
    read(v, "convergence", "tau_level", c.convergence.tau_level);
  }
  if (doc.contains("decay")) {
    const json& v = doc.at("decay");
    expect_object(v, "decay", {"levels", "tau", "t_final", "fit_entropy"});
    read(v, "decay", "levels", c.decay.levels);
    read(v, "decay", "tau", c.decay.tau);
    read(v, "decay", "t_final", c.decay.t_final);
    read(v, "decay", "fit_entropy", c.decay.fit_entropy);
  }
  if (doc.contains("gap")) {
    const json& v = doc.at("gap");
    expect_object(v, "gap", {"block_size", "max_iterations", "tolerance"});
    read(v, "gap", "block_size", c.gap.block_size);
    read(v, "gap", "max_iterations", c.gap.max_iterations);
    read(v, "gap", "tolerance", c.gap.tolerance);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return from_json(doc);
}

void RunConfig::validate() const {
  for (const auto& [name, value] : parameter_fields(params))
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("params." + name, "must be a positive finite number");
  if (mesh.rings < 1) throw ConfigError("mesh.rings", "must be at least 1");
  if (mesh.refinements < 0) throw ConfigError("mesh.refinements", "must be non-negative");
  if (model == "four-species") {
    if (!(gamma2.theta_min < gamma2.theta_max) || gamma2.theta_max - gamma2.theta_min >= 2.0 * 3.141592653589793)
      throw ConfigError("gamma2", "need theta_min < theta_max with a span below 2*pi");
  }
  positive(time.tau, "time.tau");
  if (!(time.t_final >= time.tau)) throw ConfigError("time.t_final", "must be at least time.tau");

  const auto layout = species_layout(params);
  if (expressions.empty()) {
    const auto names = builtin_initial_data_names();
    if (std::find(names.begin(), names.end(), initial_data) == names.end())
      throw ConfigError("initial_data", "unknown builtin '" + initial_data + "'");
    if (builtin_initial_data(initial_data).fields.size() != layout.size())
      throw ConfigError("initial_data", "builtin '" + initial_data + "' does not match model " + model);
  } else {
    if (expressions.size() != layout.size()) throw ConfigError("initial_data", "one expression per species required");
    for (std::size_t i = 0; i < expressions.size(); ++i) {
      try {
        parse_expression(expressions[i]);
      } catch (const ExpressionError& e) {
        throw ConfigError("initial_data." + layout[i].name, e.what());
      }
    }
  }

  if (options.snapshot_every < 0) throw ConfigError("options.snapshot_every", "must be non-negative");
  for (std::size_t i = 0; i < options.snapshot_times.size(); ++i) {
    const double t = options.snapshot_times[i];
    if (!(t >= 0.0 && t <= time.t_final + 0.5 * time.tau))
      throw ConfigError("options.snapshot_times[" + std::to_string(i) + "]", "outside [0, t_final]");
  }
  if (options.output_dir.empty()) throw ConfigError("options.output_dir", "must not be empty");

  if (convergence.levels < 2) throw ConfigError("convergence.levels", "need at least 2 table rows");
  if (convergence.taus.size() < 2) throw ConfigError("convergence.taus", "need at least 2 time steps");
  for (std::size_t i = 0; i < convergence.taus.size(); ++i)
    positive(convergence.taus[i], "convergence.taus[" + std::to_string(i) + "]");
  if (convergence.tau_level < 0) throw ConfigError("convergence.tau_level", "must be non-negative");

  if (decay.levels.empty()) throw ConfigError("decay.levels", "must not be empty");
  for (std::size_t i = 0; i < decay.levels.size(); ++i) {
    if (decay.levels[i] < 0) throw ConfigError("decay.levels[" + std::to_string(i) + "]", "must be non-negative");
    if (i > 0 && decay.levels[i] <= decay.levels[i - 1])
      throw ConfigError("decay.levels", "must be strictly increasing");
  }
  positive(decay.tau, "decay.tau");
  if (!(decay.t_final >= decay.tau)) throw ConfigError("decay.t_final", "must be at least decay.tau");
  if (decay.fit_entropy != "exact" && decay.fit_entropy != "discrete")
    throw ConfigError("decay.fit_entropy", "expected \"exact\" or \"discrete\"");

  if (gap.block_size < 1) throw ConfigError("gap.block_size", "must be at least 1");
  if (gap.max_iterations < 1) throw ConfigError("gap.max_iterations", "must be at least 1");
  positive(gap.tolerance, "gap.tolerance");
}

json RunConfig::to_json() const {
  json doc;
  doc["model"] = model;
  doc["params"] = json::object();
  for (const auto& [name, value] : parameter_fields(params)) doc["params"][name] = value;
  if (model == "four-species")
    doc["gamma2"] = {{"theta_min", gamma2.theta_min}, {"theta_max", gamma2.theta_max}};
  doc["mesh"] = {{"rings", mesh.rings}, {"refinements", mesh.refinements}};
  doc["time"] = {{"tau", time.tau}, {"t_final", time.t_final}};
  if (expressions.empty()) {
    doc["initial_data"] = initial_data;
  } else {
    const auto layout = species_layout(params);
    json d = json::object();
    for (std::size_t i = 0; i < layout.size(); ++i) d[layout[i].name] = expressions[i];
    doc["initial_data"] = d;
  }
  doc["options"] = {{"lumping", options.lumping},
                    {"snapshot_every", options.snapshot_every},
                    {"snapshot_times", options.snapshot_times},
                    {"output_dir", options.output_dir}};
  doc["convergence"] = {
      {"levels", convergence.levels}, {"taus", convergence.taus}, {"tau_level", convergence.tau_level}};
  doc["decay"] = {{"levels", decay.levels},
                  {"tau", decay.tau},
                  {"t_final", decay.t_final},
                  {"fit_entropy", decay.fit_entropy}};
  doc["gap"] = {{"block_size", gap.block_size}, {"max_iterations", gap.max_iterations}, {"tolerance", gap.tolerance}};
  return doc;
}

InitialData RunConfig::initial_data_fields() const {
  if (expressions.empty()) return builtin_initial_data(initial_data);
  InitialData data;
  data.name = "expressions";
  for (const auto& e : expressions) data.fields.push_back(parse_expression(e));
  return data;
}

Mesh2D RunConfig::build_mesh(int refinements) const {
  return study_mesh(params, mesh.rings, refinements, gamma2.theta_min, gamma2.theta_max);
}

StepperOptions RunConfig::stepper_options() const {
  StepperOptions s;
  s.lumping = options.lumping;
  return s;
}

ConvergenceConfig RunConfig::convergence_config() const {
  const auto* p = std::get_if<TwoSpeciesParams>(&params);
  if (!p) throw ConfigError("model", "convergence studies are defined for the two-species model");
  ConvergenceConfig c;
  c.params = *p;
  c.data = initial_data_fields();
  c.base_rings = mesh.rings;
  c.rows = convergence.levels;
  c.tau = time.tau;
  c.t_final = time.t_final;
  c.taus = convergence.taus;
  c.tau_level = convergence.tau_level;
  c.stepper = stepper_options();
  return c;
}

DecayConfig RunConfig::decay_config() const {
  DecayConfig c;
  c.params = params;
  c.data = initial_data_fields();
  c.base_rings = mesh.rings;
  c.levels = decay.levels;
  c.tau = decay.tau;
  c.t_final = decay.t_final;
  c.gamma2_theta_min = gamma2.theta_min;
  c.gamma2_theta_max = gamma2.theta_max;
  c.fit_exact_entropy = decay.fit_entropy == "exact";
  c.stepper = stepper_options();
  return c;
}

SpectralGapOptions RunConfig::gap_options() const {
  SpectralGapOptions o;
  o.block_size = gap.block_size;
  o.max_iterations = gap.max_iterations;
  o.tolerance = gap.tolerance;
  return o;
}

std::vector<Index> RunConfig::snapshot_steps() const {
  const TimeGrid grid = time_grid();
  std::vector<Index> steps;
  if (options.snapshot_every > 0)
    for (Index n = 0; n <= grid.n_steps; n += options.snapshot_every) steps.push_back(n);
  for (double t : options.snapshot_times)
    steps.push_back(std::min<Index>(grid.n_steps, static_cast<Index>(std::llround(t / grid.tau))));
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

}  // namespace vsrd
