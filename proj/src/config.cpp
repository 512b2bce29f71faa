#include "qdiscrim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qdiscrim {

using nlohmann::json;

json default_config_json() {
  return json{
      {"model0", {{"omega", 1.0}, {"delta", 1.43}}},
      {"model1", {{"omega", 2.0}, {"delta", 1.43}}},
      {"measurement",
       {{"kappa", 1.0},
        {"eta", 0.5},
        {"dissipator_scaling", "eta_scaled"},
        {"ordering", "paper_FFdag"}}},
      {"initial_state", {{"x", 0.0}, {"y", 0.0}, {"z", 1.0}}},
      {"priors", {{"p0", 0.5}, {"p1", 0.5}}},
      {"cost", {{"c00", 0.0}, {"c01", 1.0}, {"c10", 1.0}, {"c11", 0.0}}},
      {"sim", {{"dt", 1e-3}, {"t_max", 30.0}, {"seed", 42}, {"loglik_mode", "ito_corrected"}}},
      {"experiment",
       {{"estimator", "posterior"},
        {"n_trials", 1},
        {"beta", 0.01},
        {"truth_sampling", "from_prior"},
        {"workers", 1}}},
  };
}

namespace {

constexpr const char* kManifestKey = "_manifest";

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Overlays `user` onto `base`, rejecting keys absent from the schema.
void merge_strict(json& base, const json& user) {
  if (!user.is_object()) throw ConfigError("config root must be a JSON object");
  for (const auto& [section, body] : user.items()) {
    if (section == kManifestKey) continue;
    if (!base.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!base[section].contains(key)) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
      base[section][key] = value;
    }
  }
}

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  const auto dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + spec + "' must look like section.key=value");
  }
  const std::string section = spec.substr(0, dot);
  const std::string key = spec.substr(dot + 1, eq - dot - 1);
  const std::string raw = spec.substr(eq + 1);
  if (!doc.contains(section) || !doc[section].contains(key)) {
    throw ConfigError("unknown config key '" + section + "." + key + "' in override");
  }
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;
  doc[section][key] = std::move(value);
}

class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  double number(const char* section, const char* key) const {
    const json& v = at(section, key);
    if (!v.is_number()) fail(section, key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(section, key, "must be finite");
    return d;
  }

  std::uint64_t unsigned_int(const char* section, const char* key) const {
    const json& v = at(section, key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      fail(section, key, "expected a non-negative integer");
    }
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }

  std::string text(const char* section, const char* key) const {
    const json& v = at(section, key);
    if (!v.is_string()) fail(section, key, "expected a string");
    return v.get<std::string>();
  }

  [[noreturn]] static void fail(const char* section, const char* key, const std::string& why) {
    throw ConfigError(std::string(section) + "." + key + ": " + why);
  }

 private:
  const json& at(const char* section, const char* key) const { return doc_.at(section).at(key); }
  const json& doc_;
};

template <class Enum>
Enum parse_enum(const Reader& r, const char* section, const char* key,
                std::initializer_list<std::pair<const char*, Enum>> choices) {
  const std::string s = r.text(section, key);
  std::string allowed;
  for (const auto& [name, value] : choices) {
    if (s == name) return value;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  Reader::fail(section, key, "'" + s + "' is not one of " + allowed);
}

ExperimentConfig to_experiment(const json& doc) {
  const Reader r(doc);
  const double kappa = r.number("measurement", "kappa");
  const double eta = r.number("measurement", "eta");
  if (kappa < 0.0) Reader::fail("measurement", "kappa", "must be non-negative");
  if (!(eta > 0.0 && eta <= 1.0)) Reader::fail("measurement", "eta", "must lie in (0, 1]");
  const auto scaling = parse_enum<DissipatorScaling>(
      r, "measurement", "dissipator_scaling",
      {{"eta_scaled", DissipatorScaling::eta_scaled}, {"unit", DissipatorScaling::unit}});
  const auto ordering = parse_enum<Ordering>(
      r, "measurement", "ordering",
      {{"paper_FFdag", Ordering::paper_ffdag}, {"standard_FdagF", Ordering::standard_fdagf}});

  ExperimentConfig cfg;
  cfg.pair.model0 = ModelSpec::two_level(r.number("model0", "omega"), r.number("model0", "delta"),
                                         kappa, eta, scaling, ordering);
  cfg.pair.model1 = ModelSpec::two_level(r.number("model1", "omega"), r.number("model1", "delta"),
                                         kappa, eta, scaling, ordering);

  cfg.pair.prior0 = r.number("priors", "p0");
  cfg.pair.prior1 = r.number("priors", "p1");
  if (!(cfg.pair.prior0 > 0.0)) Reader::fail("priors", "p0", "must be positive");
  if (!(cfg.pair.prior1 > 0.0)) Reader::fail("priors", "p1", "must be positive");
  if (std::abs(cfg.pair.prior0 + cfg.pair.prior1 - 1.0) > 1e-12) {
    Reader::fail("priors", "p1", "p0 + p1 must equal 1");
  }

  cfg.pair.cost = CostMatrix{r.number("cost", "c00"), r.number("cost", "c01"),
                             r.number("cost", "c10"), r.number("cost", "c11")};
  if (!(cfg.pair.cost.c01 > cfg.pair.cost.c11)) Reader::fail("cost", "c01", "must exceed c11");
  if (!(cfg.pair.cost.c10 > cfg.pair.cost.c00)) Reader::fail("cost", "c10", "must exceed c00");

  const BlochVector b{r.number("initial_state", "x"), r.number("initial_state", "y"),
                      r.number("initial_state", "z")};
  if (b.x * b.x + b.y * b.y + b.z * b.z > 1.0 + 1e-9) {
    Reader::fail("initial_state", "z", "Bloch vector must lie in the unit ball");
  }
  cfg.rho0 = bloch_to_density(b);

  const double dt = r.number("sim", "dt");
  const double t_max = r.number("sim", "t_max");
  if (!(dt > 0.0)) Reader::fail("sim", "dt", "must be positive");
  if (!(t_max >= dt)) Reader::fail("sim", "t_max", "must be >= sim.dt");
  cfg.grid = SimGrid::make(dt, t_max);
  cfg.base_seed = r.unsigned_int("sim", "seed");
  cfg.loglik_mode = parse_enum<LoglikMode>(
      r, "sim", "loglik_mode",
      {{"ito_corrected", LoglikMode::ito_corrected}, {"paper_literal", LoglikMode::paper_literal}});

  cfg.estimator = parse_enum<Estimator>(
      r, "experiment", "estimator",
      {{"posterior", Estimator::posterior}, {"counting", Estimator::counting}});
  cfg.n_trials = r.unsigned_int("experiment", "n_trials");
  if (cfg.n_trials < 1) Reader::fail("experiment", "n_trials", "must be >= 1");
  cfg.beta = r.number("experiment", "beta");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) Reader::fail("experiment", "beta", "must lie in (0, 1)");
  cfg.truth_sampling = parse_enum<TruthSampling>(r, "experiment", "truth_sampling",
                                                 {{"from_prior", TruthSampling::from_prior},
                                                  {"fixed_H0", TruthSampling::fixed_h0},
                                                  {"fixed_H1", TruthSampling::fixed_h1}});
  const std::uint64_t workers = r.unsigned_int("experiment", "workers");
  if (workers < 1 || workers > 1024) Reader::fail("experiment", "workers", "must be in [1, 1024]");
  cfg.workers = static_cast<unsigned>(workers);

  cfg.validate();
  return cfg;
}

LoadedConfig resolve(const json* user, const std::vector<std::string>& overrides) {
  LoadedConfig out;
  out.resolved = default_config_json();
  if (user != nullptr) merge_strict(out.resolved, *user);
  for (const auto& o : overrides) apply_override(out.resolved, o);
  out.overrides = overrides;
  out.experiment = to_experiment(out.resolved);
  return out;
}

}  // namespace

LoadedConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  json user;
  try {
    user = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                      ": " + e.what());
  }
  return resolve(&user, overrides);
}

LoadedConfig load_config(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

LoadedConfig default_config(const std::vector<std::string>& overrides) {
  return resolve(nullptr, overrides);
}

json manifest_echo(const LoadedConfig& cfg, const std::string& command) {
  json doc = cfg.resolved;
  doc[kManifestKey] = json{{"artifact_version", QDISCRIM_VERSION},
                           {"command", command},
                           {"seed", cfg.experiment.base_seed},
                           {"overrides", cfg.overrides},
                           {"units", "frequencies in gamma, times in 1/gamma"}};
  return doc;
}

}  // namespace qdiscrim
