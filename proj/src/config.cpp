#include "itrl/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace itrl::config {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::string key;
  std::function<void(AppConfig&, const std::string&)> set;
  std::function<std::string(const AppConfig&)> get;
};

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: invalid integer for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: invalid number for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: invalid bool for " + key + ": '" + v + "'");
}

#define INT_FIELD(name, type)                                              \
  Field{#name,                                                             \
        [](AppConfig& c, const std::string& v) {                           \
          c.name = static_cast<type>(parse_int(#name, v));                 \
        },                                                                 \
        [](const AppConfig& c) { return std::to_string(c.name); }}

#define DBL_FIELD(name)                                                    \
  Field{#name,                                                             \
        [](AppConfig& c, const std::string& v) {                           \
          c.name = parse_double(#name, v);                                 \
        },                                                                 \
        [](const AppConfig& c) { return fmt_double(c.name); }}

#define BOOL_FIELD(name)                                                   \
  Field{#name,                                                             \
        [](AppConfig& c, const std::string& v) {                           \
          c.name = parse_bool(#name, v);                                   \
        },                                                                 \
        [](const AppConfig& c) { return c.name ? std::string("true")       \
                                               : std::string("false"); }}

#define STR_FIELD(name)                                                    \
  Field{#name,                                                             \
        [](AppConfig& c, const std::string& v) { c.name = v; },            \
        [](const AppConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      INT_FIELD(eta, std::size_t),
      INT_FIELD(gamma, std::size_t),
      INT_FIELD(phi, int),
      INT_FIELD(group_size, int),
      INT_FIELD(gen_budget, int),
      DBL_FIELD(temperature),
      DBL_FIELD(top_p),
      INT_FIELD(history_budget, int),
      DBL_FIELD(eps_low),
      DBL_FIELD(eps_high),
      DBL_FIELD(icepop_alpha),
      DBL_FIELD(icepop_beta),
      DBL_FIELD(sigma_guard),
      STR_FIELD(advantage_scope),
      BOOL_FIELD(literal_denominator),
      BOOL_FIELD(use_efficiency_reward),
      DBL_FIELD(verifier_timeout_s),
      STR_FIELD(policy),
      STR_FIELD(endpoint),
      STR_FIELD(model),
      INT_FIELD(seed, std::uint64_t),
      DBL_FIELD(stochastic_p_correct),
      DBL_FIELD(stochastic_p_summary),
      DBL_FIELD(stochastic_p_malformed),
      DBL_FIELD(logprob_divergence),
      INT_FIELD(concurrency, int),
      INT_FIELD(max_in_flight, int),
  };
  return f;
}

#undef INT_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

void set_field(AppConfig& cfg, const std::string& key,
               const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

void validate(const AppConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(cfg.eta >= 1, "eta must be >= 1");
  require(cfg.gamma >= 1, "gamma must be >= 1");
  require(cfg.phi >= 1, "phi must be >= 1");
  require(cfg.group_size >= 1, "group_size must be >= 1");
  require(cfg.gen_budget >= 1, "gen_budget must be >= 1");
  require(cfg.history_budget >= 1, "history_budget must be >= 1");
  require(cfg.eps_low > 0.0, "eps_low must be > 0");
  require(cfg.eps_high > 0.0, "eps_high must be > 0");
  require(cfg.icepop_alpha > 0.0, "icepop_alpha must be > 0");
  require(cfg.icepop_beta >= cfg.icepop_alpha,
          "icepop_beta must be >= icepop_alpha");
  require(cfg.sigma_guard > 0.0, "sigma_guard must be > 0");
  require(cfg.advantage_scope == "trajectory_level" ||
              cfg.advantage_scope == "output_level",
          "advantage_scope must be trajectory_level or output_level");
  require(cfg.verifier_timeout_s > 0.0, "verifier_timeout_s must be > 0");
  require(cfg.policy == "scripted" || cfg.policy == "stochastic" ||
              cfg.policy == "wire",
          "policy must be scripted, stochastic, or wire");
  require(cfg.concurrency >= 1, "concurrency must be >= 1");
  require(cfg.max_in_flight >= 1, "max_in_flight must be >= 1");
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void apply_env_overrides(AppConfig& cfg) {
  for (const Field& f : fields()) {
    const std::string var = "ITRL_" + upper(f.key);
    if (const char* v = std::getenv(var.c_str())) f.set(cfg, v);
  }
}

}  // namespace

rollout::RolloutConfig AppConfig::rollout_config() const {
  rollout::RolloutConfig rc;
  rc.phi = phi;
  rc.group_size = group_size;
  rc.gen_budget = gen_budget;
  rc.temperature = temperature;
  rc.top_p = top_p;
  rc.history_budget = history_budget;
  rc.seed = seed;
  rc.concurrency = concurrency;
  return rc;
}

objective::ObjectiveConfig AppConfig::objective_config() const {
  objective::ObjectiveConfig oc;
  oc.eps_low = eps_low;
  oc.eps_high = eps_high;
  oc.icepop_alpha = icepop_alpha;
  oc.icepop_beta = icepop_beta;
  oc.sigma_guard = sigma_guard;
  oc.advantage_scope = advantage_scope == "output_level"
                           ? objective::AdvantageScope::kOutputLevel
                           : objective::AdvantageScope::kTrajectoryLevel;
  oc.literal_denominator = literal_denominator;
  return oc;
}

AppConfig parse_config(const std::string& text) {
  AppConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() &&
           std::isspace(static_cast<unsigned char>(line[start])))
      ++start;
    if (start >= line.size()) continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not key=value");
    set_field(cfg, line.substr(start, eq - start), line.substr(eq + 1));
  }
  apply_env_overrides(cfg);
  validate(cfg);
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const AppConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

bool operator==(const AppConfig& a, const AppConfig& b) {
  for (const Field& f : fields())
    if (f.get(a) != f.get(b)) return false;
  return true;
}

}  // namespace itrl::config
