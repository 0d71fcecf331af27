#include "bvmlab/config.hpp"

#include "bvmlab/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace bvmlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(trim(v));
  } catch (const Error&) {
    throw ConfigInvalid(key + ": not a number: '" + v + "'");
  }
}

Index to_index(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) {
    throw ConfigInvalid(key + ": not an integer: '" + v + "'");
  }
  return static_cast<Index>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigInvalid(key + ": not an unsigned integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigInvalid(key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw ConfigInvalid(key + ": empty list");
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define BVMLAB_INDEX_FIELD(name)                                                               \
  {#name,                                                                                      \
   {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.name = to_index(k, v); }, \
    [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define BVMLAB_DOUBLE_FIELD(name)                                                              \
  {#name,                                                                                      \
   {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.name = to_double(k, v); }, \
    [](const ExperimentConfig& c) { return format_double(c.name); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"experiment",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.experiment = trim(v); },
        [](const ExperimentConfig& c) { return c.experiment; }}},
      {"model",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.model = parse_model_kind(trim(v));
          } catch (const std::exception&) {
            throw ConfigInvalid(k + ": unknown model '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) { return std::string(model_name(c.model)); }}},
      {"n_grid",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_grid = to_list(k, v); },
        [](const ExperimentConfig& c) { return join(c.n_grid); }}},
      BVMLAB_INDEX_FIELD(p_max),
      {"prior_kind",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const std::string t = trim(v);
          if (t != "truncation" && t != "smooth") throw ConfigInvalid(k + ": unknown prior '" + v + "'");
          c.prior_kind = t;
        },
        [](const ExperimentConfig& c) { return c.prior_kind; }}},
      BVMLAB_INDEX_FIELD(prior_m),
      BVMLAB_DOUBLE_FIELD(prior_s),
      {"prior_w",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (trim(v) == "auto") {
            c.prior_w.reset();
          } else {
            c.prior_w = to_double(k, v);
          }
        },
        [](const ExperimentConfig& c) {
          return c.prior_w ? format_double(*c.prior_w) : std::string("auto");
        }}},
      BVMLAB_INDEX_FIELD(prior_cap),
      BVMLAB_DOUBLE_FIELD(s_star),
      BVMLAB_DOUBLE_FIELD(radius2),
      BVMLAB_DOUBLE_FIELD(alpha),
      BVMLAB_DOUBLE_FIELD(nu0_sq),
      BVMLAB_DOUBLE_FIELD(c1),
      BVMLAB_DOUBLE_FIELD(c2),
      BVMLAB_INDEX_FIELD(replications),
      {"seed",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); }}},
      {"sampler",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const std::string t = trim(v);
          if (t != "rwm" && t != "importance") throw ConfigInvalid(k + ": unknown sampler '" + v + "'");
          c.sampler = t;
        },
        [](const ExperimentConfig& c) { return c.sampler; }}},
      BVMLAB_INDEX_FIELD(chain_keep),
      BVMLAB_INDEX_FIELD(chain_burn_in),
      BVMLAB_INDEX_FIELD(chain_thin),
      BVMLAB_DOUBLE_FIELD(chain_scale),
      BVMLAB_INDEX_FIELD(is_draws),
      BVMLAB_INDEX_FIELD(mc_draws),
      BVMLAB_INDEX_FIELD(compare_draws),
      BVMLAB_INDEX_FIELD(grid_points),
      BVMLAB_INDEX_FIELD(quadrature_nodes),
      BVMLAB_INDEX_FIELD(surrogate_dim),
      BVMLAB_INDEX_FIELD(pivot_trials),
      BVMLAB_INDEX_FIELD(radius_draws),
      {"write_draws",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.write_draws = to_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.write_draws ? "true" : "false"); }}},
      {"out",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = trim(v); },
        [](const ExperimentConfig& c) { return c.out.string(); }}},
      {"jobs",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.jobs = static_cast<unsigned>(to_u64(k, v));
        },
        [](const ExperimentConfig& c) { return std::to_string(c.jobs); }}},
  };
  return table;
}

#undef BVMLAB_INDEX_FIELD
#undef BVMLAB_DOUBLE_FIELD

std::map<std::string, std::string> flatten(const boost::property_tree::ptree& tree) {
  std::map<std::string, std::string> out;
  auto add = [&](const std::string& key, const std::string& value) {
    if (!out.emplace(key, value).second) throw ConfigInvalid("duplicate key '" + key + "'");
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      add(name, node.data());
    } else {
      for (const auto& [key, leaf] : node) add(key, leaf.data());
    }
  }
  return out;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry = {
      {"validate-bounds", "quadratic-form tail quantiles, exponential-tail crossing, Gaussian norm comparison"},
      {"surrogate", "Gaussian sequence model: closed-form fit, expansions and posterior"},
      {"expansion-rates", "Fisher and Wilks expansion residuals and posterior-mean gap versus n"},
      {"bvm-rates", "Gaussian approximation error on symmetric and shifted ellipsoids versus n"},
      {"coverage", "frequentist coverage of elliptic credible sets"},
      {"contraction", "posterior mass beyond the effective-dimension radius"},
      {"effdim", "effective dimension sandwiches for truncation and smoothing priors"},
      {"prior-compare", "distance between posteriors under two ordered Gaussian priors"},
  };
  return registry;
}

bool is_registered(std::string_view experiment) {
  for (const auto& e : experiment_registry()) {
    if (e.name == experiment) return true;
  }
  return false;
}

PriorSpec ExperimentConfig::prior_for(double n) const {
  if (prior_kind == "truncation") {
    return PriorSpec::truncation(prior_m > 0 ? prior_m : truncation_level(n));
  }
  const double w = prior_w ? *prior_w : tradeoff_w(n, prior_s).w;
  return PriorSpec::smooth(prior_s, w, prior_cap);
}

ExperimentConfig default_config(std::string_view experiment) {
  if (!is_registered(experiment)) {
    throw ConfigInvalid("unknown experiment '" + std::string(experiment) + "'");
  }
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  c.out = std::filesystem::path("results") / c.experiment;
  if (experiment == "surrogate") {
    c.model = ModelKind::gaussian_surrogate;
    c.n_grid = {1000.0};
    c.prior_kind = "smooth";
    c.prior_s = 1.0;
    c.prior_w = 1.0;
  } else if (experiment == "expansion-rates") {
    c.model = ModelKind::logistic;
    c.n_grid = {500.0, 1000.0, 2000.0, 4000.0};
    c.prior_m = 8;
    c.replications = 50;
    c.sampler = "importance";
    c.is_draws = 40000;
  } else if (experiment == "bvm-rates") {
    c.model = ModelKind::log_density;
    c.n_grid = {1000.0, 2000.0, 4000.0, 8000.0};
    c.prior_m = 6;
    c.replications = 30;
    c.sampler = "importance";
    c.is_draws = 200000;
  } else if (experiment == "coverage") {
    c.model = ModelKind::logistic;
    c.n_grid = {2000.0};
    c.prior_kind = "smooth";
    c.prior_s = 1.0;
    c.s_star = 2.0;
    c.alpha = 0.1;
    c.replications = 200;
  } else if (experiment == "contraction") {
    c.model = ModelKind::logistic;
    c.n_grid = {2000.0};
    c.prior_m = 8;
    c.replications = 50;
    c.chain_keep = 40000;
    c.chain_burn_in = 10000;
  } else if (experiment == "effdim") {
    c.model = ModelKind::log_density;
    c.n_grid = {1000.0, 10000.0, 100000.0};
  } else if (experiment == "prior-compare") {
    c.model = ModelKind::gaussian_surrogate;
    c.n_grid = {1000.0};
    c.prior_kind = "smooth";
    c.prior_w = 1.0;
    c.sampler = "importance";
    c.is_draws = 200000;
  }
  return c;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigInvalid(e.what());
  }
  return flatten(tree);
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigInvalid("unknown key '" + key + "'");
  it->second.set(config, key, value);
}

void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings) {
  for (const auto& [k, v] : settings) apply_setting(config, k, v);
}

void validate(const ExperimentConfig& c) {
  if (!is_registered(c.experiment)) throw ConfigInvalid("unknown experiment '" + c.experiment + "'");
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigInvalid(std::string(key) + " must be positive");
  };
  for (double n : c.n_grid) {
    positive("n_grid", n);
    if (n != std::floor(n)) throw ConfigInvalid("n_grid entries must be integers");
  }
  positive("p_max", static_cast<double>(c.p_max));
  positive("replications", static_cast<double>(c.replications));
  positive("chain_keep", static_cast<double>(c.chain_keep));
  positive("chain_thin", static_cast<double>(c.chain_thin));
  positive("is_draws", static_cast<double>(c.is_draws));
  positive("mc_draws", static_cast<double>(c.mc_draws));
  positive("compare_draws", static_cast<double>(c.compare_draws));
  positive("grid_points", static_cast<double>(c.grid_points));
  positive("quadrature_nodes", static_cast<double>(c.quadrature_nodes));
  positive("surrogate_dim", static_cast<double>(c.surrogate_dim));
  positive("pivot_trials", static_cast<double>(c.pivot_trials));
  positive("radius_draws", static_cast<double>(c.radius_draws));
  positive("radius2", c.radius2);
  positive("nu0_sq", c.nu0_sq);
  positive("c1", c.c1);
  positive("c2", c.c2);
  if (c.chain_burn_in < 0) throw ConfigInvalid("chain_burn_in must be non-negative");
  if (c.prior_m < 0 || c.prior_cap < 0) throw ConfigInvalid("prior_m and prior_cap must be non-negative");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigInvalid("alpha must lie in (0, 1)");
  if (c.prior_kind == "smooth" && !(c.prior_s > 0.0)) throw ConfigInvalid("prior_s must be positive");
  if (c.prior_w && !(*c.prior_w >= 0.0)) throw ConfigInvalid("prior_w must be non-negative");
  if (c.quadrature_nodes % 16 != 0) throw ConfigInvalid("quadrature_nodes must be a multiple of 16");
  if (c.chain_scale < 0.0) throw ConfigInvalid("chain_scale must be non-negative");
}

std::map<std::string, std::string> echo(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out.emplace(k, f.get(config));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

}  // namespace bvmlab
