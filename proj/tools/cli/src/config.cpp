#include "nmf_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nmf::cli {
namespace {

using nlohmann::json;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"prior", {"kind", "q", "delta2", "a", "density", "scale", "nodes", "v"}},
      {"truth", {"kind", "q", "delta2", "a", "density", "scale", "nodes", "v"}},
      {"model", {"sigma2", "alpha"}},
      {"quad", {"hermite_nodes", "slab", "slab_nodes", "mc_samples", "seed"}},
      {"fp", {"damping", "tol", "max_iter", "inits"}},
      {"sim",
       {"n", "p", "seed", "design", "replicates", "grad_tol", "max_iter", "channel_samples",
        "projections", "exact_evidence", "dataset_out"}},
      {"coverage", {"zetas"}},
      {"sweep", {"axis", "grid", "metrics", "svg"}},
  };
  return keys;
}

void check_keys(const RawConfig& raw) {
  for (const auto& [section, kv] : raw) {
    const auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : kv) {
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
    }
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& where, const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& where, const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw ConfigError(where + ": expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_list(const std::string& where, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(where, item));
  return out;
}

class Section {
 public:
  Section(const RawConfig& raw, std::string name) : name_(std::move(name)) {
    const auto it = raw.find(name_);
    if (it != raw.end()) kv_ = &it->second;
  }
  bool present() const { return kv_ != nullptr; }
  const std::string* find(const std::string& key) const {
    if (!kv_) return nullptr;
    const auto it = kv_->find(key);
    return it == kv_->end() ? nullptr : &it->second;
  }
  void get(const std::string& key, double& out) const {
    if (const auto* s = find(key)) out = to_double(name_ + "." + key, *s);
  }
  void get(const std::string& key, int& out) const {
    if (const auto* s = find(key)) out = static_cast<int>(to_int(name_ + "." + key, *s));
  }
  void get_count(const std::string& key, std::size_t& out) const {
    if (const auto* s = find(key)) {
      const long long v = to_int(name_ + "." + key, *s);
      if (v < 0) throw ConfigError(name_ + "." + key + " must be nonnegative");
      out = static_cast<std::size_t>(v);
    }
  }
  void get_seed(const std::string& key, std::uint64_t& out) const {
    if (const auto* s = find(key)) {
      const std::string t = trim(*s);
      std::uint64_t v = 0;
      const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        throw ConfigError(name_ + "." + key + ": expected an unsigned integer");
      }
      out = v;
    }
  }
  void get(const std::string& key, bool& out) const {
    if (const auto* s = find(key)) {
      const std::string t = trim(*s);
      if (t == "true" || t == "1") {
        out = true;
      } else if (t == "false" || t == "0") {
        out = false;
      } else {
        throw ConfigError(name_ + "." + key + ": expected true or false");
      }
    }
  }
  void get(const std::string& key, std::string& out) const {
    if (const auto* s = find(key)) out = trim(*s);
  }
  void get(const std::string& key, std::vector<double>& out) const {
    if (const auto* s = find(key)) out = to_list(name_ + "." + key, *s);
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* kv_ = nullptr;
};

PriorConfig read_prior(const Section& s) {
  PriorConfig p;
  s.get("kind", p.kind);
  s.get("q", p.q);
  s.get("delta2", p.delta2);
  s.get("a", p.a);
  s.get("density", p.density);
  s.get("scale", p.scale);
  s.get("nodes", p.nodes);
  s.get("v", p.v);
  static const std::set<std::string> kinds = {"spike_slab", "gaussian", "three_point", "grid"};
  if (!kinds.count(p.kind)) throw ConfigError("unknown prior kind '" + p.kind + "'");
  static const std::set<std::string> densities = {"laplace", "gaussian", "quartic", "uniform", "custom"};
  if (!densities.count(p.density)) throw ConfigError("unknown grid density '" + p.density + "'");
  return p;
}

json prior_to_json(const PriorConfig& p) {
  json j{{"kind", p.kind}};
  if (p.kind == "spike_slab") {
    j["q"] = p.q;
    j["delta2"] = p.delta2;
  } else if (p.kind == "gaussian") {
    j["delta2"] = p.delta2;
  } else if (p.kind == "three_point") {
    j["q"] = p.q;
  } else {
    j["a"] = p.a;
    j["density"] = p.density;
    if (p.density == "custom") {
      j["v"] = p.v;
    } else {
      j["scale"] = p.scale;
      j["nodes"] = p.nodes;
    }
  }
  return j;
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ConfigError("config values must be scalars or arrays of scalars");
}

}  // namespace

PriorSpec PriorConfig::build() const {
  if (kind == "spike_slab") return PriorSpec::spike_slab(q, delta2);
  if (kind == "gaussian") return PriorSpec::gaussian(delta2);
  if (kind == "three_point") return PriorSpec::three_point(q);
  if (density == "custom") return PriorSpec::grid(a, v);
  if (!(scale > 0.0)) throw InvalidArgument("grid density scale must be positive");
  const double sc = scale;
  std::function<double(double)> pot;
  if (density == "laplace") {
    pot = [sc](double x) { return std::abs(x) / sc; };
  } else if (density == "gaussian") {
    pot = [sc](double x) { return x * x / (2.0 * sc * sc); };
  } else if (density == "quartic") {
    pot = [sc](double x) { return x * x * x * x / sc; };
  } else {
    pot = [](double) { return 0.0; };
  }
  if (nodes < 128) throw InvalidArgument("grid density needs at least 128 nodes");
  return PriorSpec::grid(a, static_cast<std::size_t>(nodes), pot);
}

ProblemSpec RunConfig::problem() const {
  return ProblemSpec(prior.build(), truth ? truth->build() : prior.build(), sigma2, alpha);
}

SimConfig RunConfig::sim_config() const {
  SimConfig c = sim;
  c.p = sim_p ? *sim_p : static_cast<std::size_t>(std::llround(static_cast<double>(sim.n) / alpha));
  if (c.p < 1) c.p = 1;
  return c;
}

RawConfig parse_ini(const std::string& text) {
  // boost's INI reader only knows ';' comments
  std::stringstream cleaned;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] == '#') continue;
    cleaned << line << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RawConfig raw;
  for (const auto& [section, sub] : tree) {
    if (sub.empty()) throw ConfigError("config key '" + section + "' lies outside any section");
    auto& dst = raw[section];
    for (const auto& [key, value] : sub) dst[key] = value.get_value<std::string>();
  }
  return raw;
}

RawConfig parse_json_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (j.is_object() && j.contains("config")) j = j["config"];
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  RawConfig raw;
  for (const auto& [section, sub] : j.items()) {
    if (!sub.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    auto& dst = raw[section];
    for (const auto& [key, value] : sub.items()) {
      if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar_to_string(v);
        dst[key] = joined;
      } else {
        dst[key] = scalar_to_string(value);
      }
    }
  }
  return raw;
}

RawConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string t = trim(text);
  if (!t.empty() && t[0] == '{') return parse_json_config(text);
  return parse_ini(text);
}

RunConfig resolve(const RawConfig& raw) {
  check_keys(raw);
  RunConfig c;
  c.prior = read_prior(Section(raw, "prior"));
  const Section truth(raw, "truth");
  if (truth.present()) c.truth = read_prior(truth);

  const Section model(raw, "model");
  model.get("sigma2", c.sigma2);
  model.get("alpha", c.alpha);

  const Section quad(raw, "quad");
  quad.get("hermite_nodes", c.quad.hermite_nodes);
  std::string slab = "gauss_hermite";
  quad.get("slab", slab);
  if (slab == "gauss_hermite") {
    c.quad.slab = SlabStrategy::GaussHermite;
  } else if (slab == "monte_carlo") {
    c.quad.slab = SlabStrategy::MonteCarlo;
  } else {
    throw ConfigError("quad.slab must be gauss_hermite or monte_carlo");
  }
  quad.get("slab_nodes", c.quad.slab_nodes);
  quad.get_count("mc_samples", c.quad.mc_samples);
  quad.get_seed("seed", c.quad.seed);

  const Section fp(raw, "fp");
  fp.get("damping", c.fp.damping);
  fp.get("tol", c.fp.tol);
  fp.get("max_iter", c.fp.max_iter);
  if (const auto* s = fp.find("inits")) {
    for (const auto& pair : split(*s, ';')) {
      const auto parts = split(pair, ':');
      if (parts.size() != 2) throw ConfigError("fp.inits entries must look like b:tau");
      c.fp.inits.push_back({to_double("fp.inits", parts[0]), to_double("fp.inits", parts[1])});
    }
  }

  const Section sim(raw, "sim");
  sim.get_count("n", c.sim.n);
  if (sim.find("p")) {
    std::size_t p = 0;
    sim.get_count("p", p);
    c.sim_p = p;
  }
  sim.get_seed("seed", c.sim.seed);
  std::string design = to_string(c.sim.design);
  sim.get("design", design);
  try {
    c.sim.design = design_from_string(design);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  sim.get("replicates", c.sim.replicates);
  sim.get("grad_tol", c.sim.optimizer.grad_tol);
  sim.get("max_iter", c.sim.optimizer.max_iter);
  sim.get_count("channel_samples", c.sim.channel_samples);
  sim.get("projections", c.sim.projections);
  sim.get("exact_evidence", c.sim.exact_evidence);
  sim.get("dataset_out", c.dataset_out);

  const Section cov(raw, "coverage");
  cov.get("zetas", c.sim.zeta_list);

  const Section sweep(raw, "sweep");
  sweep.get("axis", c.sweep.axis);
  sweep.get("grid", c.sweep.grid);
  if (const auto* s = sweep.find("metrics")) c.sweep.metrics = split(*s, ',');
  sweep.get("svg", c.sweep.svg);
  static const std::set<std::string> axes = {"q", "delta2", "alpha", "sigma2"};
  if (!axes.count(c.sweep.axis)) throw ConfigError("sweep.axis must be one of q, delta2, alpha, sigma2");
  static const std::set<std::string> metrics = {"b_star", "tau_star", "mse", "neg_log_z", "coverage_95"};
  for (const auto& m : c.sweep.metrics) {
    if (!metrics.count(m)) throw ConfigError("unknown sweep metric '" + m + "'");
  }

  try {
    c.quad.validate();
    c.fp.validate();
    c.sim_config().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["prior"] = prior_to_json(c.prior);
  if (c.truth) j["truth"] = prior_to_json(*c.truth);
  j["model"] = json{{"sigma2", c.sigma2}, {"alpha", c.alpha}};
  j["quad"] = json{{"hermite_nodes", c.quad.hermite_nodes},
                   {"slab", c.quad.slab == SlabStrategy::GaussHermite ? "gauss_hermite" : "monte_carlo"},
                   {"slab_nodes", c.quad.slab_nodes},
                   {"mc_samples", c.quad.mc_samples},
                   {"seed", c.quad.seed}};
  j["fp"] = json{{"damping", c.fp.damping}, {"tol", c.fp.tol}, {"max_iter", c.fp.max_iter}};
  if (!c.fp.inits.empty()) {
    std::string inits;
    for (const auto& it : c.fp.inits) {
      inits += (inits.empty() ? "" : ";") + json(it.b).dump() + ":" + json(it.tau).dump();
    }
    j["fp"]["inits"] = inits;
  }
  const SimConfig s = c.sim_config();
  j["sim"] = json{{"n", s.n},
                  {"p", s.p},
                  {"seed", s.seed},
                  {"design", to_string(s.design)},
                  {"replicates", s.replicates},
                  {"grad_tol", s.optimizer.grad_tol},
                  {"max_iter", s.optimizer.max_iter},
                  {"channel_samples", s.channel_samples},
                  {"projections", s.projections},
                  {"exact_evidence", s.exact_evidence}};
  if (!c.dataset_out.empty()) j["sim"]["dataset_out"] = c.dataset_out;
  j["coverage"] = json{{"zetas", s.zeta_list}};
  j["sweep"] = json{{"axis", c.sweep.axis}, {"grid", c.sweep.grid}, {"metrics", c.sweep.metrics}};
  if (!c.sweep.svg.empty()) j["sweep"]["svg"] = c.sweep.svg;
  return j;
}

}  // namespace nmf::cli
