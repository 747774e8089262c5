#include "case_config.hpp"

#include "shapeopt/mesh_generators.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <type_traits>
#include <vector>

namespace shapeopt::cli {

namespace pt = boost::property_tree;

void GradientCheckConfig::validate() const {
  if (n_fields < 0) throw ConfigError("gradient_check.n_fields must be non-negative");
  if (!(eps_fd > 0.0)) throw ConfigError("gradient_check.eps_fd must be positive");
  if (!(bound > 0.0)) throw ConfigError("gradient_check.bound must be positive");
}

void CaseConfig::validate() const {
  if (mesh_file.empty() && cylinder_level < 0) throw ConfigError("[mesh] needs either 'file' or 'level'");
  if (!mesh_file.empty() && !std::filesystem::exists(mesh_file))
    throw ConfigError("mesh file not found: " + mesh_file.string());
  if (cylinder_level > 4) throw ConfigError("mesh.level must lie in [0, 4]");
  fluid.validate();
  flow.validate();
  descent.validate();
  optimizer.validate();
  gradient_check.validate();
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"mesh", {"file", "generator", "level"}},
      {"case", {"output", "seed"}},
      {"fluid", {"rho_water", "rho_air", "mu_water", "mu_air", "gravity", "body_force"}},
      {"flow",
       {"v_infinity", "c_infinity", "waterline", "delta_c", "relax_v", "relax_p", "beta_conv", "convection",
        "max_iterations", "tolerance"}},
      {"descent", {"p_sequence", "omega", "tol", "tau", "eps_reg", "max_picard_iters", "adaptive_relaxation"}},
      {"optimizer",
       {"max_outer_iterations", "mode", "alpha_step", "backtrack_factor", "max_backtracks", "tol_g", "stop_tol",
        "restore_constraints", "restore_tol", "descent_retries"}},
      {"gradient_check", {"n_fields", "eps_fd", "bound"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const std::string& key, T& out) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (!v) return;
    std::istringstream in(*v);
    T tmp{};
    if constexpr (std::is_same_v<T, bool>) {
      std::string s;
      in >> s;
      if (s == "true" || s == "1" || s == "yes") tmp = true;
      else if (s == "false" || s == "0" || s == "no") tmp = false;
      else throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
    } else if (!(in >> tmp) || !(in >> std::ws).eof()) {
      throw ConfigError(key + ": cannot parse '" + *v + "'");
    }
    out = tmp;
  }

  void get_vec(const std::string& key, Vec2& out) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (!v) return;
    const std::vector<double> xs = numbers(key, *v);
    if (xs.size() != 2) throw ConfigError(key + ": expected two numbers");
    out = Vec2(xs[0], xs[1]);
  }

  void get_list(const std::string& key, std::vector<double>& out) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (v) out = numbers(key, *v);
  }

  std::optional<std::string> str(const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (!v) return std::nullopt;
    return *v;
  }

 private:
  static std::vector<double> numbers(const std::string& key, std::string text) {
    for (char& c : text)
      if (c == ',') c = ' ';
    std::istringstream in(text);
    std::vector<double> xs;
    double x = 0.0;
    while (in >> x) xs.push_back(x);
    if (!(in >> std::ws).eof()) throw ConfigError(key + ": cannot parse '" + text + "'");
    return xs;
  }

  const pt::ptree& tree_;
};

}  // namespace

CaseConfig parse_case_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
  }

  const Reader r(tree);
  CaseConfig cfg;
  if (const auto f = r.str("mesh/file")) {
    std::filesystem::path p(*f);
    cfg.mesh_file = p.is_absolute() ? p : base_dir / p;
  }
  if (const auto g = r.str("mesh/generator")) {
    if (*g != "cylinder_channel") throw ConfigError("mesh.generator: only 'cylinder_channel' is available");
    cfg.cylinder_level = 0;
  }
  r.get("mesh/level", cfg.cylinder_level);
  if (!cfg.mesh_file.empty() && cfg.cylinder_level >= 0)
    throw ConfigError("[mesh] takes either 'file' or a generator, not both");

  if (const auto o = r.str("case/output")) {
    std::filesystem::path p(*o);
    cfg.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    cfg.output_dir = base_dir / cfg.output_dir;
  }
  r.get("case/seed", cfg.seed);

  r.get("fluid/rho_water", cfg.fluid.rho_water);
  r.get("fluid/rho_air", cfg.fluid.rho_air);
  r.get("fluid/mu_water", cfg.fluid.mu_water);
  r.get("fluid/mu_air", cfg.fluid.mu_air);
  r.get_vec("fluid/gravity", cfg.fluid.gravity);
  r.get_vec("fluid/body_force", cfg.fluid.body_force);

  r.get_vec("flow/v_infinity", cfg.flow.v_infinity);
  r.get("flow/c_infinity", cfg.flow.c_infinity);
  if (r.str("flow/waterline")) {
    double z = 0.0;
    r.get("flow/waterline", z);
    cfg.flow.waterline = z;
  }
  r.get("flow/delta_c", cfg.flow.delta_c);
  r.get("flow/relax_v", cfg.flow.relax_v);
  r.get("flow/relax_p", cfg.flow.relax_p);
  r.get("flow/beta_conv", cfg.flow.beta_conv);
  r.get("flow/convection", cfg.flow.convection);
  r.get("flow/max_iterations", cfg.flow.max_iterations);
  r.get("flow/tolerance", cfg.flow.tolerance);

  r.get_list("descent/p_sequence", cfg.descent.p_sequence);
  r.get("descent/omega", cfg.descent.omega);
  r.get("descent/tol", cfg.descent.tol);
  r.get("descent/tau", cfg.descent.tau);
  r.get("descent/eps_reg", cfg.descent.eps_reg);
  r.get("descent/max_picard_iters", cfg.descent.max_picard_iters);
  r.get("descent/adaptive_relaxation", cfg.descent.adaptive_relaxation);

  r.get("optimizer/max_outer_iterations", cfg.optimizer.max_outer_iterations);
  if (const auto m = r.str("optimizer/mode")) cfg.optimizer.mode = parse_deformation_mode(*m);
  r.get("optimizer/alpha_step", cfg.optimizer.alpha_step);
  r.get("optimizer/backtrack_factor", cfg.optimizer.backtrack_factor);
  r.get("optimizer/max_backtracks", cfg.optimizer.max_backtracks);
  r.get("optimizer/tol_g", cfg.optimizer.tol_g);
  r.get("optimizer/stop_tol", cfg.optimizer.stop_tol);
  r.get("optimizer/restore_constraints", cfg.optimizer.restore_constraints);
  r.get("optimizer/restore_tol", cfg.optimizer.restore_tol);
  r.get("optimizer/descent_retries", cfg.optimizer.descent_retries);

  r.get("gradient_check/n_fields", cfg.gradient_check.n_fields);
  r.get("gradient_check/eps_fd", cfg.gradient_check.eps_fd);
  r.get("gradient_check/bound", cfg.gradient_check.bound);

  cfg.validate();
  return cfg;
}

CaseConfig load_case_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_case_config(in, path.parent_path());
}

Mesh load_case_mesh(const CaseConfig& cfg) {
  if (!cfg.mesh_file.empty()) return load_mesh(cfg.mesh_file.string());
  return cylinder_channel_mesh(CylinderChannelParams::level(cfg.cylinder_level));
}

}  // namespace shapeopt::cli
