#include "emfg/config.hpp"

#include <fstream>
#include <sstream>

namespace emfg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int(key, item));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a comma-separated list");
  return out;
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "model") {
    auto& m = cfg.model;
    if (key == "name") m.name = value;
    else if (key == "kappa_v") m.kappa_v = parse_double(full, value);
    else if (key == "a") m.m0_amplitude = parse_double(full, value);
    else if (key == "alpha") m.alpha = parse_double(full, value);
    else if (key == "c0") m.c0 = parse_double(full, value);
    else if (key == "gamma") m.gamma = parse_double(full, value);
    else if (key == "f") m.f = value;
    else if (key == "g") m.g = value;
    else if (key == "C0") m.C0 = parse_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "grid") {
    auto& g = cfg.grid;
    if (key == "d") g.d = parse_int(full, value);
    else if (key == "nx") g.nx = parse_int(full, value);
    else if (key == "nt") g.nt = parse_int(full, value);
    else if (key == "t_horizon") g.t_horizon = parse_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "continuation") {
    auto& c = cfg.continuation;
    if (key == "dtheta_init") c.dtheta_init = parse_double(full, value);
    else if (key == "dtheta_max") c.dtheta_max = parse_double(full, value);
    else if (key == "max_halvings") c.max_halvings = parse_int(full, value);
    else if (key == "newton_tol") c.newton_tol = parse_double(full, value);
    else if (key == "newton_max_iter") c.newton_max_iter = parse_int(full, value);
    else if (key == "armijo_c") c.armijo_c = parse_double(full, value);
    else if (key == "armijo_min_step") c.armijo_min_step = parse_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "check") {
    auto& c = cfg.check;
    if (key == "samples") c.samples = parse_int(full, value);
    else if (key == "p_max") c.p_max = parse_double(full, value);
    else if (key == "m_min") c.m_min = parse_double(full, value);
    else if (key == "m_max") c.m_max = parse_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "certify") {
    auto& c = cfg.certify;
    if (key == "search_cmax") c.search_cmax = parse_double(full, value);
    else if (key == "u_field") c.u_field = value;
    else if (key == "m_field") c.m_field = value;
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "convergence") {
    auto& c = cfg.convergence;
    if (key == "grids") c.grids = parse_int_list(full, value);
    else if (key == "order_min") c.order_min = parse_double(full, value);
    else if (key == "order_max") c.order_max = parse_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "output") {
    if (key == "dir") cfg.output.dir = value;
    else throw ConfigError("config: unknown key '" + full + "'");
  } else {
    throw ConfigError("config: unknown section '" + section + "'");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config: key '" + key + "' appears before any section");
    if (key.empty() || value.empty())
      throw ConfigError("config: empty key or value at line " + std::to_string(lineno));
    set_key(cfg, section, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + spec + "' must look like section.key=value");
  const std::string path = trim(spec.substr(0, eq));
  const std::string value = trim(spec.substr(eq + 1));
  const auto dot = path.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override '" + spec + "' must name section.key");
  set_key(cfg, path.substr(0, dot), path.substr(dot + 1), value);
}

ModelPtr RunConfig::make_model() const {
  const auto& m = model;
  if (m.name == "quadlog") {
    QuadLogParams prm;
    prm.kappa_v = m.kappa_v;
    prm.m0_amplitude = m.m0_amplitude;
    prm.C0 = m.C0;
    return make_quad_log(grid.d, prm);
  }
  if (m.name == "congestion") {
    CongestionParams prm;
    prm.alpha = m.alpha;
    prm.c0 = m.c0;
    prm.kappa_v = m.kappa_v;
    prm.m0_amplitude = m.m0_amplitude;
    prm.f = coupling_from_string(m.f);
    prm.g = coupling_from_string(m.g);
    prm.C0 = m.C0;
    return make_congestion(grid.d, prm);
  }
  if (m.name == "power") {
    PowerParams prm;
    prm.gamma = m.gamma;
    prm.kappa_v = m.kappa_v;
    prm.m0_amplitude = m.m0_amplitude;
    prm.f = coupling_from_string(m.f);
    prm.g = coupling_from_string(m.g);
    prm.C0 = m.C0;
    return make_power(grid.d, prm);
  }
  throw ConfigError("config: unknown model '" + m.name + "'");
}

SpaceTimeGrid RunConfig::make_grid() const {
  return SpaceTimeGrid(grid.d, grid.nx, grid.nt, grid.t_horizon);
}

CheckBox RunConfig::make_check_box() const {
  CheckBox box;
  box.p_max = check.p_max;
  box.m_min = check.m_min;
  box.m_max = check.m_max;
  if (!(box.m_min > 0.0) || !(box.m_max > box.m_min) || !(box.p_max > 0.0))
    throw ConfigError("config: check box must satisfy 0 < m_min < m_max and p_max > 0");
  return box;
}

}  // namespace emfg
