#include "gradtopo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

namespace gradtopo {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

double parse_double(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) throw ConfigError("expected a number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') throw ConfigError("not a number: '" + t + "'");
  if (std::isnan(v)) throw ConfigError("NaN is not allowed");
  return v;
}

long long parse_int(const std::string& s) {
  std::string t = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("not an integer: '" + t + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  std::string t = trim(s);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("not a boolean: '" + t + "'");
}

// "x0 y0 x1 y1; x0 y0 x1 y1"
std::vector<Box> parse_boxes(const std::string& s) {
  std::vector<Box> boxes;
  std::stringstream all(s);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (trim(item).empty()) continue;
    std::replace(item.begin(), item.end(), ',', ' ');
    std::istringstream is(item);
    Box b;
    if (!(is >> b.x0 >> b.y0 >> b.x1 >> b.y1)) {
      throw ConfigError("region box needs four numbers 'x0 y0 x1 y1': '" + trim(item) + "'");
    }
    std::string extra;
    if (is >> extra) throw ConfigError("trailing data in region box: '" + trim(item) + "'");
    boxes.push_back(b);
  }
  return boxes;
}

std::string format_boxes(const std::vector<Box>& boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += "; ";
    const Box& b = boxes[i];
    out += format_double(b.x0) + " " + format_double(b.y0) + " " + format_double(b.x1) + " " +
           format_double(b.y1);
  }
  return out;
}

struct KeyHandler {
  std::string name;
  std::string description;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeyHandler number_key(std::string name, T RunConfig::*member, std::string desc) {
  return {std::move(name), std::move(desc),
          [member](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, double>) {
              c.*member = parse_double(v);
            } else {
              const long long x = parse_int(v);
              if (!std::in_range<T>(x)) throw ConfigError("integer out of range");
              c.*member = static_cast<T>(x);
            }
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

KeyHandler optional_key(std::string name, std::optional<double> RunConfig::*member,
                        std::function<double(const RunConfig&)> resolved, std::string desc) {
  return {std::move(name), std::move(desc),
          [member](RunConfig& c, const std::string& v) { c.*member = parse_double(v); },
          [resolved](const RunConfig& c) { return format_double(resolved(c)); }};
}

KeyHandler bool_key(std::string name, bool RunConfig::*member, std::string desc) {
  return {std::move(name), std::move(desc),
          [member](RunConfig& c, const std::string& v) { c.*member = parse_bool(v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    t.push_back(number_key("domain.width", &RunConfig::width, "domain width a [mm]"));
    t.push_back(number_key("domain.height", &RunConfig::height, "domain height b [mm]"));
    t.push_back(number_key("domain.nx", &RunConfig::nx, "elements along x"));
    t.push_back(number_key("domain.ny", &RunConfig::ny, "elements along y"));
    t.push_back({"domain.traction_x", "traction g_x [N/mm]",
                 [](RunConfig& c, const std::string& v) { c.traction.x = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.traction.x); }});
    t.push_back({"domain.traction_y", "traction g_y [N/mm]",
                 [](RunConfig& c, const std::string& v) { c.traction.y = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.traction.y); }});
    t.push_back(optional_key("domain.traction_length", &RunConfig::traction_length,
                             [](const RunConfig& c) { return c.traction_len(); },
                             "length of the loaded right-edge segment [mm] (default height/10)"));
    t.push_back(optional_key("domain.traction_center", &RunConfig::traction_center,
                             [](const RunConfig& c) { return c.traction_mid(); },
                             "y coordinate of the segment centre [mm] (default height/2)"));
    t.push_back({"domain.body_force_x", "body force f_x [N/mm^3]",
                 [](RunConfig& c, const std::string& v) { c.body_force.x = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.body_force.x); }});
    t.push_back({"domain.body_force_y", "body force f_y [N/mm^3]",
                 [](RunConfig& c, const std::string& v) { c.body_force.y = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.body_force.y); }});
    t.push_back({"domain.void_regions", "boxes 'x0 y0 x1 y1; ...' forced to phi=0",
                 [](RunConfig& c, const std::string& v) { c.void_regions = parse_boxes(v); },
                 [](const RunConfig& c) { return format_boxes(c.void_regions); }});
    t.push_back({"domain.solid_regions", "boxes 'x0 y0 x1 y1; ...' forced to phi=1",
                 [](RunConfig& c, const std::string& v) { c.solid_regions = parse_boxes(v); },
                 [](const RunConfig& c) { return format_boxes(c.solid_regions); }});

    t.push_back(number_key("material.youngs_modulus", &RunConfig::youngs_modulus, "E [MPa]"));
    t.push_back(number_key("material.poisson", &RunConfig::poisson, "Poisson ratio nu"));
    t.push_back(number_key("material.beta", &RunConfig::beta,
                           "stiffness fraction of the lowest micro density, in (0,1]"));
    t.push_back(number_key("material.gamma_phi", &RunConfig::gamma_phi,
                           "interface parameter gamma (also sets void stiffness gamma^2)"));
    t.push_back(optional_key("material.gamma_chi", &RunConfig::gamma_chi,
                             [](const RunConfig& c) { return c.gamma_chi_value(); },
                             "chi mobility scale (default gamma_phi)"));
    t.push_back(bool_key("material.literal_km", &RunConfig::literal_km,
                         "use K_M = K_A (chi + (1-chi)/beta) instead of K_A (chi + beta (1-chi))"));
    t.push_back({"material.quadrature", "stiffness quadrature: centroid | exact",
                 [](RunConfig& c, const std::string& v) {
                   const std::string s = trim(v);
                   if (s == "centroid") c.quadrature = Quadrature::Centroid;
                   else if (s == "exact") c.quadrature = Quadrature::Exact;
                   else throw ConfigError("expected centroid|exact, got '" + s + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.quadrature == Quadrature::Centroid ? "centroid" : "exact");
                 }});

    t.push_back(number_key("optimizer.volume_fraction", &RunConfig::volume_fraction,
                           "volume fraction m in (0,1)"));
    t.push_back(number_key("optimizer.kappa1", &RunConfig::kappa1, "Ginzburg-Landau weight"));
    t.push_back(number_key("optimizer.kappa2", &RunConfig::kappa2, "chi gradient weight"));
    t.push_back(number_key("optimizer.kappa3", &RunConfig::kappa3, "body-load work weight"));
    t.push_back(number_key("optimizer.kappa4", &RunConfig::kappa4, "traction work weight"));
    t.push_back(number_key("optimizer.kappa5", &RunConfig::kappa5, "stress penalty weight"));
    t.push_back(number_key("optimizer.tau", &RunConfig::tau, "pseudo-time step"));
    t.push_back(number_key("optimizer.max_iter", &RunConfig::max_iter, "iteration cap"));
    t.push_back(number_key("optimizer.tol", &RunConfig::tol,
                           "L2 increment tolerance on phi and chi (inf allowed)"));
    t.push_back(number_key("optimizer.seed", &RunConfig::seed, "RNG seed for the perturbation"));
    t.push_back(number_key("optimizer.perturbation", &RunConfig::perturbation,
                           "amplitude of the seeded uniform perturbation of phi0/chi0"));
    t.push_back(bool_key("optimizer.literal_rhs", &RunConfig::literal_rhs,
                         "double-well weight kappa3/gamma instead of kappa1/gamma"));
    t.push_back(bool_key("optimizer.flip_stress_sign", &RunConfig::flip_stress_sign,
                         "negate the mechanical driving terms"));
    t.push_back(bool_key("optimizer.safeguard", &RunConfig::safeguard,
                         "halve tau when the objective grows by more than 1%"));
    t.push_back({"optimizer.chi_mode", "auto | graded | dense (dense ties chi to phi)",
                 [](RunConfig& c, const std::string& v) {
                   const std::string s = trim(v);
                   if (s == "auto") c.chi_mode = ChiMode::Auto;
                   else if (s == "graded") c.chi_mode = ChiMode::Graded;
                   else if (s == "dense") c.chi_mode = ChiMode::Dense;
                   else throw ConfigError("expected auto|graded|dense, got '" + s + "'");
                 },
                 [](const RunConfig& c) {
                   switch (c.chi_mode) {
                     case ChiMode::Graded: return std::string("graded");
                     case ChiMode::Dense: return std::string("dense");
                     default: return std::string("auto");
                   }
                 }});
    t.push_back({"optimizer.solver", "linear solver backend: direct | pcg",
                 [](RunConfig& c, const std::string& v) {
                   const std::string s = trim(v);
                   if (s == "direct") c.solver = LinearBackend::Direct;
                   else if (s == "pcg") c.solver = LinearBackend::Pcg;
                   else throw ConfigError("expected direct|pcg, got '" + s + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.solver == LinearBackend::Direct ? "direct" : "pcg");
                 }});
    t.push_back(number_key("optimizer.solver_tol", &RunConfig::solver_tol,
                           "relative residual target of the iterative solver"));

    t.push_back(number_key("stress.yield_stress", &RunConfig::yield_stress, "sigma_y [MPa]"));
    t.push_back(number_key("stress.pnorm_p", &RunConfig::pnorm_p, "p-norm exponent (>= 2)"));
    t.push_back(bool_key("stress.normalized", &RunConfig::pnorm_normalized,
                         "divide the p-norm integral by the domain area"));

    t.push_back({"output.directory", "output directory",
                 [](RunConfig& c, const std::string& v) { c.output_directory = trim(v); },
                 [](const RunConfig& c) { return c.output_directory; }});
    t.push_back(bool_key("output.vtk", &RunConfig::write_vtk, "write the final VTK snapshot"));
    t.push_back(bool_key("output.csv", &RunConfig::write_csv, "write the iteration history CSV"));
    t.push_back(bool_key("output.csv_timing", &RunConfig::csv_timing,
                         "append the wall_time column (makes the CSV run-dependent)"));
    t.push_back(number_key("output.log_every", &RunConfig::log_every,
                           "terminal progress cadence in iterations (0 = silent)"));

    t.push_back(number_key("export.chi_threshold", &RunConfig::chi_threshold,
                           "chi level splitting the two printed parts"));
    t.push_back(number_key("export.phi_threshold", &RunConfig::phi_threshold,
                           "phi level below which the design is void"));
    t.push_back(number_key("export.extrude_height", &RunConfig::extrude_height,
                           "extrusion height of the STL parts [mm]"));
    return t;
  }();
  return table;
}

const KeyHandler* find_handler(const std::string& name) {
  for (const auto& h : handlers()) {
    if (h.name == name) return &h;
  }
  return nullptr;
}

void set_key(RunConfig& c, const std::string& name, const std::string& value) {
  const KeyHandler* h = find_handler(name);
  if (!h) throw ConfigError("unknown key '" + name + "'");
  try {
    h->set(c, value);
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

bool overlaps(const Box& a, const Box& b) {
  return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1;
}

}  // namespace

bool RunConfig::chi_tied_to_phi() const {
  switch (chi_mode) {
    case ChiMode::Dense: return true;
    case ChiMode::Graded: return false;
    default: return beta == 1.0;
  }
}

RunConfig RunConfig::cantilever() {
  RunConfig c;
  fill_defaults(c);
  return c;
}

void fill_defaults(RunConfig& c) {
  if (!c.traction_length) c.traction_length = c.height / 10.0;
  if (!c.traction_center) c.traction_center = c.height / 2.0;
  if (!c.gamma_chi) c.gamma_chi = c.gamma_phi;
}

std::vector<Violation> validate(const RunConfig& c) {
  std::vector<Violation> v;
  auto need = [&v](bool ok, std::string field, std::string constraint) {
    if (!ok) v.push_back({std::move(field), std::move(constraint)});
  };
  auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };

  need(finite_pos(c.width), "domain.width", "must be > 0");
  need(finite_pos(c.height), "domain.height", "must be > 0");
  need(c.nx >= 1, "domain.nx", "must be >= 1");
  need(c.ny >= 1, "domain.ny", "must be >= 1");
  need(std::isfinite(c.traction.x) && std::isfinite(c.traction.y), "domain.traction",
       "must be finite");
  need(finite_pos(c.traction_len()), "domain.traction_length", "must be > 0");
  {
    const double lo = c.traction_mid() - 0.5 * c.traction_len();
    const double hi = c.traction_mid() + 0.5 * c.traction_len();
    need(lo >= -1e-12 * c.height && hi <= c.height * (1.0 + 1e-12), "domain.traction_center",
         "loaded segment must lie on the right edge");
  }
  need(std::isfinite(c.body_force.x) && std::isfinite(c.body_force.y), "domain.body_force",
       "must be finite");
  for (const auto& b : c.void_regions) need(b.x0 <= b.x1 && b.y0 <= b.y1, "domain.void_regions",
                                             "box needs x0<=x1 and y0<=y1");
  for (const auto& b : c.solid_regions) need(b.x0 <= b.x1 && b.y0 <= b.y1, "domain.solid_regions",
                                              "box needs x0<=x1 and y0<=y1");
  bool overlap = false;
  for (const auto& a : c.void_regions) {
    for (const auto& b : c.solid_regions) overlap = overlap || overlaps(a, b);
  }
  need(!overlap, "domain.void_regions", "fixed regions overlap");

  need(finite_pos(c.youngs_modulus), "material.youngs_modulus", "must be > 0");
  need(c.poisson > 0.0 && c.poisson < 0.5, "material.poisson", "must be in (0, 0.5)");
  need(c.beta > 0.0 && c.beta <= 1.0, "material.beta", "beta must be in (0,1]");
  need(finite_pos(c.gamma_phi), "material.gamma_phi", "must be > 0");
  need(finite_pos(c.gamma_chi_value()), "material.gamma_chi", "must be > 0");

  need(c.volume_fraction > 0.0 && c.volume_fraction < 1.0, "optimizer.volume_fraction",
       "volume_fraction must be in (0,1)");
  need(nonneg(c.kappa1), "optimizer.kappa1", "must be >= 0");
  need(nonneg(c.kappa2), "optimizer.kappa2", "must be >= 0");
  need(nonneg(c.kappa3), "optimizer.kappa3", "must be >= 0");
  need(nonneg(c.kappa4), "optimizer.kappa4", "must be >= 0");
  need(nonneg(c.kappa5), "optimizer.kappa5", "must be >= 0");
  need(finite_pos(c.tau), "optimizer.tau", "tau must be > 0");
  need(c.max_iter >= 1, "optimizer.max_iter", "must be >= 1");
  need(!std::isnan(c.tol) && c.tol > 0.0, "optimizer.tol", "tol must be > 0");
  need(nonneg(c.perturbation) && c.perturbation < 0.5, "optimizer.perturbation",
       "must be in [0, 0.5)");
  need(finite_pos(c.solver_tol) && c.solver_tol < 1.0, "optimizer.solver_tol",
       "must be in (0,1)");

  need(finite_pos(c.yield_stress), "stress.yield_stress", "must be > 0");
  need(c.pnorm_p >= 2, "stress.pnorm_p", "p must be >= 2");

  need(!c.output_directory.empty(), "output.directory", "must not be empty");
  need(c.log_every >= 0, "output.log_every", "must be >= 0");
  need(c.chi_threshold >= 0.0 && c.chi_threshold <= 1.0, "export.chi_threshold",
       "must be in [0,1]");
  need(c.phi_threshold > 0.0 && c.phi_threshold < 1.0, "export.phi_threshold",
       "must be in (0,1)");
  need(finite_pos(c.extrude_height), "export.extrude_height", "must be > 0");
  return v;
}

void require_valid(const RunConfig& config) {
  const auto violations = validate(config);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.constraint;
  throw ConfigError(msg);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#");
    std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of a section");
    try {
      set_key(c, section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  RunConfig c = parse_config(buf.str(), path);
  fill_defaults(c);
  require_valid(c);
  return c;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) {
    throw ConfigError("override key must be section.key: '" + key + "'");
  }
  set_key(config, key, assignment.substr(eq + 1));
}

std::string serialize(const RunConfig& config) {
  std::ostringstream os;
  std::string current;
  for (const auto& h : handlers()) {
    const auto dot = h.name.find('.');
    const std::string section = h.name.substr(0, dot);
    if (section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << section << "]\n";
      current = section;
    }
    os << h.name.substr(dot + 1) << " = " << h.get(config) << "\n";
  }
  return os.str();
}

std::vector<KeyInfo> config_keys() {
  const RunConfig defaults = RunConfig::cantilever();
  std::vector<KeyInfo> keys;
  for (const auto& h : handlers()) keys.push_back({h.name, h.get(defaults), h.description});
  return keys;
}

}  // namespace gradtopo
