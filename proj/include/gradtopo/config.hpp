#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradtopo {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Closed axis-aligned box [x0,x1]x[y0,y1] in millimetres.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  bool operator==(const Box&) const = default;

  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

enum class Quadrature { Centroid, Exact };
enum class LinearBackend { Direct, Pcg };
/// How the micro-density field is handled for single-material (beta = 1) runs.
enum class ChiMode { Auto, Graded, Dense };

/// Full problem description. Units: mm, N, MPa.
struct RunConfig {
  // [domain]
  double width = 200.0;
  double height = 100.0;
  int nx = 100;
  int ny = 50;
  Vec2 traction{0.0, -600.0};
  std::optional<double> traction_length;  // default height / 10
  std::optional<double> traction_center;  // default height / 2
  Vec2 body_force{0.0, 0.0};
  std::vector<Box> void_regions;   // phi = 0
  std::vector<Box> solid_regions;  // phi = 1

  // [material]
  double youngs_modulus = 12500.0;
  double poisson = 0.25;
  double beta = 1.0 / 6.0;
  double gamma_phi = 0.01;
  std::optional<double> gamma_chi;  // default gamma_phi
  bool literal_km = false;
  Quadrature quadrature = Quadrature::Centroid;

  // [optimizer]
  double volume_fraction = 0.8;
  double kappa1 = 400.0;
  double kappa2 = 4000.0;
  double kappa3 = 1.0;
  double kappa4 = 1.0;
  double kappa5 = 0.0;
  double tau = 1e-6;
  int max_iter = 2000;
  double tol = 1e-3;
  unsigned long long seed = 0;
  double perturbation = 0.0;
  bool literal_rhs = true;
  bool flip_stress_sign = false;
  bool safeguard = false;
  ChiMode chi_mode = ChiMode::Auto;
  LinearBackend solver = LinearBackend::Direct;
  double solver_tol = 1e-10;

  // [stress]
  double yield_stress = 45.0;
  int pnorm_p = 8;
  bool pnorm_normalized = true;

  // [output]
  std::string output_directory = "out";
  bool write_vtk = true;
  bool write_csv = true;
  bool csv_timing = false;
  int log_every = 50;

  // [export]
  double chi_threshold = 0.5;
  double phi_threshold = 0.5;
  double extrude_height = 10.0;

  double traction_len() const { return traction_length.value_or(height / 10.0); }
  double traction_mid() const { return traction_center.value_or(height / 2.0); }
  double gamma_chi_value() const { return gamma_chi.value_or(gamma_phi); }
  double domain_area() const { return width * height; }
  /// True when the chi field is tied to phi (dense single-material run).
  bool chi_tied_to_phi() const;

  /// The cantilever benchmark with the reference parameter set.
  static RunConfig cantilever();

  bool operator==(const RunConfig&) const = default;
};

struct Violation {
  std::string field;
  std::string constraint;
};

/// Lists every broken invariant; empty iff the config is valid.
std::vector<Violation> validate(const RunConfig& config);

/// Parses the INI-style text. Throws ConfigError with the offending line number.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");

/// Reads, parses, fills defaults and validates. Throws ConfigError.
RunConfig load_config(const std::string& path);

/// Applies one "section.key=value" override. Throws ConfigError on unknown keys.
void apply_override(RunConfig& config, const std::string& assignment);

/// Writes every key explicitly; parse_config(serialize(c)) == c after defaults are filled.
std::string serialize(const RunConfig& config);

/// Replaces unset optional keys with their resolved defaults.
void fill_defaults(RunConfig& config);

/// Throws ConfigError listing all violations, if any.
void require_valid(const RunConfig& config);

struct KeyInfo {
  std::string name;  // section.key
  std::string default_value;
  std::string description;
};

/// Documented key table (drives the README table and `gradtopo validate --keys`).
std::vector<KeyInfo> config_keys();

}  // namespace gradtopo
