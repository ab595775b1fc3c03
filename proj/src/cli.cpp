#include "gradtopo/cli.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gradtopo/config.hpp"
#include "gradtopo/export.hpp"
#include "gradtopo/optimizer.hpp"

namespace gradtopo {

namespace {

namespace fs = std::filesystem;

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("GRADTOPO_LOG");
  if (env == nullptr) return LogLevel::Info;
  const std::string v = env;
  if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<unsigned long long> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_config = true) {
  if (with_config) cmd->add_option("--config", o.config_path, "Configuration file");
  cmd->add_option("--set", o.overrides, "Override a key, section.key=value (repeatable)");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--seed", o.seed, "Random seed for the initial perturbation");
  cmd->add_option("--threads", o.threads, "Worker threads for linear algebra (0 = default)");
}

RunConfig build_config(const CommonOptions& o, const RunConfig& base) {
  RunConfig config = o.config_path.empty() ? base : load_config(o.config_path);
  for (const auto& s : o.overrides) apply_override(config, s);
  if (!o.out_dir.empty()) config.output_directory = o.out_dir;
  if (o.seed) config.seed = *o.seed;
  fill_defaults(config);
  require_valid(config);
  if (o.threads > 0) Eigen::setNbThreads(o.threads);
  return config;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

struct RunSummary {
  ExitStatus status = ExitStatus::IterationCap;
  int iterations = 0;
  double compliance = 0.0;
  double m_chi = 0.0;
  double objective = 0.0;
  double max_von_mises = 0.0;
  double volume_fraction = 0.0;
  double wall_time = 0.0;
};

std::string summary_line(const RunSummary& s, const std::string& out_dir) {
  std::ostringstream line;
  line << "status=" << (s.status == ExitStatus::Converged ? "converged" : "iteration_cap")
       << " iterations=" << s.iterations << " compliance=" << fmt(s.compliance)
       << " m_chi=" << fmt(s.m_chi) << " objective=" << fmt(s.objective)
       << " max_von_mises=" << fmt(s.max_von_mises) << " volume_fraction=" << fmt(s.volume_fraction)
       << " wall_time=" << fmt(s.wall_time) << " out=" << out_dir;
  return line.str();
}

RunSummary execute(const RunConfig& config, std::ostream& err) {
  const LogLevel level = log_level();
  Optimizer opt(config);
  const int every = std::max(1, config.log_every);
  auto observer = [&](const OptimizerState&, const IterationRecord& r, const PhaseStep&) {
    if (level == LogLevel::Quiet) return;
    if (level == LogLevel::Debug || r.iter % every == 0 || r.iter == 1) {
      err << "iter=" << r.iter << " objective=" << fmt(r.objective)
          << " compliance=" << fmt(r.compliance) << " m_chi=" << fmt(r.m_chi)
          << " delta_phi=" << fmt(r.delta_phi) << " delta_chi=" << fmt(r.delta_chi)
          << " max_vm=" << fmt(r.max_von_mises) << "\n";
    }
  };
  const RunResult result = opt.run(observer);

  fs::create_directories(config.output_directory);
  const fs::path dir(config.output_directory);
  {
    std::ofstream cfg(dir / "config.cfg");
    cfg << serialize(config);
    if (!cfg) throw IoError("cannot write " + (dir / "config.cfg").string());
  }
  if (config.write_vtk) write_fields(result.state, opt.mesh(), (dir / "fields.vtk").string());
  if (config.write_csv) {
    write_history_csv(result.history, (dir / "history.csv").string(), config.csv_timing);
  }

  RunSummary s;
  s.status = result.status;
  s.iterations = static_cast<int>(result.history.size());
  s.compliance = result.state.compliance;
  s.m_chi = result.state.m_chi;
  s.objective = result.state.objective;
  const auto& vm = result.state.stress.sigma_e;
  s.max_von_mises = vm.empty() ? 0.0 : *std::max_element(vm.begin(), vm.end());
  s.volume_fraction = opt.volume_row().dot(result.state.phi) / opt.mesh().total_area();
  s.wall_time = result.history.empty() ? 0.0 : result.history.back().wall_time;
  return s;
}

int exit_code(ExitStatus s) {
  return s == ExitStatus::Converged ? kExitConverged : kExitIterationCap;
}

// Accepts a full section.key or a unique key suffix ("kappa2").
std::string resolve_key(const std::string& name) {
  std::vector<std::string> hits;
  for (const auto& k : config_keys()) {
    if (k.name == name) return name;
    const auto dot = k.name.find('.');
    if (k.name.substr(dot + 1) == name) hits.push_back(k.name);
  }
  if (hits.size() != 1) throw ConfigError("unknown or ambiguous key '" + name + "'");
  return hits.front();
}

struct SweepRow {
  std::string label;
  std::string value;
  RunSummary summary;
  std::string error;
};

int cmd_sweep(const CommonOptions& common, const std::string& spec,
              const std::vector<std::string>& references, std::ostream& out,
              std::ostream& err) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("sweep expects key=v1,v2,...");
  const std::string key = resolve_key(spec.substr(0, eq));
  std::vector<std::string> values;
  std::stringstream list(spec.substr(eq + 1));
  for (std::string v; std::getline(list, v, ',');) {
    if (!v.empty()) values.push_back(v);
  }
  if (values.empty()) throw CLI::ValidationError("sweep value list is empty");

  const RunConfig base = build_config(common, RunConfig::cantilever());
  std::vector<std::pair<std::string, std::vector<std::string>>> variants;
  for (const auto& v : values) variants.push_back({key + "=" + v, {key + "=" + v}});
  for (const auto& r : references) {
    const auto req = r.find('=');
    if (req == std::string::npos) throw CLI::ValidationError("reference expects key=value");
    variants.push_back({r, {resolve_key(r.substr(0, req)) + r.substr(req)}});
  }

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    SweepRow row;
    row.label = variants[i].first;
    row.value = row.label.substr(row.label.find('=') + 1);
    try {
      RunConfig c = base;
      for (const auto& o : variants[i].second) apply_override(c, o);
      c.output_directory = (fs::path(base.output_directory) / ("run" + std::to_string(i))).string();
      fill_defaults(c);
      require_valid(c);
      row.summary = execute(c, err);
      out << summary_line(row.summary, c.output_directory) << " variant=" << row.label << "\n";
    } catch (const std::exception& e) {
      row.error = e.what();
      err << "error: variant " << row.label << ": " << e.what() << "\n";
    }
    rows.push_back(row);
  }

  out << "\n| variant | compliance | m_chi | iterations | converged |\n"
      << "|---|---|---|---|---|\n";
  std::ostringstream csv;
  csv << "variant,value,compliance,m_chi,iterations,converged\n";
  bool failed = false;
  bool capped = false;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      failed = true;
      out << "| " << r.label << " | error | error | - | ERROR |\n";
      csv << r.label << "," << r.value << ",,,,error\n";
      continue;
    }
    const bool ok = r.summary.status == ExitStatus::Converged;
    capped = capped || !ok;
    out << "| " << r.label << " | " << fmt(r.summary.compliance) << " | " << fmt(r.summary.m_chi)
        << " | " << r.summary.iterations << " | " << (ok ? "YES" : "NO") << " |\n";
    csv << r.label << "," << r.value << "," << fmt(r.summary.compliance) << ","
        << fmt(r.summary.m_chi) << "," << r.summary.iterations << "," << (ok ? "yes" : "no")
        << "\n";
  }
  fs::create_directories(base.output_directory);
  std::ofstream(fs::path(base.output_directory) / "sweep.csv") << csv.str();
  if (failed) return kExitError;
  return capped ? kExitIterationCap : kExitConverged;
}

struct ExportOptions {
  std::string fields;
  std::optional<double> threshold;
  std::optional<double> height;
  std::optional<double> phi_threshold;
};

int cmd_export(const CommonOptions& common, const ExportOptions& o, std::ostream& out) {
  const RunConfig config = build_config(common, RunConfig::cantilever());
  const double height = o.height.value_or(config.extrude_height);
  if (!(height > 0.0)) throw CLI::ValidationError("--height must be > 0");
  const double threshold = o.threshold.value_or(config.chi_threshold);
  const double phi_threshold = o.phi_threshold.value_or(config.phi_threshold);
  const fs::path dir(config.output_directory);
  const std::string fields = o.fields.empty() ? (dir / "fields.vtk").string() : o.fields;
  if (!fs::exists(fields)) throw IoError("field snapshot '" + fields + "' not found");

  const FieldSnapshot snap = read_fields(fields);
  const Mesh mesh = snapshot_mesh(snap);
  const ContourPolygonSet parts = design_parts(mesh, snap.phi, snap.chi, threshold, phi_threshold);
  fs::create_directories(dir);
  int written = 0;
  for (const auto& [name, region] :
       {std::pair{"part_above.stl", &parts.above}, std::pair{"part_below.stl", &parts.below}}) {
    if (region->empty()) continue;
    const std::string path = (dir / name).string();
    const TriangleSoup3D soup = extrude_to_stl(*region, height, path);
    const WatertightReport w = check_watertight(read_stl(path));
    out << "file=" << path << " triangles=" << soup.triangles.size()
        << " area=" << fmt(region_area(*region)) << " volume=" << fmt(signed_volume(soup))
        << " watertight=" << (w.watertight ? "yes" : "no") << "\n";
    ++written;
  }
  if (written == 0) throw GeometryError("design has no material above the phi threshold");
  return kExitConverged;
}

int cmd_validate(const CommonOptions& common, bool list_keys, std::ostream& out) {
  if (list_keys) {
    for (const auto& k : config_keys()) {
      out << k.name << " = " << k.default_value << "  # " << k.description << "\n";
    }
    return kExitConverged;
  }
  RunConfig config = common.config_path.empty() ? RunConfig::cantilever()
                                                 : load_config(common.config_path);
  for (const auto& s : common.overrides) apply_override(config, s);
  fill_defaults(config);
  const auto violations = validate(config);
  for (const auto& v : violations) out << v.field << ": " << v.constraint << "\n";
  if (!violations.empty()) return kExitError;
  out << "valid\n";
  return kExitConverged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-scale phase-field topology optimizer"};
  app.name("gradtopo");
  app.require_subcommand(1, 1);

  CommonOptions run_opts, bench_opts, sweep_opts, export_opts, validate_opts;
  auto* run = app.add_subcommand("run", "Optimize the configured design");
  add_common(run, run_opts);

  auto* bench = app.add_subcommand("bench", "Run the built-in cantilever benchmark");
  add_common(bench, bench_opts, false);
  std::string scenario = "cantilever";
  bench->add_option("--scenario", scenario, "Built-in scenario")
      ->check(CLI::IsMember({"cantilever"}));

  auto* sweep = app.add_subcommand("sweep", "Run variants over one key and tabulate them");
  add_common(sweep, sweep_opts);
  std::string sweep_spec;
  std::vector<std::string> references;
  sweep->add_option("values", sweep_spec, "key=v1,v2,...")->required();
  sweep->add_option("--reference", references, "Extra variant key=value (repeatable)");

  auto* exp = app.add_subcommand("export-stl", "Split a finished design by chi and extrude it");
  add_common(exp, export_opts);
  ExportOptions eo;
  exp->add_option("--fields", eo.fields, "Field snapshot (default <out>/fields.vtk)");
  exp->add_option("--threshold", eo.threshold, "chi threshold");
  exp->add_option("--height", eo.height, "Extrusion height [mm]");
  exp->add_option("--phi-threshold", eo.phi_threshold, "phi threshold for solid");

  auto* val = app.add_subcommand("validate", "Check a configuration");
  add_common(val, validate_opts);
  bool list_keys = false;
  val->add_flag("--list-keys", list_keys, "Print every key with its default");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitConverged;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (run->parsed()) {
      const RunConfig config = build_config(run_opts, RunConfig::cantilever());
      const RunSummary s = execute(config, err);
      out << summary_line(s, config.output_directory) << "\n";
      return exit_code(s.status);
    }
    if (bench->parsed()) {
      const RunConfig config = build_config(bench_opts, RunConfig::cantilever());
      const RunSummary s = execute(config, err);
      out << summary_line(s, config.output_directory) << " scenario=" << scenario << "\n";
      return exit_code(s.status);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_spec, references, out, err);
    if (exp->parsed()) return cmd_export(export_opts, eo, out);
    if (val->parsed()) return cmd_validate(validate_opts, list_keys, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace gradtopo
