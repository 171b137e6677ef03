#pragma once

// Command-line front end. `run` is the whole program minus process setup, so
// tests can drive it with in-memory streams.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nearnet/config.hpp"

namespace nearnet::cli {

enum ExitCode : int { ok = 0, usage = 2, input_error = 3, internal_error = 4 };

/// An internal consistency check failed (exit code 4).
class InvariantFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline Vec3 parse_direction(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    char* end = nullptr;
    v.push_back(std::strtod(part.c_str(), &end));
    if (part.empty() || *end != '\0') throw CLI::ValidationError("--dir", "expected x,y,z, got '" + s + "'");
  }
  if (v.size() != 3) throw CLI::ValidationError("--dir", "expected x,y,z, got '" + s + "'");
  const Vec3 d{v[0], v[1], v[2]};
  if (!(norm(d) > 0.0)) throw CLI::ValidationError("--dir", "direction must be non-zero");
  return normalized(d);
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& s) { nearnet::detail::write_file(path, s); }

inline void report_warnings(const RunConfig& c, std::ostream& err) {
  for (const auto& w : c.warnings) err << "warning: " << w << '\n';
}

/// Compare the FFT field with explicit placement. Small domains are checked
/// everywhere; larger ones at a fixed pseudo-random sample of cells.
inline void oracle_check(const Workspace& ws, const ScalarField& field, std::ostream& out) {
  const Lattice& d = ws.part.lattice();
  std::vector<Index3> queries;
  if (d.size() <= 32 * 32 * 32) {
    for (std::size_t i = 0; i < d.size(); ++i) queries.push_back(d.cell(i));
  } else {
    std::mt19937_64 rng(12345);
    for (int n = 0; n < 200; ++n) queries.push_back(d.cell(rng() % d.size()));
  }
  std::vector<double> best(queries.size(), std::numeric_limits<double>::infinity());
  for (const IndicatorGrid& o : setup_obstacles(ws.part, ws.setup))
    for (const ToolAssembly& t : ws.setup.tools) {
      const auto v = imf_oracle(o, t, queries);
      for (std::size_t q = 0; q < queries.size(); ++q) best[q] = std::min(best[q], v[q]);
    }
  double worst = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) worst = std::max(worst, std::abs(best[q] - field.at(queries[q])));
  out << "oracle check: " << queries.size() << " cells, max |difference| = " << fmt("%.3g", worst) << '\n';
  if (worst > 1e-9) throw InvariantFailure("FFT field disagrees with explicit placement");
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Support accessibility analysis for near-net additive parts"};
  app.name("nearnet");
  app.require_subcommand(1);
  app.set_version_flag("--version", "nearnet 1.0.0");

  // voxelize
  std::string mesh_path, vol_out, vtk_out;
  double spacing = 0.0;
  auto* vox = app.add_subcommand("voxelize", "Voxelize an STL mesh into a volume file");
  vox->add_option("mesh", mesh_path, "Input STL (ASCII or binary)")->required();
  vox->add_option("--spacing", spacing, "Cell size in mm")->required()->check(CLI::PositiveNumber);
  vox->add_option("--out", vol_out, "Output volume file")->required();
  vox->add_option("--vtk", vtk_out, "Also write a VTK structured-points file");

  // shared analysis options
  std::string config_path, dir_text, prefix, csv_out, steps_prefix, mode_text;
  double lambda = -1.0, w_acc = -1.0, halt = -1.0;
  std::size_t samples = 0, top = 0;
  unsigned workers = 0;
  bool workers_set = false, oracle = false;

  auto* imf = app.add_subcommand("imf", "Accessibility field and support split at one build direction");
  imf->add_option("config", config_path, "Run configuration (JSON)")->required();
  imf->add_option("--dir", dir_text, "Build direction x,y,z (default: config or vertical)");
  imf->add_option("--out", prefix, "Output prefix for _field/_accessible/_secluded volumes")->required();
  imf->add_option("--lambda", lambda, "Accessibility threshold")->check(CLI::NonNegativeNumber);
  imf->add_flag("--oracle-check", oracle, "Verify the field by explicit tool placement");
  imf->add_option("--vtk", vtk_out, "Also write the field as VTK to this path");

  auto* opt = app.add_subcommand("optimize", "Rank sampled build directions");
  opt->add_option("config", config_path, "Run configuration (JSON)")->required();
  opt->add_option("--w-acc", w_acc, "Weight of secluded support in [0, 1]")->check(CLI::Range(0.0, 1.0));
  opt->add_option("--samples", samples, "Number of sampled directions")->check(CLI::PositiveNumber);
  opt->add_option("--top", top, "Number of ranked results")->check(CLI::PositiveNumber);
  opt->add_option("--lambda", lambda, "Accessibility threshold")->check(CLI::NonNegativeNumber);
  opt->add_option("--mode", mode_text, "Sampling mode")->check(CLI::IsMember({"sphere", "circle"}));
  opt->add_option("--out", csv_out, "Ranking CSV over all samples");

  auto* pl = app.add_subcommand("plan", "Greedy support-removal plan at one build direction");
  pl->add_option("config", config_path, "Run configuration (JSON)")->required();
  pl->add_option("--dir", dir_text, "Build direction x,y,z (default: config or vertical)");
  pl->add_option("--halt-fraction", halt, "Stop below this fraction of the initial support")
      ->check([](const std::string& s) -> std::string {
        const double v = std::strtod(s.c_str(), nullptr);
        return v > 0.0 && v <= 1.0 ? "" : "halt fraction must be in (0, 1]";
      });
  pl->add_option("--lambda", lambda, "Accessibility threshold")->check(CLI::NonNegativeNumber);
  pl->add_option("--out", csv_out, "Plan CSV");
  pl->add_option("--export-steps", steps_prefix, "Write each step's removed volume as <prefix>_step<N>.vol");

  for (auto* s : {imf, opt, pl})
    s->add_option_function<unsigned>("--workers", [&](const unsigned& w) { workers = w, workers_set = true; },
                                     "Worker threads (0 = all cores)");

  std::vector<std::string> argv_store{"nearnet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (vox->parsed()) {
      std::vector<std::string> warnings;
      const IndicatorGrid g = voxelize(load_mesh(mesh_path), spacing, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      write_volume(vol_out, g);
      if (!vtk_out.empty()) write_vtk(vtk_out, g);
      const auto& d = g.lattice().dims;
      out << "voxelized " << g.count() << " cells on " << d[0] << "x" << d[1] << "x" << d[2] << " lattice, volume "
          << detail::fmt("%.6g", volume(g)) << " mm^3\n";
      return ok;
    }

    RunConfig cfg = load_config(config_path);
    detail::report_warnings(cfg, err);
    if (lambda >= 0.0) cfg.lambda = lambda;
    if (workers_set) cfg.workers = workers;
    if (!dir_text.empty()) cfg.build_direction = detail::parse_direction(dir_text);

    if (imf->parsed()) {
      const NearNetShape nn = assemble_near_net(cfg.part, cfg.direction(), cfg.overhang_deg,
                                                cfg.roll_deg * std::numbers::pi / 180.0);
      const Workspace ws = stage(nn, cfg.machine);
      const ImfResult r = imf_setup(ws.part, ws.setup, {false, false, cfg.workers});
      const SupportSplit split = split_support(ws.support, r.field, cfg.lambda);
      write_volume(prefix + "_field.vol", r.field);
      write_volume(prefix + "_accessible.vol", split.accessible);
      write_volume(prefix + "_secluded.vol", split.secluded);
      if (!vtk_out.empty()) write_vtk(vtk_out, r.field);
      out << "V_S = " << detail::fmt("%.6f", volume(ws.support)) << " mm^3\n";
      out << "V_Gamma = " << detail::fmt("%.6f", volume(split.secluded)) << " mm^3\n";
      out << "accessible = " << detail::fmt("%.6f", volume(split.accessible)) << " mm^3\n";
      if (oracle) detail::oracle_check(ws, r.field, out);
      return ok;
    }

    if (opt->parsed()) {
      if (w_acc >= 0.0) cfg.w_acc = w_acc;
      if (samples) cfg.samples = samples;
      if (top) cfg.top = top;
      if (!mode_text.empty()) cfg.sampling_mode = nearnet::detail::sampling_mode_of(mode_text);
      const OptimizeConfig oc = cfg.optimize_config();
      const OptimizeResult res = optimize(cfg.part, cfg.machine, oc);
      if (!csv_out.empty()) {
        std::ostringstream csv;
        write_ranking_csv(csv, res);
        detail::write_text(csv_out, csv.str());
      }
      out << "rank  bx        by        bz        V_S (mm^3)    V_Gamma (mm^3)  xi\n";
      for (std::size_t i = 0; i < res.ranked.size(); ++i) {
        const auto& r = res.ranked[i];
        char line[256];
        std::snprintf(line, sizeof line, "%-5zu %-9.4f %-9.4f %-9.4f %-13.4f %-15.4f %.4f\n", i + 1, r.direction.x,
                      r.direction.y, r.direction.z, r.support_volume, r.secluded_volume, r.xi);
        out << line;
      }
      return ok;
    }

    if (pl->parsed()) {
      if (halt > 0.0) cfg.halt_fraction = halt;
      const Plan p = plan(cfg.part, cfg.direction(), cfg.machine, cfg.overhang_deg, cfg.plan_config());
      write_plan_table(out, p);
      if (!csv_out.empty()) {
        std::ostringstream csv;
        write_plan_csv(csv, p);
        detail::write_text(csv_out, csv.str());
      }
      if (!steps_prefix.empty())
        for (const auto& s : p.steps) write_volume(steps_prefix + "_step" + std::to_string(s.step) + ".vol", s.removed);
      return ok;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const InvariantFailure& e) {
    err << "error: " << e.what() << '\n';
    return internal_error;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return input_error;
  } catch (const LatticeMismatch& e) {
    err << "error: " << e.what() << '\n';
    return input_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal_error;
  }
  return usage;
}

}  // namespace nearnet::cli
