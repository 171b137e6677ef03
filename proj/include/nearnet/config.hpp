#pragma once

// JSON run configuration: part geometry, machine setup and analysis defaults.
// Relative paths resolve against the directory holding the config file.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nearnet/io.hpp"
#include "nearnet/orient.hpp"
#include "nearnet/planner.hpp"

namespace nearnet {

struct RunConfig {
  double spacing = 1.0;
  IndicatorGrid part;
  Machine machine;
  double overhang_deg = 45.0;
  double lambda = 0.001;
  double w_acc = 0.5;
  double halt_fraction = 0.005;
  std::optional<Vec3> build_direction;
  SamplingMode sampling_mode = SamplingMode::sphere_fibonacci;
  std::size_t samples = 100;
  std::size_t top = 5;
  double roll_deg = 0.0;
  std::optional<double> support_max;
  std::optional<double> secluded_max;
  unsigned workers = 0;
  std::vector<std::string> warnings;

  /// Configured build direction, else the part's vertical axis.
  Vec3 direction() const { return build_direction ? *build_direction : vertical_direction(part.lattice()); }

  OptimizeConfig optimize_config() const {
    OptimizeConfig c;
    c.w_acc = w_acc;
    c.samples = samples;
    c.top = top;
    c.lambda = lambda;
    c.overhang_deg = overhang_deg;
    c.mode = sampling_mode;
    c.roll_deg = roll_deg;
    c.support_max = support_max;
    c.secluded_max = secluded_max;
    c.workers = workers;
    return c;
  }

  PlanConfig plan_config() const { return {lambda, halt_fraction, workers}; }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw InvalidInput(where + ": unknown key '" + k + "'");
}

inline Vec3 vec3_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput(where + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline SamplingMode sampling_mode_of(const std::string& s) {
  if (s == "sphere" || s == "sphere_fibonacci") return SamplingMode::sphere_fibonacci;
  if (s == "circle" || s == "circle_uniform") return SamplingMode::circle_uniform;
  throw InvalidInput("unknown sampling mode '" + s + "' (sphere or circle)");
}

class ConfigLoader {
 public:
  ConfigLoader(std::filesystem::path base, double spacing) : base_(std::move(base)), spacing_(spacing) {}

  std::string path(const json& j) const {
    const std::filesystem::path p(j.get<std::string>());
    return (p.is_absolute() ? p : base_ / p).string();
  }

  IndicatorGrid volume(const json& j, const std::string& what) const {
    IndicatorGrid g = read_indicator(path(j));
    check_spacing(g.lattice(), what);
    return g;
  }

  /// A geometry entry: "file.vol", {"volume": "file.vol"} or {"mesh": "file.stl"}.
  IndicatorGrid geometry(const json& j, const std::string& what, std::vector<std::string>& warnings) const {
    if (j.is_string()) return volume(j, what);
    check_keys(j, what, {"volume", "mesh"});
    if (j.contains("volume") == j.contains("mesh")) throw InvalidInput(what + ": give exactly one of volume or mesh");
    if (j.contains("volume")) return volume(j["volume"], what);
    std::vector<std::string> w;
    IndicatorGrid g = voxelize(load_mesh(path(j["mesh"])), spacing_, &w);
    for (auto& s : w) warnings.push_back(what + ": " + s);
    return g;
  }

  void check_spacing(const Lattice& l, const std::string& what) const {
    if (std::abs(l.spacing - spacing_) > 1e-9 * spacing_)
      throw LatticeMismatch(what + ": spacing " + std::to_string(l.spacing) + " differs from the configured spacing " +
                            std::to_string(spacing_));
  }

  std::vector<Rotation> rotations(const json& j, const std::string& what) const {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "multiaxis18") return multiaxis18_rotations();
      if (s.rfind("uniform2d:", 0) == 0) {
        const std::string n = s.substr(10);
        if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos)
          throw InvalidInput(what + ": bad rotation count in '" + s + "'");
        return uniform_planar_rotations(std::stoul(n));
      }
      throw InvalidInput(what + ": unknown rotation set '" + s + "' (uniform2d:<n>, multiaxis18 or a list)");
    }
    if (!j.is_array() || j.empty()) throw InvalidInput(what + ": rotations must be a name or a non-empty list");
    std::vector<AxisAngle> list;
    for (const auto& e : j) {
      check_keys(e, what, {"axis", "angle_deg"});
      list.push_back({vec3_of(e.at("axis"), what + " axis"), e.at("angle_deg").get<double>() * std::numbers::pi / 180.0});
    }
    return orientation_set(list);
  }

  ToolAssembly tool(const json& j, std::size_t index, std::vector<std::string>& warnings) const {
    const std::string name = j.value("name", "tool" + std::to_string(index + 1));
    const std::string what = "tool '" + name + "'";
    check_keys(j, what, {"name", "holder", "cutter", "cylinder", "sharp_points", "rotations", "axis"});

    SharpPointSpec sharp;
    if (j.contains("sharp_points")) {
      const auto& s = j["sharp_points"];
      if (s.is_number_integer()) {
        if (s.get<long long>() < 1) throw InvalidInput(what + ": sharp point count must be >= 1");
        sharp.count = s.get<std::size_t>();
      } else if (s.is_array() && !s.empty()) {
        for (const auto& c : s) {
          if (!c.is_array() || c.size() != 3) throw InvalidInput(what + ": sharp points must be [i, j, k] cells");
          sharp.explicit_cells.push_back({c[0].get<std::int64_t>(), c[1].get<std::int64_t>(), c[2].get<std::int64_t>()});
        }
      } else {
        throw InvalidInput(what + ": sharp_points must be a count or a list of cells");
      }
    }
    if (!j.contains("rotations")) throw InvalidInput(what + ": missing rotations");
    auto rots = rotations(j["rotations"], what);
    const Vec3 axis = j.contains("axis") ? vec3_of(j["axis"], what + " axis") : Vec3{0, 1, 0};

    if (j.contains("cylinder")) {
      if (j.contains("holder") || j.contains("cutter")) throw InvalidInput(what + ": cylinder excludes holder/cutter");
      const auto& c = j["cylinder"];
      check_keys(c, what + " cylinder", {"cutter_radius", "cutter_length", "holder_radius", "holder_length", "planar"});
      CylinderToolSpec spec;
      spec.cutter_radius = c.value("cutter_radius", spec.cutter_radius);
      spec.cutter_length = c.value("cutter_length", spec.cutter_length);
      spec.holder_radius = c.value("holder_radius", spec.holder_radius);
      spec.holder_length = c.value("holder_length", spec.holder_length);
      spec.planar = c.value("planar", spec.planar);
      auto [holder, cutter] = cylinder_tool_grids(spec, spacing_);
      return make_tool(name, std::move(holder), std::move(cutter), std::move(rots), sharp, axis);
    }
    if (!j.contains("cutter")) throw InvalidInput(what + ": needs a cutter volume or a cylinder");
    IndicatorGrid cutter = geometry(j["cutter"], what + " cutter", warnings);
    IndicatorGrid holder = j.contains("holder") ? geometry(j["holder"], what + " holder", warnings)
                                                : IndicatorGrid(cutter.lattice());
    if (!(holder.lattice() == cutter.lattice())) {
      // Bring both onto their common bounding lattice.
      const Lattice l = bounding_lattice(holder.lattice(), cutter.lattice());
      holder = embed(holder, l);
      cutter = embed(cutter, l);
    }
    return make_tool(name, std::move(holder), std::move(cutter), std::move(rots), sharp, axis);
  }

 private:
  std::filesystem::path base_;
  double spacing_;
};

}  // namespace detail

/// Build a run configuration from parsed JSON. `base` resolves relative paths.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base) {
  using detail::check_keys;
  check_keys(j, "config", {"spacing", "part", "platform_thickness", "fixtures", "tools", "overhang_deg", "lambda", "w_acc",
                           "halt_fraction", "build_direction", "sampling", "support_max", "secluded_max", "workers"});
  RunConfig c;
  if (!j.contains("spacing")) throw InvalidInput("config: missing spacing");
  c.spacing = j["spacing"].get<double>();
  if (!(c.spacing > 0.0)) throw InvalidInput("config: spacing must be positive");
  const detail::ConfigLoader load(base, c.spacing);

  if (!j.contains("part")) throw InvalidInput("config: missing part");
  c.part = load.geometry(j["part"], "part", c.warnings);
  if (c.part.empty()) throw InvalidInput("config: part is empty");

  c.machine.platform_thickness = j.value("platform_thickness", 2);
  if (c.machine.platform_thickness < 1) throw InvalidInput("config: platform_thickness must be >= 1");

  if (j.contains("fixtures")) {
    const auto& fs = j["fixtures"];
    if (!fs.is_array() || fs.empty()) throw InvalidInput("config: fixtures must be a non-empty list");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string name = fs[i].value("name", "fixture" + std::to_string(i + 1));
      check_keys(fs[i], "fixture '" + name + "'", {"name", "volume", "mesh"});
      FixtureConfig f{name, {}};
      if (fs[i].contains("volume") || fs[i].contains("mesh")) {
        nlohmann::json g = fs[i];
        g.erase("name");
        f.body = load.geometry(g, "fixture '" + name + "'", c.warnings);
      }
      c.machine.fixtures.push_back(std::move(f));
    }
  } else {
    c.machine.fixtures.push_back({"platform-only", {}});
  }

  if (!j.contains("tools") || !j["tools"].is_array() || j["tools"].empty())
    throw InvalidInput("config: tools must be a non-empty list");
  for (std::size_t i = 0; i < j["tools"].size(); ++i) c.machine.tools.push_back(load.tool(j["tools"][i], i, c.warnings));

  c.overhang_deg = j.value("overhang_deg", c.overhang_deg);
  (void)self_support_radius(c.overhang_deg);
  c.lambda = j.value("lambda", c.lambda);
  c.w_acc = j.value("w_acc", c.w_acc);
  c.halt_fraction = j.value("halt_fraction", c.halt_fraction);
  if (j.contains("build_direction")) c.build_direction = normalized(detail::vec3_of(j["build_direction"], "build_direction"));
  c.sampling_mode = c.part.lattice().is_2d() ? SamplingMode::circle_uniform : SamplingMode::sphere_fibonacci;
  if (j.contains("sampling")) {
    const auto& s = j["sampling"];
    check_keys(s, "sampling", {"mode", "count", "top", "roll_deg"});
    if (s.contains("mode")) c.sampling_mode = detail::sampling_mode_of(s["mode"].get<std::string>());
    c.samples = s.value("count", c.samples);
    c.top = s.value("top", c.top);
    c.roll_deg = s.value("roll_deg", c.roll_deg);
  }
  if (j.contains("support_max")) c.support_max = j["support_max"].get<double>();
  if (j.contains("secluded_max")) c.secluded_max = j["secluded_max"].get<double>();
  c.workers = j.value("workers", 0u);

  c.optimize_config().validate();
  c.plan_config().validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what(), e.byte);
  }
  try {
    return parse_config(j, std::filesystem::path(path).parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("'" + path + "': " + e.what());
  }
}

}  // namespace nearnet
