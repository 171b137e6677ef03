#pragma once

// Greedy support-removal planning. Each step picks the (fixture, tool,
// rotation) combination that can reach the largest share of the support still
// in place, removes it, and repeats until the best step falls below a
// fraction of the initial support volume.

#include <cstdio>
#include <bit>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "nearnet/imf.hpp"
#include "nearnet/workspace.hpp"

namespace nearnet {

struct PlanConfig {
  double lambda = 0.001;
  /// Stop once the best step removes less than this fraction of the initial support.
  double halt_fraction = 0.005;
  unsigned workers = 0;

  void validate() const {
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be >= 0");
    if (!(halt_fraction > 0.0 && halt_fraction <= 1.0)) throw InvalidInput("halt fraction must be in (0, 1]");
  }
};

struct PlanStep {
  std::size_t step = 0;  // 1-based; 0 marks "nothing removable"
  std::size_t fixture = 0;
  std::string fixture_name;
  std::size_t tool = 0;
  std::string tool_name;
  std::size_t rotation_index = 0;
  Rotation rotation;
  Vec3 direction;  // rotated spindle axis
  IndicatorGrid removed;
  double removed_volume = 0.0;
  double removed_fraction = 0.0;  // of the initial support volume
};

/// Accessible subset of a support region for every setup combination. The
/// obstacle never changes during planning, so these are computed once.
class RemovalCandidates {
 public:
  RemovalCandidates(const IndicatorGrid& part, const IndicatorGrid& support, const MachineSetup& setup, double lambda,
                    unsigned workers = 0)
      : setup_(setup) {
    if (!(support.lattice() == setup.domain())) throw LatticeMismatch("planner: support is not on the domain lattice");
    const auto obstacles = setup_obstacles(part, setup);

    std::vector<std::size_t> first_rotation;
    std::size_t per_fixture = 0;
    for (const auto& t : setup.tools) {
      first_rotation.push_back(per_fixture);
      per_fixture += t.rotations.size();
    }
    combos_.resize(per_fixture * obstacles.size());
    accessible_.resize(combos_.size());
    const IndicatorGrid* support_ptr = &support;
    for_each_combination(obstacles, setup.tools, workers, false,
                         [&](unsigned, const Combination& c, const std::vector<double>& gamma,
                             const std::vector<std::int32_t>&) {
                           const std::size_t idx = c.fixture * per_fixture + first_rotation[c.tool] + c.rotation;
                           IndicatorGrid acc(support_ptr->lattice());
                           support_ptr->for_each_set([&](std::size_t x) {
                             if (gamma[x] <= lambda) acc.set(x);
                           });
                           combos_[idx] = c;
                           accessible_[idx] = std::move(acc);
                         });
  }

  std::size_t size() const { return combos_.size(); }
  const Combination& combination(std::size_t i) const { return combos_[i]; }
  const IndicatorGrid& accessible(std::size_t i) const { return accessible_[i]; }

  /// Combination removing the most of `remaining`; ties go to the smallest
  /// (fixture, tool, rotation). A zero-volume step (step index 0) when none reaches anything.
  PlanStep best(const IndicatorGrid& remaining, double initial_volume) const {
    std::size_t best_idx = 0;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < accessible_.size(); ++i) {
      const auto& a = accessible_[i].words();
      const auto& r = remaining.words();
      std::size_t n = 0;
      for (std::size_t w = 0; w < a.size(); ++w) n += static_cast<std::size_t>(std::popcount(a[w] & r[w]));
      if (n > best_count) {
        best_count = n;
        best_idx = i;
      }
    }
    PlanStep s;
    if (best_count == 0) {
      s.removed = IndicatorGrid(remaining.lattice());
      return s;
    }
    const Combination& c = combos_[best_idx];
    const ToolAssembly& tool = setup_.tools[c.tool];
    s.fixture = c.fixture;
    s.fixture_name = setup_.fixtures[c.fixture].name;
    s.tool = c.tool;
    s.tool_name = tool.name;
    s.rotation_index = c.rotation;
    s.rotation = tool.rotations[c.rotation];
    s.direction = s.rotation.apply(tool.axis);
    s.removed = intersect(accessible_[best_idx], remaining);
    s.removed_volume = volume(s.removed);
    s.removed_fraction = initial_volume > 0.0 ? s.removed_volume / initial_volume : 0.0;
    return s;
  }

 private:
  const MachineSetup& setup_;
  std::vector<Combination> combos_;
  std::vector<IndicatorGrid> accessible_;
};

/// Single greedy step against `support_remaining` (fractions relative to it).
inline PlanStep max_removable(const IndicatorGrid& part, const IndicatorGrid& support_remaining, const MachineSetup& setup,
                              const PlanConfig& cfg) {
  cfg.validate();
  if (support_remaining.empty()) throw InvalidInput("max_removable: no support remaining");
  const RemovalCandidates candidates(part, support_remaining, setup, cfg.lambda, cfg.workers);
  PlanStep s = candidates.best(support_remaining, volume(support_remaining));
  if (s.removed_volume > 0.0) s.step = 1;
  return s;
}

struct Plan {
  Workspace workspace;
  std::vector<PlanStep> steps;
  IndicatorGrid remaining;  // support left after the last step
  double initial_volume = 0.0;

  double removed_fraction() const {
    double f = 0.0;
    for (const auto& s : steps) f += s.removed_fraction;
    return f;
  }
};

inline Plan plan_workspace(Workspace ws, const PlanConfig& cfg) {
  cfg.validate();
  Plan p;
  p.initial_volume = volume(ws.support);
  p.remaining = ws.support;
  if (!ws.support.empty()) {
    const RemovalCandidates candidates(ws.part, ws.support, ws.setup, cfg.lambda, cfg.workers);
    const std::size_t initial_cells = ws.support.count();
    for (;;) {
      PlanStep s = candidates.best(p.remaining, p.initial_volume);
      const std::size_t removed = s.removed.count();
      if (removed == 0 || static_cast<double>(removed) < cfg.halt_fraction * static_cast<double>(initial_cells)) break;
      s.step = p.steps.size() + 1;
      p.remaining = subtract(p.remaining, s.removed);
      p.steps.push_back(std::move(s));
    }
  }
  p.workspace = std::move(ws);
  return p;
}

/// Near-net at build direction `b`, then greedy removal steps.
inline Plan plan(const IndicatorGrid& part, Vec3 b, const Machine& machine, double alpha_deg, const PlanConfig& cfg) {
  cfg.validate();
  const NearNetShape nn = assemble_near_net(part, b, alpha_deg);
  return plan_workspace(stage(nn, machine), cfg);
}

namespace detail {
inline std::string fmt_component(double v) {
  if (std::abs(v) < 5e-4) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
inline std::string fmt_direction(Vec3 d) {
  return "(" + fmt_component(d.x) + "," + fmt_component(d.y) + "," + fmt_component(d.z) + ")";
}
}  // namespace detail

/// step,volume_fraction_pct,fixture,fixture_name,tool,tool_name,rotation,dir_x,dir_y,dir_z
/// Indices are 1-based.
inline void write_plan_csv(std::ostream& os, const Plan& p) {
  os << "step,volume_fraction_pct,fixture,fixture_name,tool,tool_name,rotation,dir_x,dir_y,dir_z\n";
  char pct[32];
  for (const auto& s : p.steps) {
    std::snprintf(pct, sizeof pct, "%.4f", 100.0 * s.removed_fraction);
    os << s.step << ',' << pct << ',' << s.fixture + 1 << ',' << s.fixture_name << ',' << s.tool + 1 << ','
       << s.tool_name << ',' << s.rotation_index + 1 << ',' << detail::fmt_component(s.direction.x) << ','
       << detail::fmt_component(s.direction.y) << ',' << detail::fmt_component(s.direction.z) << '\n';
  }
}

inline void write_plan_table(std::ostream& os, const Plan& p) {
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-16s %-8s %-6s %s\n", "Step", "Vol. Frac. (%)", "Fixture", "Tool", "Direction");
  os << line;
  for (const auto& s : p.steps) {
    std::snprintf(line, sizeof line, "%-6zu %-16.2f %-8zu %-6zu %s\n", s.step, 100.0 * s.removed_fraction, s.fixture + 1,
                  s.tool + 1, detail::fmt_direction(s.direction).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "removed %.2f%% of %.6g mm^3 support in %zu steps\n", 100.0 * p.removed_fraction(),
                p.initial_volume, p.steps.size());
  os << line;
}

}  // namespace nearnet
