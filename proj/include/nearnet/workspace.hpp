#pragma once

#include <string>
#include <utility>

#include "nearnet/machine.hpp"
#include "nearnet/support.hpp"

namespace nearnet {

/// A near-net shape and the machine obstacles registered on one domain lattice.
struct Workspace {
  IndicatorGrid part;
  IndicatorGrid support;
  MachineSetup setup;
};

/// Platform slab `thickness` cells deep directly beneath the near-net bounding box.
inline IndicatorGrid platform_slab(const Lattice& near_net, int thickness) {
  if (thickness < 1) throw InvalidInput("platform thickness must be >= 1 cell");
  const int v = vertical_axis(near_net);
  Index3 lo{0, 0, 0};
  Index3 hi{near_net.dims[0] - 1, near_net.dims[1] - 1, near_net.dims[2] - 1};
  lo[v] = -thickness;
  hi[v] = -1;
  const Lattice l = sub_lattice(near_net, lo, hi);
  IndicatorGrid slab(l);
  for (auto& word : slab.words()) word = ~std::uint64_t{0};
  // Clear the padding bits past the last cell so counts stay exact.
  const std::size_t tail = l.size() % 64;
  if (tail) slab.words().back() &= (std::uint64_t{1} << tail) - 1;
  return slab;
}

/// Register a near-net shape, its platform and every fixture on a common
/// domain lattice covering all of them.
inline Workspace stage(const NearNetShape& nn, const Machine& machine) {
  const IndicatorGrid slab = platform_slab(nn.part.lattice(), machine.platform_thickness);
  Lattice domain = bounding_lattice(nn.part.lattice(), slab.lattice());

  std::vector<IndicatorGrid> fixture_bodies;
  for (const auto& f : machine.fixtures) {
    if (f.body.empty()) {
      fixture_bodies.push_back(f.body);
      continue;
    }
    try {
      fixture_bodies.push_back(crop(f.body));
      domain = bounding_lattice(domain, fixture_bodies.back().lattice());
    } catch (const LatticeMismatch& e) {
      throw LatticeMismatch("fixture '" + f.name + "': " + e.what() +
                            " (fixtures must use the world lattice, cell centers at (i + 1/2) * spacing)");
    }
  }

  Workspace ws{embed(nn.part, domain), embed(nn.support, domain), {}};
  ws.setup.platform = embed(slab, domain);
  for (std::size_t j = 0; j < machine.fixtures.size(); ++j) {
    IndicatorGrid body(domain);
    if (!fixture_bodies[j].empty()) body = embed(fixture_bodies[j], domain);
    ws.setup.fixtures.push_back({machine.fixtures[j].name, std::move(body)});
  }
  ws.setup.tools = machine.tools;
  ws.setup.validate();
  return ws;
}

}  // namespace nearnet
