#!/usr/bin/env python3
"""Writes the sample geometry used by the configs in this directory.

bridge.stl   arch-like block: two piers under a deck, extruded along y (mm)
hook.vol     planar hook profile on a 1 mm lattice, nz = 1
"""

import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent


def prism(profile, depth):
    """Triangles of a closed prism: CCW profile in (x, z), extruded over y in [0, depth]."""
    tris = []
    n = len(profile)
    for i in range(n):
        (x0, z0), (x1, z1) = profile[i], profile[(i + 1) % n]
        a, b = (x0, 0.0, z0), (x1, 0.0, z1)
        c, d = (x1, depth, z1), (x0, depth, z0)
        tris += [(a, b, c), (a, c, d)]
    return tris


def cap(rects, y, flip):
    tris = []
    for x0, z0, x1, z1 in rects:
        p = [(x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1)]
        t = [(p[0], p[2], p[1]), (p[0], p[3], p[2])]
        tris += [(a, c, b) for a, b, c in t] if flip else t
    return tris


def bridge():
    # Inverted U: deck 40 x 6 on top of two 8 mm piers, 24 mm tall overall, 20 mm deep.
    profile = [(0, 0), (8, 0), (8, 18), (32, 18), (32, 0), (40, 0), (40, 18), (40, 24), (32, 24), (8, 24), (0, 24), (0, 18)]
    rects = [(0, 0, 8, 18), (32, 0, 40, 18), (0, 18, 8, 24), (8, 18, 32, 24), (32, 18, 40, 24)]
    # Side walls are wound CW in (x, z) seen from +y, so they face outward.
    sides = [(a, c, b) for a, b, c in prism(profile, 20.0)]
    return sides + cap(rects, 0.0, True) + cap(rects, 20.0, False)


def write_ascii_stl(path, name, tris):
    with open(path, "w") as f:
        f.write(f"solid {name}\n")
        for t in tris:
            f.write(" facet normal 0 0 0\n  outer loop\n")
            for v in t:
                f.write(f"   vertex {v[0]:g} {v[1]:g} {v[2]:g}\n")
            f.write("  endloop\n endfacet\n")
        f.write(f"endsolid {name}\n")


def write_bit_volume(path, nx, ny, cells):
    bits = bytearray((nx * ny + 7) // 8)
    for i, j in cells:
        lin = i + nx * j
        bits[lin // 8] |= 1 << (lin % 8)
    header = f"nearnet-volume 1\ndims {nx} {ny} 1\nspacing 1\norigin 0.5 0.5 0.5\ndtype bit\nend\n"
    with open(path, "wb") as f:
        f.write(header.encode() + bytes(bits))


def hook():
    # Upright post with a curled tip overhanging a slot.
    nx, ny = 28, 30
    cells = set()
    cells |= {(i, j) for i in range(4, 8) for j in range(0, 26)}
    cells |= {(i, j) for i in range(4, 24) for j in range(26, 30)}
    cells |= {(i, j) for i in range(20, 24) for j in range(16, 26)}
    cells |= {(i, j) for i in range(14, 20) for j in range(16, 19)}
    return nx, ny, sorted(cells)


if __name__ == "__main__":
    write_ascii_stl(HERE / "bridge.stl", "bridge", bridge())
    write_bit_volume(HERE / "hook.vol", *hook())
