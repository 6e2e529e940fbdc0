#!/usr/bin/env python3
# Copyright 2026 The Prism Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the demo scenes under scenes/.

room.scene     6 x 3 x 5 m room, open toward the camera, with a skylight,
               two BK7 panes, a table, a glass sphere, sun and a warm lamp.
cornell.scene  [0, 2]^3 Cornell box with a glass sphere (sidecar mesh) and
               one point light.
"""
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENES = ROOT / "scenes"


def fmt(x: float) -> str:
    s = f"{x:.9f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def vec(v) -> str:
    return " ".join(fmt(c) for c in v)


def quad(a, b, c, d):
    """Two triangles a-b-c, a-c-d."""
    return [a, b, c, d], [(0, 1, 2), (0, 2, 3)]


def box(lo, hi):
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
         (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)]
    f = [(0, 2, 1), (0, 3, 2), (4, 5, 6), (4, 6, 7), (0, 1, 5), (0, 5, 4),
         (3, 6, 2), (3, 7, 6), (0, 4, 7), (0, 7, 3), (1, 2, 6), (1, 6, 5)]
    return v, f


def sphere(centre, radius, slices=24, stacks=12):
    cx, cy, cz = centre
    verts, normals, faces = [], [], []
    for i in range(stacks + 1):
        theta = math.pi * i / stacks
        for j in range(slices):
            phi = 2.0 * math.pi * j / slices
            n = (math.sin(theta) * math.cos(phi), math.cos(theta), math.sin(theta) * math.sin(phi))
            norm = math.sqrt(sum(c * c for c in n))
            n = tuple(c / norm for c in n)
            verts.append((cx + radius * n[0], cy + radius * n[1], cz + radius * n[2]))
            normals.append(n)
    for i in range(stacks):
        for j in range(slices):
            a = i * slices + j
            b = i * slices + (j + 1) % slices
            c = (i + 1) * slices + (j + 1) % slices
            d = (i + 1) * slices + j
            if i != 0:
                faces.append((a, b, c))
            if i != stacks - 1:
                faces.append((a, c, d))
    return verts, normals, faces


def mesh_records(verts, faces, normals=None) -> str:
    lines = [f"v {vec(v)}" for v in verts]
    if normals:
        lines += [f"vn {vec(n)}" for n in normals]
    lines += [f"f {a} {b} {c}" for a, b, c in faces]
    return "\n".join(lines) + "\n"


def mesh_section(name, material, verts, faces) -> str:
    return f"[mesh]\nname = {name}\nmaterial = {material}\n" + mesh_records(verts, faces) + "\n"


def room() -> str:
    out = ["# Demo interior: open-front room with skylight, BK7 panes and a glass sphere.\n"]
    out.append("[render]\ngrid = 380 780 81\nmax_bounces = 6\nthroughput_threshold = 0.001\n"
               "photons_per_light = 200000\nk_nearest = 50\nmax_search_radius = 0.08\nseed = 7\n\n")
    out.append("[camera]\nposition = 3 1.6 9\nlook_at = 3 1.2 0\nup = 0 1 0\nfov = 42\n"
               "width = 128\nheight = 128\n\n")
    for name, rgb in (("back_wall", (0.80, 0.74, 0.60)), ("left_wall", (0.62, 0.30, 0.24)),
                      ("right_wall", (0.30, 0.48, 0.62)), ("floor", (0.45, 0.36, 0.27)),
                      ("ceiling", (0.85, 0.85, 0.85)), ("table", (0.35, 0.22, 0.12))):
        out.append(f"[material]\nname = {name}\ntype = lambertian\nreflectance_rgb = {vec(rgb)}\n\n")
    out.append("[material]\nname = bk7\ntype = dielectric\nior_file = ../data/bk7.txt\n\n")
    out.append("[light]\ntype = directional\ndirection = 0.25 -1 0.15\n"
               "emission_file = ../data/cie_d65.txt\nscale = 0.012\n\n")
    out.append("[light]\ntype = point\nposition = 1.2 2.6 1.4\nemission_rgb = 1 0.78 0.5\nscale = 2.5\n\n")

    W, H, D = 6.0, 3.0, 5.0
    out.append(mesh_section("floor", "floor", *quad((0, 0, 0), (0, 0, D), (W, 0, D), (W, 0, 0))))
    out.append(mesh_section("back", "back_wall", *quad((0, 0, 0), (W, 0, 0), (W, H, 0), (0, H, 0))))
    out.append(mesh_section("left", "left_wall", *quad((0, 0, 0), (0, H, 0), (0, H, D), (0, 0, D))))
    out.append(mesh_section("right", "right_wall", *quad((W, 0, 0), (W, 0, D), (W, H, D), (W, H, 0))))
    # Ceiling with a 2 x 1.5 m skylight opening.
    hx0, hx1, hz0, hz1 = 2.0, 4.0, 1.5, 3.0
    verts, faces = [], []
    for (x0, z0, x1, z1) in ((0, 0, W, hz0), (0, hz1, W, D), (0, hz0, hx0, hz1), (hx1, hz0, W, hz1)):
        v, f = quad((x0, H, z0), (x1, H, z0), (x1, H, z1), (x0, H, z1))
        base = len(verts)
        verts += v
        faces += [(a + base, b + base, c + base) for a, b, c in f]
    out.append(mesh_section("ceiling", "ceiling", verts, faces))
    out.append(mesh_section("table", "table", *box((3.4, 0.0, 1.2), (5.2, 0.75, 2.6))))
    out.append(mesh_section("pane_a", "bk7", *box((0.9, 0.0, 2.2), (2.3, 1.9, 2.23))))
    out.append(mesh_section("pane_b", "bk7", *box((1.5, 0.0, 3.3), (1.53, 1.6, 4.4))))
    v, n, f = sphere((4.3, 1.2, 1.9), 0.45)
    out.append(f"[mesh]\nname = sphere\nmaterial = bk7\n" + mesh_records(v, f, n) + "\n")
    return "".join(out)


def cornell():
    scene = ["# Cornell box over [0, 2]^3 with a BK7 sphere and a point light.\n"]
    scene.append("[render]\ngrid = 380 780 81\nmax_bounces = 6\nphotons_per_light = 100000\n"
                 "k_nearest = 50\nseed = 3\n\n")
    scene.append("[camera]\nposition = 1 1 6.2\nlook_at = 1 1 0\nup = 0 1 0\nfov = 38\n"
                 "width = 96\nheight = 96\n\n")
    for name, rgb in (("white", (0.75, 0.75, 0.75)), ("red", (0.65, 0.08, 0.06)),
                      ("green", (0.12, 0.50, 0.10))):
        scene.append(f"[material]\nname = {name}\ntype = lambertian\nreflectance_rgb = {vec(rgb)}\n\n")
    scene.append("[material]\nname = glass\ntype = dielectric\nior_file = ../data/bk7.txt\n\n")
    scene.append("[light]\ntype = point\nposition = 1 1.9 1\nemission = 1.5\n\n")
    S = 2.0
    scene.append(mesh_section("floor", "white", *quad((0, 0, 0), (0, 0, S), (S, 0, S), (S, 0, 0))))
    scene.append(mesh_section("ceiling", "white", *quad((0, S, 0), (S, S, 0), (S, S, S), (0, S, S))))
    scene.append(mesh_section("back", "white", *quad((0, 0, 0), (S, 0, 0), (S, S, 0), (0, S, 0))))
    scene.append(mesh_section("left", "red", *quad((0, 0, 0), (0, S, 0), (0, S, S), (0, 0, S))))
    scene.append(mesh_section("right", "green", *quad((S, 0, 0), (S, 0, S), (S, S, S), (S, S, 0))))
    scene.append("[mesh]\nname = sphere\nmaterial = glass\nfile = cornell_sphere.mesh\n\n")
    v, n, f = sphere((1.2, 0.5, 0.9), 0.5)
    sidecar = "# Glass sphere, centre (1.2, 0.5, 0.9), radius 0.5\n" + mesh_records(v, f, n)
    return "".join(scene), sidecar


HEADER = "# Copyright 2026 The Prism Authors\n# SPDX-License-Identifier: Apache-2.0\n"


def main() -> None:
    SCENES.mkdir(exist_ok=True)
    (SCENES / "room.scene").write_text(HEADER + room())
    text, sidecar = cornell()
    (SCENES / "cornell.scene").write_text(HEADER + text)
    (SCENES / "cornell_sphere.mesh").write_text(HEADER + sidecar)


if __name__ == "__main__":
    main()
