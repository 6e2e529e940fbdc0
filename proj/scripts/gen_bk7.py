#!/usr/bin/env python3
# Copyright 2026 The Prism Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes data/bk7.txt: (wavelength_nm, n, k) for Schott N-BK7.

n comes from the three-term Sellmeier dispersion formula with the
coefficients published on the Schott N-BK7 datasheet:

    n^2(l) = 1 + sum_i B_i l^2 / (l^2 - C_i),   l in micrometres

k is taken as zero (internal transmittance of BK7 over the visible range
is above 0.99 for 10 mm, which is negligible at pane thickness).
"""
import math
import pathlib

B = (1.03961212, 0.231792344, 1.01046945)
C = (0.00600069867, 0.0200179144, 103.560653)


def sellmeier(nm: float) -> float:
    l2 = (nm / 1000.0) ** 2
    return math.sqrt(1.0 + sum(b * l2 / (l2 - c) for b, c in zip(B, C)))


def main() -> None:
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "bk7.txt"
    with out.open("w") as f:
        f.write("# Copyright 2026 The Prism Authors\n# SPDX-License-Identifier: Apache-2.0\n")
        f.write("# Schott N-BK7 complex index of refraction (Sellmeier, k = 0)\n")
        f.write("# wavelength_nm n k\n")
        for nm in range(360, 835, 5):
            f.write(f"{nm} {sellmeier(nm):.8f} 0\n")


if __name__ == "__main__":
    main()
