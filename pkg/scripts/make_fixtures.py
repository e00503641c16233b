"""Regenerate the theory files bundled in ``src/gbf/data``.

Run from the repository root: ``python3 scripts/make_fixtures.py``.
"""

from pathlib import Path

import numpy as np

from gbf import dirac
from gbf.spacetime import (
    TheoryBuilder,
    corrupt_region,
    random_cobordism_theory,
    random_region_span,
    slice_theory,
)
from gbf.specfile import dumps_theory

OUT = Path(__file__).resolve().parents[1] / "src" / "gbf" / "data"
SEED = 20251015


def random_theory(kappa, rng, s1, s, t):
    """Self-gluing region ``M`` plus an unrelated region ``N`` and their union."""
    b = TheoryBuilder(kappa)
    b.hypersurface("S1", s1).hypersurface("S", s).hypersurface("T", t)
    signs = list(s1) + list(s) + [kappa * x for x in s]
    b.region("M", ("S1", "S", "~S"), random_region_span(signs, kappa, rng))
    b.region("N", ("T",), random_region_span(t, kappa, rng))
    b.union("MN", ("M", "N"))
    b.glue("g", "M", 1, 2, "M1")
    return b.build()


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    fermionic = random_theory(-1, rng, (1, -1), (1, -1), (1, -1))
    fixtures = {
        "slice": slice_theory(-1, (1, -1)),
        "random_fermionic": fermionic,
        "broken_c5": corrupt_region(fermionic, "M", rng),
        "bosonic": random_cobordism_theory(1, (1,), (1,), (1, -1), rng),
        "cobordism": random_cobordism_theory(-1, (1, -1), (-1, 1), (1, -1), rng),
        "dirac_t": dirac.build_equal_time_theory(dirac.random_momenta(rng, 1), [0.0, 1.0, 2.0]),
        "dirac_z": dirac.build_constant_z_theory(dirac.random_z_modes(rng, 2, 1.0), [0.0, 1.0, 2.0]),
    }
    for name, theory in fixtures.items():
        (OUT / f"{name}.json").write_text(dumps_theory(theory) + "\n")
        print("wrote", name)


if __name__ == "__main__":
    main()
