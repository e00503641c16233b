"""Command line front end.

Exit codes: 0 all checks pass, 1 some check fails, 2 a quantity is
ill-defined (bosonic divergence) without failures, 3 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config
from .amplitude import (
    check_conjugation_law,
    check_form_replacement,
    check_graded_symmetry,
    check_t3x,
)
from .fock import random_state
from .gluing import (
    Cutoff,
    CutoffError,
    GluingData,
    IllDefinedAnomaly,
    UnsupportedStatistics,
    anomaly_limit,
    appendix_identities,
    check_t5a,
    check_t5b,
    check_t5b_renormalized,
    default_chain,
)
from .report import INFO, Check, Report
from .spacetime import REGULAR, UNION, ExactnessError, TheorySpec, check_classical_axioms
from .specfile import SpecError, load_state, load_theory

EXIT_INPUT = 3
SUITES = ("t3x", "t4", "t5a", "t5b", "t5b-star", "all")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are input errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def format_complex(z: complex) -> str:
    """``re+im i`` with twelve digits after the decimal point."""
    z = complex(z)
    re = 0.0 if z.real == 0 else z.real
    im = 0.0 if z.imag == 0 else z.imag
    sign = "-" if im < 0 else "+"
    return f"{re:.12f}{sign}{abs(im):.12f}i"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# suites


def _boundary_signs(theory: TheorySpec) -> list[tuple[str, tuple[int, ...]]]:
    seen, out = set(), []
    for label, sp in theory.spaces.items():
        if label in seen or label.startswith("~"):
            continue
        seen.update({label, theory.reversal[label]})
        out.append((label, sp.signs))
    return out


def _suite_t3x(theory, rng, rep):
    for label, signs in _boundary_signs(theory):
        if len(signs) > 4:
            rep.add(Check(f"slice amplitude on {label} skipped (dimension {len(signs)} above 4)", "T3x",
                          0.0, INFO))
            continue
        sub = check_t3x(theory.kappa, signs, rng, samples=10)
        for c in sub.checks:
            c.name = f"{c.name} [{label}]"
        rep.extend(sub)


def _random_vectors(rng, dim, count):
    return [rng.normal(size=dim) + 1j * rng.normal(size=dim) for _ in range(count)]


def _suite_t4(theory, rng, rep):
    for name, reg in theory.regions.items():
        if reg.kind != REGULAR:
            continue
        ctx = theory.context(name)
        d = ctx.space.dim
        rep.add(Check.from_residual(f"vacuum amplitude is one [{name}]", "V5",
                                    abs(ctx.amplitude_gen([]) - 1.0)))
        vecs = _random_vectors(rng, d, 4)
        for chk in (check_graded_symmetry(ctx, vecs, 0, 3), check_form_replacement(ctx, vecs)):
            chk.name += f" [{name}]"
            rep.add(chk)
        if d <= 6:
            state = random_state(ctx.space, ctx.kappa, rng, [0, 1, 2], nmax=2)
            chk = check_conjugation_law(ctx, state)
            chk.name += f" [{name}]"
            rep.add(chk)


def _suite_t5a(theory, rng, rep):
    for name, reg in theory.regions.items():
        if reg.kind != UNION or len(reg.parts) != 2:
            continue
        c1, c2 = (theory.context(p) for p in reg.parts)
        if c1.space.dim + c2.space.dim > 8:
            continue
        psi1 = random_state(c1.space, theory.kappa, rng, [0, 1, 2], nmax=2)
        psi2 = random_state(c2.space, theory.kappa, rng, [0, 1, 2], nmax=2)
        chk = check_t5a(theory, name, psi1, psi2)
        chk.name += f" [{name}]"
        rep.add(chk)


def _glued_vectors(data: GluingData, rng, count):
    w1 = data.ctx_glued.w.spanning
    dim = data.geometry.rest_space.dim
    return [w1 @ rng.normal(size=w1.shape[1]) + 1j * (w1 @ rng.normal(size=w1.shape[1]))
            if w1.shape[1] else np.zeros(dim, dtype=complex) for _ in range(count)]


def _suite_t5b(theory, rng, rep, mmax):
    for gname in theory.gluings:
        try:
            data = GluingData(theory, gname)
        except (ExactnessError, ValueError) as err:
            rep.add(Check(f"gluing data [{gname}]", "T5b", float("inf"), "fail", {"error": str(err)}))
            continue
        sub = appendix_identities(theory, gname, rng, data=data)
        n = 2 if data.geometry.rest_space.dim else 0
        sub.extend(check_t5b(theory, gname, _glued_vectors(data, rng, n), mmax=mmax, data=data))
        for c in sub.checks:
            c.name += f" [{gname}]"
        rep.extend(sub)


def _suite_t5b_star(theory, rng, rep):
    for gname in theory.gluings:
        if theory.kappa != -1:
            rep.add(Check(f"renormalized composition [{gname}]", "T5b*", 0.0, INFO,
                          {"reason": "implemented for fermions only"}))
            continue
        data = GluingData(theory, gname)
        n = 2 if data.geometry.rest_space.dim else 0
        phis = _glued_vectors(data, rng, n)
        try:
            sub = check_t5b_renormalized(theory, gname, phis, default_chain(data, phis, rng), data=data)
        except (CutoffError, UnsupportedStatistics) as err:
            rep.add(Check(f"renormalized composition [{gname}]", "T5b*", float("inf"), "fail", {"error": str(err)}))
            continue
        for c in sub.checks:
            c.name += f" [{gname}]"
        rep.extend(sub)


def run_quantum(theory: TheorySpec, suites: Sequence[str], seed: int, mmax: int | None = None) -> Report:
    rep = Report("quantum axioms")
    wanted = set(SUITES[:-1]) if "all" in suites else set(suites)
    # each suite gets its own stream so selections do not shift each other's samples
    streams = np.random.SeedSequence(seed).spawn(len(SUITES) - 1)
    rngs = {name: np.random.default_rng(s) for name, s in zip(SUITES[:-1], streams)}
    if "t3x" in wanted:
        _suite_t3x(theory, rngs["t3x"], rep)
    if "t4" in wanted:
        _suite_t4(theory, rngs["t4"], rep)
    if "t5a" in wanted:
        _suite_t5a(theory, rngs["t5a"], rep)
    if "t5b" in wanted:
        _suite_t5b(theory, rngs["t5b"], rep, mmax)
    if "t5b-star" in wanted:
        _suite_t5b_star(theory, rngs["t5b-star"], rep)
    return rep


# ---------------------------------------------------------------------------
# commands


def cmd_check_classical(args) -> int:
    theory = load_theory(args.spec)
    rep = check_classical_axioms(theory, seed=args.seed)
    _emit(rep.to_json(), args.out)
    return rep.exit_code()


def cmd_check_quantum(args) -> int:
    theory = load_theory(args.spec)
    rep = run_quantum(theory, args.suite or ["all"], args.seed, args.mmax)
    _emit(rep.to_json(), args.out)
    return rep.exit_code()


def cmd_amplitude(args) -> int:
    theory = load_theory(args.spec)
    if args.region not in theory.regions:
        raise SpecError(f"unknown region {args.region!r}")
    state = load_state(args.state, theory, args.region, args.nmax)
    value = theory.context(args.region).amplitude(state)
    _emit(format_complex(value), args.out)
    return 0


def _chain(data: GluingData, kind: str, rng) -> list[Cutoff]:
    if kind == "full":
        return [Cutoff.full(data.sigma_space)]
    return default_chain(data, [], rng)


def cmd_anomaly(args) -> int:
    import json

    theory = load_theory(args.spec)
    if args.gluing not in theory.gluings:
        raise SpecError(f"unknown gluing {args.gluing!r}")
    rng = np.random.default_rng(args.seed)
    data = GluingData(theory, args.gluing)
    series = anomaly_limit(theory, args.gluing, _chain(data, args.chain, rng), mmax=args.mmax, data=data)
    body = series.to_dict()
    body["stable_from"] = series.stabilization_index(config.settings.tol)
    _emit(json.dumps(body, indent=2, sort_keys=True), args.out)
    return 0 if all(series.converged) else 2


def cmd_dirac_demo(args) -> int:
    from . import dirac

    rng = np.random.default_rng(args.seed)
    rep = Report(f"dirac {args.slab} slab")
    for rep_name in dirac.REPRESENTATIONS:
        gb = dirac.gamma(rep_name)
        rep.add(Check.from_residual(f"Clifford relations ({rep_name})", "dirac", gb.clifford_residual(), 1e-12))
    m = 1.0
    if args.modes is None:
        args.modes = 1 if args.slab == "t" else 2
    if args.slab == "t":
        momenta = dirac.random_momenta(rng, args.modes)
        theory = dirac.build_equal_time_theory(momenta, [0.0, 1.0, 2.0], m)
        worst = max(max(dirac.spinor_residuals(k, m, dirac.gamma()).values()) for k in momenta)
        rep.add(Check.from_residual("spinor identities", "dirac", worst, 1e-10))
        rep.add(Check.from_residual("omega_z equals omega_t", "dirac",
                                    dirac.omega_comparison(momenta, m)["omega"], 1e-10))
    else:
        modes = dirac.random_z_modes(rng, args.modes, m)
        theory = dirac.build_constant_z_theory(modes, [0.0, 1.0, 2.0], m)
        worst = max(max(dirac.tilde_residuals(E, kt, m).values()) for E, kt in modes)
        rep.add(Check.from_residual("tilde spinor identities (consistent sign)", "dirac", worst, 1e-10))
        first = theory.metadata["intervals"][0]
        rep.add(Check("slice split differs from the sign split", "dirac",
                      dirac.split_projector_difference(theory, first), INFO))
    rep.extend(check_classical_axioms(theory, seed=args.seed))
    if theory.spaces[theory.regions[theory.metadata["intervals"][0]].boundary[0]].dim <= 8:
        rep.extend(run_quantum(theory, ["t4", "t5b", "t5b-star"], args.seed, args.mmax))
    _emit(rep.to_json(), args.out)
    return rep.exit_code()


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed for sampled checks")
    common.add_argument("--tol", type=float, default=None, help="pass/fail tolerance")
    common.add_argument("--nmax", type=int, default=None, help="Fock degree truncation")
    common.add_argument("--mmax", type=int, default=None, help="degree cap of bosonic anomaly sums")
    common.add_argument("--out", default=None, help="write output to this file")

    parser = _Parser(prog="gbf", description="Quantization checks for linear field theories.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-classical", parents=[common], help="check the classical axioms")
    p.add_argument("spec")
    p.set_defaults(func=cmd_check_classical)

    p = sub.add_parser("check-quantum", parents=[common], help="check the quantum axioms")
    p.add_argument("spec")
    p.add_argument("--suite", action="append", choices=SUITES)
    p.set_defaults(func=cmd_check_quantum)

    p = sub.add_parser("amplitude", parents=[common], help="amplitude of a boundary state")
    p.add_argument("spec")
    p.add_argument("--region", required=True)
    p.add_argument("--state", required=True, help="state file (JSON, or the word 'vacuum')")
    p.set_defaults(func=cmd_amplitude)

    p = sub.add_parser("anomaly", parents=[common], help="gluing anomaly along a cutoff chain")
    p.add_argument("spec")
    p.add_argument("--gluing", required=True)
    p.add_argument("--chain", choices=("auto", "full"), default="auto")
    p.set_defaults(func=cmd_anomaly)

    p = sub.add_parser("dirac-demo", parents=[common], help="checks on the truncated Dirac model")
    p.add_argument("--slab", choices=("t", "z"), default="t")
    p.add_argument("--modes", type=int, default=None, help="number of modes (default 1 for t, 2 for z)")
    p.set_defaults(func=cmd_dirac_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    changes = {k: getattr(args, k) for k in ("tol", "nmax", "mmax") if getattr(args, k) is not None}
    try:
        with config.override(**changes):
            return args.func(args)
    except (SpecError, ExactnessError, CutoffError) as err:
        print(f"gbf: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except IllDefinedAnomaly as err:
        print(f"gbf: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
