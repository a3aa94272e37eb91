"""Command-line scenario runner.

Every subcommand reads its parameters from flags and, optionally, from a
single JSON document given by ``--config`` whose keys are the long flag
names (``-`` replaced by ``_``). Explicit flags win over the config. The
only environment variable consulted is ``COVCOH_SEED``, which overrides
``--seed``.

Exit status: 0 on success, 2 when a verdict-type finding is reported
(witness violation, invalid channel, failed bound), 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import channels, lindblad, relaxometry, thermo, transfer, witness
from .errors import CovcohError, PreconditionError
from .linalg import Trajectory
from .spectrum import Hamiltonian, bohr_modes, density_from_dict

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_FINDING = 0, 1, 2


class UsageError(CovcohError):
    pass


def fmt(x):
    return "%.17g" % (x + 0.0)


def _schema(cmd):
    return f"covcoh.{cmd}/v{SCHEMA_VERSION}"


def _write_csv(header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    _emit(buf.getvalue(), out)


def _write_json(cmd, payload, out):
    doc = {"schema": _schema(cmd)}
    doc.update(payload)
    _emit(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", out)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _load_json(path, what):
    if not os.path.exists(path):
        raise UsageError(f"{what}: file {path!r} does not exist")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{what}: {path} is not valid JSON ({exc})") from None


def sweep(fn, grid, workers=4):
    """Evaluate ``fn`` over ``grid`` in parallel; results keep grid order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, grid))


def _time_grid(args):
    if args.tmax is None or args.tmax <= 0:
        raise UsageError("tmax: must be positive")
    if args.steps is None or args.steps < 2:
        raise UsageError("steps: need at least 2 grid points")
    return np.linspace(0.0, args.tmax, args.steps)


# ---- shared model inputs -------------------------------------------------

def _add_model_args(p):
    p.add_argument("--generator", help="generator JSON with 'omegas' and 'Ablocks'")
    p.add_argument("--rates", help="rate matrix JSON {'L': [[...]]} (with --hamiltonian)")
    p.add_argument("--hamiltonian", help="Hamiltonian JSON {'omegas': [...]}")
    p.add_argument("--optimal", action="store_true",
                   help="with --rates: use the bound-attaining generator for the state")
    p.add_argument("--t1", type=float, help="qubit relaxation time")
    p.add_argument("--t2", type=float, help="qubit decoherence time (<= 2 t1)")
    p.add_argument("--pi", type=float, help="qubit stationary ground population")
    p.add_argument("--omega", type=float, help="qubit gap (default 1)")
    p.add_argument("--state", help="density JSON {'d', 're', 'im'}")
    p.add_argument("--p0", type=float, help="qubit initial ground population")
    p.add_argument("--c0", type=float, help="qubit initial coherence rho_10 (real)")


def _qubit_state(args):
    if args.p0 is None or args.c0 is None:
        raise UsageError("state: give --state or both --p0 and --c0")
    rho = np.array([[args.p0, args.c0], [args.c0, 1.0 - args.p0]], dtype=complex)
    return rho


def _load_state(args, d):
    if args.state:
        rho = density_from_dict(_load_json(args.state, "state"))
    else:
        rho = _qubit_state(args)
    if rho.shape != (d, d):
        raise UsageError(f"state: dimension {rho.shape[0]} does not match the model ({d})")
    return rho


def bloch_rates(t1, pi):
    """Qubit rates with relaxation time ``t1`` and stationary ground population ``pi``."""
    return np.array([[-(1.0 - pi) / t1, pi / t1], [(1.0 - pi) / t1, -pi / t1]])


def bloch_generator(t1, t2, pi, omega=1.0):
    if t1 <= 0 or t2 <= 0:
        raise PreconditionError("t1 and t2 must be positive")
    if t2 > 2 * t1 * (1 + 1e-12):
        raise PreconditionError("t2 > 2 t1 is not completely positive")
    L = bloch_rates(t1, pi)
    extra = max(1.0 / t2 - 0.5 / t1, 0.0)
    table = bohr_modes(Hamiltonian([0.0, omega]))
    return lindblad.generator_from_rates(L, table, dephasing=[2.0 * extra, 0.0])


def _load_model(args, need_state=True):
    """Return (generator, state or None)."""
    if args.generator:
        gen = lindblad.CovariantGenerator.from_dict(_load_json(args.generator, "generator"))
        rho = _load_state(args, gen.d) if need_state else None
        return gen, rho
    if args.rates:
        if not args.hamiltonian:
            raise UsageError("hamiltonian: required together with --rates")
        L = np.asarray(_load_json(args.rates, "rates").get("L"), dtype=float)
        H = Hamiltonian.from_dict(_load_json(args.hamiltonian, "hamiltonian"))
        table = bohr_modes(H)
        rho = _load_state(args, H.d) if (need_state or args.optimal) else None
        if args.optimal:
            return lindblad.optimal_generator(L, rho, table), rho
        return lindblad.generator_from_rates(L, table), rho
    if args.t1 is not None:
        t2 = 2 * args.t1 if args.t2 is None else args.t2
        pi = 0.5 if args.pi is None else args.pi
        gen = bloch_generator(args.t1, t2, pi, 1.0 if args.omega is None else args.omega)
        return gen, (_load_state(args, 2) if need_state else None)
    raise UsageError("model: give --generator, --rates with --hamiltonian, or --t1")


def _entry_columns(d):
    return [(x, y) for x in range(d) for y in range(x)]


# ---- subcommands ---------------------------------------------------------

def cmd_evolve(args):
    gen, rho = _load_model(args)
    times = _time_grid(args)
    traj = lindblad.evolve(gen, rho, times)
    d = gen.d
    if args.json:
        _write_json("evolve", {"times": times, "re": traj.states.real,
                               "im": traj.states.imag}, args.out)
        return EXIT_OK
    if d == 2:
        rows = [(t, s[0, 0].real, abs(s[1, 0])) for t, s in zip(times, traj.states)]
        _write_csv(["t", "p", "abs_c"], rows, args.out)
        return EXIT_OK
    pairs = _entry_columns(d)
    header = ["t"] + [f"p_{x}" for x in range(d)] + [f"abs_{x}_{y}" for x, y in pairs]
    rows = [[t] + list(np.real(np.diag(s))) + [abs(s[x, y]) for x, y in pairs]
            for t, s in zip(times, traj.states)]
    _write_csv(header, rows, args.out)
    return EXIT_OK


def cmd_bound(args):
    gen, rho = _load_model(args)
    times = _time_grid(args)
    traj = lindblad.evolve(gen, rho, times)
    L = lindblad.population_generator(gen)
    table = gen.table
    d = gen.d
    bound = np.zeros((len(times), d, d))
    for k in table.nonzero_modes():
        bt = lindblad.bound_trajectory(L, rho, table.omegas[k], table, times)
        for i, (x, y) in enumerate(table.pairs[k]):
            bound[:, x, y] = bt.states[:, i]
    pairs = _entry_columns(d)
    excess = max((abs(traj.states[n, x, y]) - bound[n, x, y]
                  for n in range(len(times)) for x, y in pairs), default=0.0)
    status = EXIT_FINDING if excess > 1e-8 else EXIT_OK
    if args.json:
        _write_json("bound", {"times": times,
                              "pairs": pairs,
                              "actual": [[abs(traj.states[n, x, y]) for x, y in pairs]
                                         for n in range(len(times))],
                              "bound": [[bound[n, x, y] for x, y in pairs]
                                        for n in range(len(times))],
                              "max_excess": excess}, args.out)
        return status
    header = ["t"]
    for x, y in pairs:
        header += [f"abs_{x}_{y}", f"bound_{x}_{y}"]
    rows = []
    for n, t in enumerate(times):
        row = [t]
        for x, y in pairs:
            row += [abs(traj.states[n, x, y]), bound[n, x, y]]
        rows.append(row)
    _write_csv(header, rows, args.out)
    return status


def cmd_t1t2(args):
    gen, _ = _load_model(args, need_state=False)
    prof = relaxometry.relaxation_profile(gen)
    chk = relaxometry.harmonic_bound_check(gen)
    payload = prof.to_dict()
    payload["bound"] = {"lhs": chk.lhs, "rhs": chk.rhs, "holds": chk.holds}
    _write_json("t1t2", payload, args.out)
    return EXIT_OK if chk.holds else EXIT_FINDING


def cmd_transfer(args):
    scenario = args.scenario
    if scenario == "qutrit" and args.optimize:
        opt = transfer.qutrit_transfer_optimize(args.grid_density)
        _write_json("transfer", {"scenario": "qutrit", "best_value": opt.best_value,
                                 "best_time": opt.best_time, "best_L": opt.best_L,
                                 "ceiling": opt.ceiling}, args.out)
        return EXIT_OK
    times = _time_grid(args)
    c1_0 = args.c1
    lam = args.lam
    if scenario == "qutrit":
        if args.rates:
            L = np.asarray(_load_json(args.rates, "rates").get("L"), dtype=float)
        else:
            L = lindblad.rates_from_offdiagonal([[0, 0, 0], [2 * lam, 0, 0], [0, lam, 0]])
        traj = transfer.qutrit_transfer_curve(L, c1_0, times)
        bound = transfer.relaxed_transfer_curve(L, c1_0, times)
    elif scenario == "four-level":
        traj = transfer.four_level_transfer(lam, c1_0, times)
        bound = np.full(len(times), c1_0)
    elif scenario == "mixing":
        c2_0 = args.c2
        traj = transfer.coherence_mixing(lam, (c1_0, c2_0), times)
        bound = transfer.mixing_bound(lam, (c1_0, c2_0), times).states[:, 1]
    else:
        raise UsageError(f"scenario: unknown value {scenario!r}")
    if args.json:
        _write_json("transfer", {"scenario": scenario, "times": times,
                                 "c1": traj.states[:, 0], "c2": traj.states[:, 1],
                                 "bound": bound}, args.out)
        return EXIT_OK
    rows = [(t, s[0], s[1], b) for t, s, b in zip(times, np.real(traj.states), bound)]
    _write_csv(["t", "c1", "c2", "bound"], rows, args.out)
    return EXIT_OK


def _read_trajectory_csv(path, d):
    if not os.path.exists(path):
        raise UsageError(f"input: file {path!r} does not exist")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise UsageError("input: empty trajectory")
    times, states = [], []
    for n, row in enumerate(rows):
        try:
            times.append(float(row["t"]))
            rho = np.empty((d, d), dtype=complex)
            for x in range(d):
                for y in range(d):
                    rho[x, y] = float(row[f"re_{x}_{y}"]) + 1j * float(row[f"im_{x}_{y}"])
        except KeyError as exc:
            raise UsageError(f"input: row {n} lacks column {exc}") from None
        states.append(rho)
    return Trajectory(np.array(times), np.array(states))


def cmd_witness(args):
    mode = args.mode
    if not args.input:
        raise UsageError("input: required")
    if mode == "snapshot":
        obj = _load_json(args.input, "input")
        try:
            snap = witness.QubitSnapshot(float(obj["p0"]), float(obj["c0"]), float(obj["pt"]),
                                         float(obj["ct"]), float(obj["pi"]),
                                         bool(obj.get("fix_pi", True)))
        except KeyError as exc:
            raise UsageError(f"input.{exc.args[0]}: missing") from None
        verdict = witness.qubit_snapshot_witness(snap)
    elif mode == "trajectory":
        if not args.hamiltonian:
            raise UsageError("hamiltonian: required for trajectory input")
        H = Hamiltonian.from_dict(_load_json(args.hamiltonian, "hamiltonian"))
        traj = _read_trajectory_csv(args.input, H.d)
        verdict = witness.s_omega_monotonicity_witness(traj, bohr_modes(H))
    elif mode == "spectral":
        obj = _load_json(args.input, "input")
        if "P" not in obj:
            raise UsageError("input.P: missing")
        P = np.asarray(obj["P"], dtype=float)
        if P.shape[0] > 2 and P.ndim == 1:
            raise UsageError("input.P: marginal data only; a full transition matrix is needed")
        verdict = witness.spectral_witness(P)
    else:
        raise UsageError(f"mode: unknown value {mode!r}")
    _write_json("witness", {"mode": mode, **verdict.to_dict()}, args.out)
    return EXIT_FINDING if verdict.flagged else EXIT_OK


def cmd_embed_region(args):
    d = args.d
    phi, r = witness.embeddability_curve(d, args.n_phi)
    samples = witness.karpelevic_sample(d, args.samples, args.seed) if args.samples else []
    if args.json:
        _write_json("embed-region", {"d": d, "phi": phi, "radius": r,
                                     "samples_re": np.real(samples),
                                     "samples_im": np.imag(samples)}, args.out)
        return EXIT_OK
    rows = [("curve", p, rr, rr * np.cos(p), rr * np.sin(p)) for p, rr in zip(phi, r)]
    rows += [("sample", float(np.angle(z)), abs(z), z.real, z.imag) for z in samples]
    _write_csv(["kind", "phi", "radius", "re", "im"], rows, args.out)
    return EXIT_OK


def cmd_gto(args):
    omega = 1.0 if args.omega is None else args.omega
    grid = np.linspace(0.0, 1.0, args.n)

    def one(pt):
        b = thermo.gto_qubit_bounds(args.p0, args.c0, args.beta, omega, pt)
        return pt, b.nm_bound, b.markov_bound

    rows = sweep(one, grid)
    if args.json:
        _write_json("gto", {"pt": grid, "nm_bound": [r[1] for r in rows],
                            "markov_bound": [r[2] for r in rows]}, args.out)
        return EXIT_OK
    _write_csv(["pt", "nm_bound", "markov_bound"], rows, args.out)
    return EXIT_OK


def cmd_validate(args):
    if not args.input:
        raise UsageError("input: required")
    obj = _load_json(args.input, "input")
    if "Ablocks" in obj:
        kind = "generator"
        report = lindblad.validate_generator(lindblad.CovariantGenerator.from_dict(obj))
    elif "blocks" in obj:
        kind = "channel"
        report = channels.validate(channels.CovariantChannel.from_dict(obj))
    else:
        raise UsageError("input: expected a 'blocks' (channel) or 'Ablocks' (generator) field")
    _write_json("validate", {"kind": kind, "valid": report.valid,
                             "problems": list(report.problems),
                             "min_block_eigenvalues": {fmt(k): v for k, v in
                                                       report.min_eigenvalues.items()}},
                args.out)
    return EXIT_OK if report.valid else EXIT_FINDING


# ---- parser --------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="covcoh", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON document with parameters")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, help="RNG seed (env COVCOH_SEED overrides)")
        p.add_argument("--json", action="store_true", help="emit versioned JSON")

    def grid(p, tmax=5.0, steps=101):
        p.add_argument("--tmax", type=float, default=None, help=f"final time (default {tmax})")
        p.add_argument("--steps", type=int, default=None, help=f"grid points (default {steps})")
        p.set_defaults(_grid_defaults=(tmax, steps))

    p = sub.add_parser("evolve", help="evolve a state under a covariant generator")
    common(p), _add_model_args(p), grid(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("bound", help="actual coherences against the optimal bound")
    common(p), _add_model_args(p), grid(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("t1t2", help="relaxation and decoherence times")
    common(p), _add_model_args(p)
    p.set_defaults(func=cmd_t1t2)

    p = sub.add_parser("transfer", help="coherence transfer and mixing scenarios")
    common(p), grid(p, tmax=10.0, steps=201)
    p.add_argument("--scenario", choices=["qutrit", "four-level", "mixing"], default=None)
    p.add_argument("--optimize", action="store_true", help="qutrit: search for the best rates")
    p.add_argument("--grid-density", type=int, default=None)
    p.add_argument("--rates", help="qutrit rate matrix JSON {'L': ...}")
    p.add_argument("--lam", type=float, default=None, help="rate scale (default 1)")
    p.add_argument("--c1", type=float, default=None, help="initial source coherence (default 1)")
    p.add_argument("--c2", type=float, default=None, help="mixing: initial |rho_32| (default 0)")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("witness", help="non-Markovianity witnesses")
    common(p)
    p.add_argument("--mode", choices=["snapshot", "trajectory", "spectral"], default=None)
    p.add_argument("--input", help="snapshot/spectral JSON or trajectory CSV")
    p.add_argument("--hamiltonian", help="Hamiltonian JSON (trajectory mode)")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("embed-region", help="embeddable eigenvalue region and random spectra")
    common(p)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n-phi", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_embed_region)

    p = sub.add_parser("gto", help="qubit coherence bounds under thermal maps")
    common(p)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--n", type=int, default=None, help="pt grid size (default 200)")
    p.set_defaults(func=cmd_gto)

    p = sub.add_parser("validate", help="check a channel or generator file")
    common(p)
    p.add_argument("--input")
    p.set_defaults(func=cmd_validate)
    return parser


_DEFAULTS = {
    "scenario": "qutrit", "grid_density": 12, "lam": 1.0, "c1": 1.0, "c2": 0.0,
    "mode": "snapshot", "d": 3, "n_phi": 361, "samples": 0, "n": 200, "beta": 0.0,
}
_INTERNAL = {"func", "command", "config", "_grid_defaults"}


def _apply_config(args, parser):
    if args.config:
        cfg = _load_json(args.config, "config")
        if not isinstance(cfg, dict):
            raise UsageError("config: top level must be a JSON object")
        known = set(vars(args)) - _INTERNAL
        for key, val in cfg.items():
            if key not in known:
                raise UsageError(f"config.{key}: unknown field for '{args.command}'")
            current = getattr(args, key)
            if current is None or current is False:
                setattr(args, key, val)
    for key, val in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    if hasattr(args, "_grid_defaults"):
        tmax, steps = args._grid_defaults
        args.tmax = tmax if args.tmax is None else float(args.tmax)
        args.steps = steps if args.steps is None else int(args.steps)
    env = os.environ.get("COVCOH_SEED")
    if env is not None:
        try:
            args.seed = int(env)
        except ValueError:
            raise UsageError(f"COVCOH_SEED: not an integer: {env!r}") from None
    if args.seed is None:
        args.seed = 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        if args.command == "gto" and (args.p0 is None or args.c0 is None):
            raise UsageError("p0, c0: required for gto")
        return args.func(args)
    except (CovcohError, ValueError, OSError) as exc:
        print(f"covcoh {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
