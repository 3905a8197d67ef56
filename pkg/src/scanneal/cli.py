"""Command-line interface: model file parsing, run records, subcommands."""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import annealing, dynamics, exactlab, pinning
from .model import IsingModel, PinningVector


class ParseError(ValueError):
    """Model file parse failure with a line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def parse_model(text: str, fmt: str = "native") -> IsingModel:
    """Parse a model document.

    Native format: header line ``ising <n>``; coupling lines
    ``c <x> <y> <J>`` (0-based, no self-loops, each unordered pair at most
    once); field lines ``f <x> <h>``; ``#`` comments and blank lines are
    ignored.

    Gset format: first line ``<n> <m>``, then m lines ``<x> <y> <w>``
    (1-based).  Edge weights map to couplings J = -w, so ground states of
    the resulting Ising instance are maximum cuts.
    """
    if fmt == "gset":
        return _parse_gset(text)
    if fmt != "native":
        raise ValueError(f"unknown model format {fmt!r}")
    n = None
    edges = []
    seen = set()
    fields = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "ising":
            if n is not None:
                raise ParseError(line_no, "duplicate header")
            n = _parse_int(parts, 1, 2, line_no)
            if n < 1:
                raise ParseError(line_no, f"vertex count must be positive, got {n}")
        elif parts[0] == "c":
            if n is None:
                raise ParseError(line_no, "coupling before 'ising <n>' header")
            if len(parts) != 4:
                raise ParseError(line_no, "expected 'c <x> <y> <J>'")
            x, y = _vertex(parts[1], n, line_no), _vertex(parts[2], n, line_no)
            if x == y:
                raise ParseError(line_no, f"self-loop at vertex {x}")
            key = (min(x, y), max(x, y))
            if key in seen:
                raise ParseError(line_no, f"duplicate edge {key}")
            seen.add(key)
            edges.append((x, y, _parse_float(parts[3], line_no)))
        elif parts[0] == "f":
            if n is None:
                raise ParseError(line_no, "field before 'ising <n>' header")
            if len(parts) != 3:
                raise ParseError(line_no, "expected 'f <x> <h>'")
            x = _vertex(parts[1], n, line_no)
            if x in fields:
                raise ParseError(line_no, f"duplicate field for vertex {x}")
            fields[x] = _parse_float(parts[2], line_no)
        else:
            raise ParseError(line_no, f"unknown directive {parts[0]!r}")
    if n is None:
        raise ParseError(1, "missing 'ising <n>' header")
    h = np.zeros(n)
    for x, v in fields.items():
        h[x] = v
    return IsingModel(n, edges, h)


def _parse_gset(text: str) -> IsingModel:
    lines = [
        (i, ln.split("#", 1)[0].strip())
        for i, ln in enumerate(text.splitlines(), start=1)
    ]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise ParseError(1, "empty Gset file")
    line_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise ParseError(line_no, "expected '<n> <m>' header")
    n = _parse_int(parts, 0, 2, line_no)
    m = _parse_int(parts, 1, 2, line_no)
    if len(lines) - 1 != m:
        raise ParseError(line_no, f"expected {m} edge lines, found {len(lines) - 1}")
    edges = []
    seen = set()
    for line_no, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError(line_no, "expected '<x> <y> <w>'")
        x = _parse_int(parts, 0, 3, line_no) - 1
        y = _parse_int(parts, 1, 3, line_no) - 1
        if not (0 <= x < n and 0 <= y < n):
            raise ParseError(line_no, f"vertex out of range: {x + 1} or {y + 1}")
        if x == y:
            raise ParseError(line_no, f"self-loop at vertex {x + 1}")
        key = (min(x, y), max(x, y))
        if key in seen:
            raise ParseError(line_no, f"duplicate edge {key}")
        seen.add(key)
        w = _parse_float(parts[2], line_no)
        edges.append((x, y, -w))  # ground state <=> maximum cut
    return IsingModel(n, edges, np.zeros(n))


def _parse_int(parts, i, expect_len, line_no):
    if len(parts) != expect_len:
        raise ParseError(line_no, f"expected {expect_len} tokens")
    try:
        return int(parts[i])
    except ValueError:
        raise ParseError(line_no, f"malformed integer {parts[i]!r}") from None


def _parse_float(tok, line_no):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(line_no, f"malformed number {tok!r}") from None


def _vertex(tok, n, line_no):
    try:
        x = int(tok)
    except ValueError:
        raise ParseError(line_no, f"malformed vertex {tok!r}") from None
    if not 0 <= x < n:
        raise ParseError(line_no, f"vertex {x} out of range for n={n}")
    return x


def serialize_model(model: IsingModel) -> str:
    """Canonical native-format text: sorted edges, then nonzero fields."""
    lines = [f"ising {model.n}"]
    for (x, y) in sorted(model.couplings):
        lines.append(f"c {x} {y} {model.couplings[(x, y)]:.17g}")
    for x in range(model.n):
        if model.fields[x] != 0.0:
            lines.append(f"f {x} {model.fields[x]:.17g}")
    return "\n".join(lines) + "\n"


def model_hash(model: IsingModel) -> str:
    return hashlib.sha256(serialize_model(model).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------

def format_run_record(
    model: IsingModel, result: annealing.AnnealResult, wall_time: float
) -> str:
    """One line per run: fixed field order, reals at 17 significant digits,
    spins as a +/- string."""
    spins = "".join("+" if s > 0 else "-" for s in result.best_config)
    checkpoints = ";".join(
        f"{t}:{e:.17g}" for t, _, e, _ in result.trajectory
    )
    return (
        f"model={model_hash(model)} sampler={result.sampler_kind} "
        f"schedule={result.schedule} seed={result.seed} "
        f"best_energy={result.best_energy:.17g} best_config={spins} "
        f"walltime={wall_time:.3f} checkpoints={checkpoints}"
    )


# ---------------------------------------------------------------------------
# pinning / schedule option parsing
# ---------------------------------------------------------------------------

def resolve_pinning(spec: str, model: IsingModel, slack: float = 1.0) -> PinningVector:
    """Parse a --pinning/--q option: ``spectral:all``, ``spectral:none``,
    ``spectral:0,1,2``, ``uniform:<value>``, or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    if kind == "spectral":
        if arg in ("all", "", "V"):
            return pinning.build_pinning(model, None, slack=slack)
        if arg in ("none", "empty"):
            return pinning.build_pinning(model, [], slack=slack)
        members = [int(tok) for tok in arg.split(",") if tok]
        return pinning.build_pinning(model, members, slack=slack)
    if kind == "uniform":
        return PinningVector(
            np.full(model.n, float(arg)), provenance=f"uniform({arg})"
        )
    if kind == "file":
        values = [float(ln) for ln in Path(arg).read_text().split()]
        return PinningVector(np.asarray(values), provenance="explicit")
    raise ValueError(f"unknown pinning spec {spec!r}")


def build_schedule(args, model: IsingModel, q: PinningVector) -> annealing.Schedule:
    if args.schedule == "fixed":
        return annealing.fixed_schedule(args.beta, args.steps)
    if args.schedule == "log":
        gamma = args.gamma
        if gamma is None:
            gamma, _ = annealing.gamma_constant(model, q)
        return annealing.log_schedule(gamma, args.steps)
    return annealing.exp_schedule(
        args.steps, beta0=args.beta0, ratio=args.ratio, beta_max=args.beta_max
    )


def _load_model(args) -> IsingModel:
    return parse_model(Path(args.model).read_text(), fmt=args.format)


def _thread_cap() -> int:
    # 0 = auto; vectorized numpy is effectively single-threaded here, so any
    # cap >= 1 is honored trivially
    raw = os.environ.get("SCA_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise SystemExit(f"invalid SCA_THREADS value {raw!r}")
    if cap < 0:
        raise SystemExit(f"SCA_THREADS must be >= 0, got {cap}")
    return cap


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    _thread_cap()
    model = _load_model(args)
    q = resolve_pinning(args.pinning, model, slack=args.slack)
    schedule = build_schedule(args, model, q)
    seeds = [args.seed_base + i for i in range(args.seeds)]
    start = time.perf_counter()
    results = annealing.anneal_replicas(
        model, q, schedule, args.sampler, seeds,
        epsilon=args.eps, record_every=args.record_every,
    )
    wall = time.perf_counter() - start
    lines = [format_run_record(model, r, wall / len(results)) for r in results]
    out = "\n".join(lines) + "\n"
    sys.stdout.write(out)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(out)
    return 0


def cmd_exact(args) -> int:
    model = _load_model(args)
    q = resolve_pinning(args.q, model)
    beta = args.beta
    what = args.what
    if what == "gibbs":
        _print_distribution(exactlab.gibbs_distribution(model, beta))
    elif what == "sca-dist":
        _print_distribution(exactlab.sca_distribution(model, q, beta))
    elif what == "sca-kernel":
        _print_matrix(exactlab.sca_kernel(model, q, beta).rows)
    elif what == "glauber-kernel":
        _print_matrix(exactlab.glauber_kernel(model, beta).rows)
    elif what == "tv":
        d = exactlab.tv_distance(
            exactlab.sca_distribution(model, q, beta),
            exactlab.gibbs_distribution(model, beta),
        )
        print(f"tv_sca_gibbs={d:.17g}")
    elif what == "dobrushin":
        d = exactlab.dobrushin(exactlab.sca_kernel(model, q, beta))
        print(f"dobrushin={d:.17g}")
    elif what == "mixing":
        kernel = exactlab.sca_kernel(model, q, beta)
        stationary = exactlab.sca_distribution(model, q, beta)
        t = exactlab.exact_mixing_time(kernel, stationary, args.eps)
        bound = dynamics.mixing_time_bound(model, q, beta, args.eps)
        print(f"t_mix={t} bound={'na' if bound is None else bound}")
    elif what == "joint":
        _print_matrix(exactlab.joint_measure(model, q, beta))
    elif what == "gs":
        dist = exactlab.uniform_gs(model)
        probs = dist.probabilities()
        for i in np.flatnonzero(probs > 0):
            spins = "".join(
                "+" if (i >> x) & 1 else "-" for x in range(model.n)
            )
            print(f"{spins} {probs[i]:.17g}")
    return 0


def _print_distribution(dist):
    for p in dist.probabilities():
        print(f"{p:.17g}")


def _print_matrix(rows):
    for row in rows:
        print(" ".join(f"{v:.17g}" for v in row))


def cmd_verify(args) -> int:
    model = _load_model(args)
    q = resolve_pinning(args.q, model)
    checks: list[tuple[str, bool, str]] = []

    if model.n <= pinning.MIN_DIAGONAL_LIMIT:
        report = pinning.verify_min_diagonal(model, q)
        checks.append((
            "min-diagonal", report.holds,
            f"min_diag={report.min_diagonal:.6g} min_offdiag={report.min_offdiagonal:.6g}",
        ))

    if model.n <= 8:
        ok = True
        for beta in (0.2, 1.0):
            kern = exactlab.sca_kernel(model, q, beta)
            pi = exactlab.sca_distribution(model, q, beta).probabilities()
            flux = pi[:, None] * kern.rows
            scale = np.maximum(np.abs(flux), np.abs(flux.T))
            ok &= bool(
                np.all(np.abs(flux - flux.T) <= 1e-10 * (scale + 1e-300))
            )
        checks.append(("detailed-balance", ok, "beta in {0.2, 1}"))

    r = dynamics.contraction_rate(model, q, args.beta)
    bound = dynamics.mixing_time_bound(model, q, args.beta, args.eps)
    checks.append((
        "contraction-rate", True,
        f"r={r:.6g} mixing_bound={'na' if bound is None else bound}",
    ))

    if model.n <= exactlab.KERNEL_LIMIT:
        try:
            rep = exactlab.order_preservation_check(model, q, args.beta, args.eps_order)
            checks.append((
                "order-preservation", rep.holds,
                f"violations={len(rep.violations)} range={rep.energy_range:.6g}",
            ))
        except ValueError as exc:
            checks.append(("order-preservation", True, f"skipped: {exc}"))

    all_ok = True
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok &= ok
    return 0 if all_ok else 1


def cmd_pin(args) -> int:
    model = _load_model(args)
    q = resolve_pinning(args.C, model, slack=args.slack)
    gamma, gamma_x = annealing.gamma_constant(model, q)
    if model.couplings:
        info = pinning.largest_eigenvalue(model)
        print(f"lambda={info.lambda_max:.17g} method={info.method}")
    else:
        print("lambda=0 method=trivial")
    print(f"gamma={gamma:.17g}")
    print("gamma_x " + " ".join(f"{v:.17g}" for v in gamma_x))
    print("q " + " ".join(f"{v:.17g}" for v in q.q))
    return 0


def cmd_bench(args) -> int:
    _thread_cap()
    directory = Path(args.model_dir)
    paths = sorted(directory.glob("*.ising")) + sorted(directory.glob("*.gset"))
    if not paths:
        print(f"no model files in {directory}", file=sys.stderr)
        return 1
    print(f"{'model':24s} {'n':>4s} {'mean_E':>12s} {'min_E':>12s} {'gs_E':>12s} {'success':>8s}")
    for path in paths:
        fmt = "gset" if path.suffix == ".gset" else "native"
        model = parse_model(path.read_text(), fmt=fmt)
        q = resolve_pinning(args.pinning, model)
        gamma, _ = annealing.gamma_constant(model, q)
        schedule = annealing.log_schedule(max(gamma, 1e-9), args.steps)
        seeds = [args.seed_base + i for i in range(args.seeds)]
        results = annealing.anneal_replicas(model, q, schedule, args.sampler, seeds)
        energies = np.array([r.best_energy for r in results])
        if model.n <= exactlab.DISTRIBUTION_LIMIT:
            gs_probs = exactlab.uniform_gs(model)
            gs_energy = exactlab._all_energies(model).min()
            success = np.mean(energies <= gs_energy + exactlab.GS_TIE_TOL)
            gs_str, succ_str = f"{gs_energy:12.5g}", f"{success:8.2%}"
        else:
            gs_str, succ_str = f"{'n/a':>12s}", f"{'n/a':>8s}"
        print(
            f"{path.name:24s} {model.n:4d} {energies.mean():12.5g} "
            f"{energies.min():12.5g} {gs_str} {succ_str}"
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanneal",
        description="Synchronous-update annealer for Ising ground-state search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_arg(p):
        p.add_argument("model", help="model file path")
        p.add_argument("--format", choices=["native", "gset"], default="native")

    p = sub.add_parser("solve", help="anneal and emit run records")
    add_model_arg(p)
    p.add_argument("--sampler", choices=["sca", "glauber", "binomial"], default="sca")
    p.add_argument("--schedule", choices=["log", "exp", "fixed"], default="log")
    p.add_argument("--steps", type=int, default=100_000, metavar="T")
    p.add_argument("--seeds", type=int, default=1, help="number of replicas")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--pinning", default="spectral:all")
    p.add_argument("--slack", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None, help="binomial epsilon")
    p.add_argument("--beta", type=float, default=1.0, help="fixed-schedule beta")
    p.add_argument("--gamma", type=float, default=None, help="log-schedule constant override")
    p.add_argument("--beta0", type=float, default=0.1)
    p.add_argument("--ratio", type=float, default=0.999)
    p.add_argument("--beta-max", type=float, default=50.0, dest="beta_max")
    p.add_argument("--record-every", type=int, default=0)
    p.add_argument("--out", default=None, help="append records to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="brute-force quantities")
    add_model_arg(p)
    p.add_argument("what", choices=[
        "gibbs", "sca-dist", "sca-kernel", "glauber-kernel",
        "tv", "dobrushin", "mixing", "joint", "gs",
    ])
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--q", default="spectral:all")
    p.add_argument("--eps", type=float, default=0.01, help="mixing-time target TV")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("verify", help="run structural checks; exit 1 on failure")
    add_model_arg(p)
    p.add_argument("--q", default="spectral:all")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.01, help="mixing-time target TV")
    p.add_argument("--eps-order", type=float, default=0.1, dest="eps_order")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pin", help="print lambda, Gamma and the pinning vector")
    add_model_arg(p)
    p.add_argument("--C", default="spectral:all")
    p.add_argument("--slack", type=float, default=1.0)
    p.set_defaults(func=cmd_pin)

    p = sub.add_parser("bench", help="batch solve a directory of models")
    p.add_argument("model_dir")
    p.add_argument("--sampler", choices=["sca", "glauber", "binomial"], default="sca")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--pinning", default="spectral:all")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
