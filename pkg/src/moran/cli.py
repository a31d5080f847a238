"""Command-line front end.

Exit codes: 0 ok, 1 a check ran and failed, 2 invalid input,
3 problem too large, 4 unsupported model/method combination.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .generators import (
    EXACT,
    ValidationError,
    build_moran_generator,
    build_parent_independent,
    build_reproduction_generator,
    load_mutation_json,
    to_exact,
)
from .measures import stationary_nu, stationary_of_generator
from .mixing import (
    MixingCurve,
    UnsupportedModelError,
    chi2,
    chi2_closed_form,
    cutoff_profile_chi2,
    cutoff_profile_tv_p0,
    kolmogorov_cycle_check,
    require_parent_independent,
    t_cutoff,
    transition_row,
    transition_row_spectral,
    tv,
    tv_from_corner_p0,
)
from .simplex import ArgumentError, StateSpace, cardinality
from .simulate import SimConfig, histogram, simulate_batch, worker_cap
from .spectra import (
    DEFAULT_CAP,
    CapacityError,
    brute_spectrum,
    mutation_eigenvalues,
    predicted_spectrum_moran,
    predicted_spectrum_parent_independent,
    predicted_spectrum_reproduction,
    spectra_distance,
    verify_slem_equality,
)

OK, FAILED, INVALID, CAPACITY, UNSUPPORTED = 0, 1, 2, 3, 4


class FlagError(ValueError):
    def __init__(self, flag: str, msg: str):
        super().__init__(f"{flag}: {msg}")


# -- parsing helpers -----------------------------------------------------------


def parse_list(text: str, flag: str) -> list[Fraction]:
    try:
        return [to_exact(s) for s in text.split(",") if s.strip()]
    except ValidationError as exc:
        raise FlagError(flag, str(exc)) from exc


def parse_scalar(text: str, flag: str) -> Fraction:
    try:
        return to_exact(text)
    except ValidationError as exc:
        raise FlagError(flag, str(exc)) from exc


def parse_start(text: str, K: int, N: int) -> tuple[int, ...]:
    """"Nek:k" for N e_k, or an explicit composition such as "3,1,0"."""
    text = text.strip()
    if text.startswith("Nek:"):
        try:
            k = int(text[4:])
        except ValueError:
            raise FlagError("--start", f"bad type index in {text!r}") from None
        if not 1 <= k <= K:
            raise FlagError("--start", f"type index {k} outside 1..{K}")
        return tuple(N if j == k - 1 else 0 for j in range(K))
    try:
        eta = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise FlagError("--start", f"expected Nek:k or a composition, got {text!r}") from None
    if len(eta) != K or min(eta) < 0 or sum(eta) != N:
        raise FlagError("--start", f"{eta} is not a composition of N={N} into K={K} parts")
    return eta


def parse_range(text: str, flag: str) -> np.ndarray:
    try:
        a, b, step = (float(s) for s in text.split(":"))
    except ValueError:
        raise FlagError(flag, f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise FlagError(flag, "need step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9))
    return np.array([a + i * step for i in range(n + 1)])


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_model(args) -> tuple[object, dict]:
    """Mutation matrix from --mutation FILE or --mu LIST, plus input digests."""
    if getattr(args, "mutation", None):
        path = Path(args.mutation)
        try:
            text = path.read_text()
        except OSError as exc:
            raise FlagError("--mutation", f"cannot read {path}: {exc.strerror}") from None
        try:
            Q = load_mutation_json(text)
        except ValidationError as exc:
            raise FlagError("--mutation", str(exc)) from None
        return Q, {str(path): _digest(path)}
    if getattr(args, "mu", None):
        mu = parse_list(args.mu, "--mu")
        try:
            return build_parent_independent(mu, EXACT), {}
        except (ArgumentError, ValidationError) as exc:
            raise FlagError("--mu", str(exc)) from None
    raise FlagError("--mutation", "give a mutation matrix file or --mu")


def _nonneg_p(args) -> Fraction:
    p = parse_scalar(args.p, "--p")
    if p < 0:
        raise FlagError("--p", f"must be nonnegative (got {p})")
    return p


def _check_N(N: int, least: int = 1) -> None:
    if N < least:
        raise FlagError("--N", f"must be at least {least} (got {N})")


# -- output --------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def emit(args, text: str, inputs: dict, results: dict | None = None, seed=None) -> None:
    """Write the main output and its manifest, or print when --out is absent."""
    if not args.out:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    manifest = {
        "command": args.command,
        "parameters": params,
        "inputs": inputs,
        "outputs": [str(out)],
        "seed": seed,
        "version": __version__,
        "results": results or {},
    }
    atomic_write(out, text)
    atomic_write(out.with_name(out.name + ".manifest.json"), json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")


# -- commands ------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    N = args.N
    model = args.model
    p = _nonneg_p(args)
    inputs: dict = {}
    results: dict = {}
    if model == "reproduction":
        K = args.K
        if K is None and (args.mutation or args.mu):
            Q, inputs = load_model(args)
            K = Q.K
        if K is None or K < 2:
            raise FlagError("--K", "reproduction needs --K >= 2")
        _check_N(N, 2)
        cat = predicted_spectrum_reproduction(K, N)
        build = lambda: build_reproduction_generator(K, N)  # noqa: E731
    else:
        _check_N(N)
        Q, inputs = load_model(args)
        K = Q.K
        if model == "mutation":
            p = Fraction(0)
        if model == "parent-independent":
            if not Q.is_parent_independent:
                raise UnsupportedModelError("--model parent-independent needs --mu (or a matrix of that form)")
            cat = predicted_spectrum_parent_independent(Q.mu, N, p)
        else:
            cat = predicted_spectrum_moran(mutation_eigenvalues(Q, args.dps), K, N, p)
        build = lambda: build_moran_generator(Q, N, p)  # noqa: E731
    if args.verify == "brute":
        dim = cardinality(K, N)
        if dim > args.cap:
            raise CapacityError(f"--N: state space has {dim} states, above --cap {args.cap}")
        d = spectra_distance(cat, brute_spectrum(build(), cap=args.cap, dps=args.dps))
        results["bottleneck_distance"] = d
        print(f"bottleneck_distance {d:.3e}", file=sys.stderr if not args.out else sys.stdout)
    emit(args, json.dumps(cat.to_json(), indent=1) + "\n", inputs, results)
    return OK


def _curve_rows(args, Q, N, p, start, times, metric, method) -> list[float]:
    pi_based = method in ("spectral", "closed-form")
    if pi_based and not Q.is_parent_independent:
        raise UnsupportedModelError(f"--method {method} needs parent-independent mutation (use --mu)")
    k = start.index(N) + 1 if N in start else None
    if method == "closed-form":
        if k is None:
            raise UnsupportedModelError("--method closed-form needs a start of the form Nek:k")
        if metric == "chi2":
            return [chi2_closed_form(t, k, N, Q.mu, p) for t in times]
        if p != 0:
            raise UnsupportedModelError("closed-form total variation is only available for p = 0")
        return [tv_from_corner_p0(t, k, N, Q.mu) for t in times]
    if cardinality(Q.K, N) > args.cap:
        raise CapacityError(f"--N: state space has {cardinality(Q.K, N)} states, above --cap {args.cap}")
    G = build_moran_generator(Q.as_field("double"), N, p)
    if Q.is_parent_independent:
        ref = stationary_nu(N, Q.mu, p)
    else:
        ref = stationary_of_generator(build_moran_generator(Q, N, p))
    dist = tv if metric == "tv" else (lambda a, b: chi2(a, b))
    out = []
    for t in times:
        row = transition_row_spectral(G, t, start) if method == "spectral" else transition_row(G, t, start)
        out.append(float(dist(row, ref)))
    return out


def cmd_mix(args) -> int:
    Q, inputs = load_model(args)
    N = args.N
    _check_N(N)
    p = _nonneg_p(args)
    start = parse_start(args.start, Q.K, N)
    times = parse_range(args.times, "--times")
    results: dict = {}
    vals = _curve_rows(args, Q, N, p, start, times, args.metric, args.method)
    if args.cross_check:
        G = build_moran_generator(Q.as_field("double"), N, p)
        require_parent_independent(G)
        delta = 0.0
        for t in times:
            a = transition_row(G, t, start).as_array()
            b = transition_row_spectral(G, t, start).as_array()
            delta = max(delta, float(np.abs(a - b).max()))
        results["max_abs_delta_uniformization_vs_spectral"] = delta
        print(f"max_abs_delta {delta:.3e}", file=sys.stderr if not args.out else sys.stdout)
    prov = {"closed-form": "closed_form"}.get(args.method, args.method)
    curve = MixingCurve(times, vals, args.metric, prov)
    emit(args, csv_text(["t", "value", "metric", "provenance"], curve.rows()), inputs, results)
    return OK


def cmd_cutoff(args) -> int:
    mu = parse_list(args.mu, "--mu")
    if len(mu) < 2 or any(m <= 0 for m in mu):
        raise FlagError("--mu", "need at least two positive rates")
    p = _nonneg_p(args)
    if not 1 <= args.k <= len(mu):
        raise FlagError("--k", f"type index outside 1..{len(mu)}")
    try:
        Ns = [int(s) for s in args.N_list.split(",") if s.strip()]
    except ValueError:
        raise FlagError("--N-list", f"expected integers, got {args.N_list!r}") from None
    if not Ns or min(Ns) < 1:
        raise FlagError("--N-list", "need positive population sizes")
    cs = parse_range(args.c_range, "--c-range")
    if args.metric == "tv" and p != 0:
        raise UnsupportedModelError("the total-variation profile is only available for p = 0")
    rows = []
    for N in Ns:
        for c in cs:
            t = t_cutoff(N, c, mu)
            if t < 0:
                raise FlagError("--c-range", f"c={c} gives a negative time for N={N}")
            if args.metric == "chi2":
                obs, lim = chi2_closed_form(t, args.k, N, mu, p), cutoff_profile_chi2(c, args.k, mu, p)
            else:
                obs, lim = tv_from_corner_p0(t, args.k, N, mu), cutoff_profile_tv_p0(c, args.k, mu)
            rows.append((float(c), N, float(obs), float(lim)))
    emit(args, csv_text(["c", "N", "observed", "limit_profile"], rows), {})
    return OK


def cmd_simulate(args) -> int:
    Q, inputs = load_model(args)
    N = args.N
    _check_N(N)
    p = _nonneg_p(args)
    start = parse_start(args.start, Q.K, N)
    if args.replicas < 1:
        raise FlagError("--replicas", "need at least one replica")
    if args.horizon < 0:
        raise FlagError("--horizon", "must be nonnegative")
    cfg = SimConfig.from_matrix(Q, N, p, start, args.horizon, args.replicas, args.seed)
    samples = simulate_batch(cfg, workers=worker_cap())
    space = StateSpace(Q.K, N)
    if len(space) <= 10**6:
        counts = histogram(samples, space)
        rows = [(*eta, int(c)) for eta, c in zip(space.states, counts) if c]
    else:
        uniq, counts = np.unique(samples, axis=0, return_counts=True)
        rows = [(*map(int, r), int(c)) for r, c in zip(uniq, counts)]
    header = [f"x{k + 1}" for k in range(Q.K)] + ["count"]
    emit(args, csv_text(header, rows), inputs, seed=args.seed)
    return OK


def cmd_check(args) -> int:
    Q, inputs = load_model(args)
    N = args.N
    _check_N(N)
    p = _nonneg_p(args)
    if cardinality(Q.K, N) > args.cap:
        raise CapacityError(f"--N: state space has {cardinality(Q.K, N)} states, above --cap {args.cap}")
    G = build_moran_generator(Q, N, p)
    results: dict = {"what": args.what}
    if args.what == "reversibility":
        ok, witness = kolmogorov_cycle_check(G, 4)
        results["witness"] = witness
        lines = ["PASS reversibility"] if ok else [
            f"FAIL reversibility: {len(witness)}-cycle " + " -> ".join(map(str, witness))
        ]
    elif args.what == "stationarity":
        pi = stationary_of_generator(G)
        resid = max(abs(v) for v in G.left(pi.probs))
        ok = resid == 0
        lines = [f"{'PASS' if ok else 'FAIL'} stationarity: max |pi G| = {float(resid):.3e}"]
        if Q.is_parent_independent:
            nu = stationary_nu(N, Q.mu, p)
            diff = max(abs(a - b) for a, b in zip(pi.probs, nu.probs))
            ok = ok and diff == 0
            lines.append(f"{'PASS' if diff == 0 else 'FAIL'} closed-form stationary law: max diff {float(diff):.3e}")
        results["residual"] = float(resid)
    else:
        ok = verify_slem_equality(Q, N, p)
        lines = [f"{'PASS' if ok else 'FAIL'} spectral gap of Q equals that of the population generator"]
    results["ok"] = ok
    emit(args, "\n".join(lines) + "\n", inputs, results)
    if args.out:
        print("\n".join(lines))
    return OK if ok else FAILED


# -- argument parser -----------------------------------------------------------


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mutation", metavar="FILE", help='JSON {"K": int, "rates": [[...]]}')
    p.add_argument("--mu", metavar="LIST", help="parent-independent rates, e.g. 1/3,1/3,1/3")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", default="0", help="interaction strength (default 0)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest state space to build")
    p.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moran", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="predicted eigenvalue catalog")
    _model_flags(s)
    s.add_argument("--K", type=int, help="number of types (reproduction model)")
    s.add_argument("--model", choices=["moran", "mutation", "reproduction", "parent-independent"], default="moran")
    s.add_argument("--verify", choices=["brute"])
    s.add_argument("--dps", type=int, help="decimal digits for the dense solver (default: double, adaptive)")
    s.set_defaults(func=cmd_spectrum)

    m = sub.add_parser("mix", help="distance to equilibrium over time")
    _model_flags(m)
    m.add_argument("--start", default="Nek:1")
    m.add_argument("--times", required=True, metavar="a:b:step")
    m.add_argument("--metric", choices=["tv", "chi2"], default="tv")
    m.add_argument("--method", choices=["uniformization", "spectral", "closed-form"], default="uniformization")
    m.add_argument("--cross-check", action="store_true", help="report max |uniformization - spectral|")
    m.set_defaults(func=cmd_mix)

    c = sub.add_parser("cutoff", help="finite-N observed values against the cutoff profile")
    c.add_argument("--mu", required=True, metavar="LIST")
    c.add_argument("--p", default="0")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--c-range", required=True, metavar="a:b:step")
    c.add_argument("--N-list", required=True, metavar="LIST")
    c.add_argument("--metric", choices=["chi2", "tv"], default="chi2")
    c.add_argument("--out", metavar="FILE")
    c.set_defaults(func=cmd_cutoff)

    r = sub.add_parser("simulate", help="Monte Carlo end-state histogram")
    _model_flags(r)
    r.add_argument("--start", default="Nek:1")
    r.add_argument("--horizon", type=float, required=True)
    r.add_argument("--replicas", type=int, default=10000)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_simulate)

    k = sub.add_parser("check", help="reversibility, stationarity or spectral-gap checks")
    _model_flags(k)
    k.add_argument("--what", choices=["reversibility", "stationarity", "slem"], required=True)
    k.set_defaults(func=cmd_check)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INVALID if exc.code not in (0, None) else OK
    try:
        return args.func(args)
    except (FlagError, ValidationError, ArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CAPACITY
    except UnsupportedModelError as exc:
        print(f"error: unsupported: {exc}", file=sys.stderr)
        return UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
