"""Command-line experiment runner.

Each subcommand reads a YAML config (or a built-in scenario), runs one kind
of experiment, and writes CSV artifacts plus ``manifest.json`` to the
output directory.

Exit codes: 0 success, 1 configuration error, 2 validation failure,
3 numerical guard tripped.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, scenarios
from ._kernels import BACKEND
from .angles import Angle
from .config import ConfigError
from .core import FunctionVector, SpatialGrid, SpectralFourier, constant, format_csv, read_csv, sawtooth_coefficients
from .errors import NumericalGuardError
from .operators import (
    DenseOperator,
    GridPermutation,
    Operator,
    check_fix_modulus_trivial,
    doubling,
    identity,
    multiplier_permutation,
    random_doubly_stochastic,
    shift_permutation,
    validate_dunford_schwartz,
    zero,
)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_GUARD = 0, 1, 2, 3
COMMANDS = ("average", "decompose", "volterra-cert", "predict", "semigroup", "validate")


class ValidationFailure(Exception):
    """A run completed but one of its checks failed."""


# -- building objects from a config ------------------------------------------------

def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def build_basis(cfg):
    b = cfg.get("basis")
    if b is None:
        raise ConfigError("key 'basis' is required for this command")
    return SpectralFourier(b["M"]) if b["kind"] == "spectral" else SpatialGrid(b["G"])


def _angle(spec) -> Angle:
    alpha = spec["alpha"]
    if isinstance(alpha, str) and "/" in alpha:
        try:
            return Angle(exact=Fraction(alpha) % 1)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad rational angle {alpha!r}") from None
    text = alpha if isinstance(alpha, str) else repr(float(alpha))
    try:
        return Angle.from_decimal(text, spec.get("precision"), spec.get("symbol"))
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"bad angle {alpha!r}: {exc}") from None


def _need_spatial(basis, name, kind):
    if not isinstance(basis, SpatialGrid):
        raise ConfigError(f"operator '{name}': kind {kind!r} needs a spatial basis")


def _need_spectral(basis, name, kind):
    if not isinstance(basis, SpectralFourier):
        raise ConfigError(f"operator '{name}': kind {kind!r} needs a spectral basis")


def build_operator(name: str, spec: dict, basis, streams, cfg_dir: Path) -> Operator:
    from .operators import DiagonalSpectral, mode_projector

    kind = spec["kind"]
    if kind == "rotation":
        _need_spectral(basis, name, kind)
        return DiagonalSpectral(basis, angle=_angle(spec))
    if kind == "diagonal":
        _need_spectral(basis, name, kind)
        mu = [_complex(v) for v in spec["mu"]]
        if len(mu) != basis.dim:
            raise ConfigError(f"operator '{name}': mu needs {basis.dim} entries, got {len(mu)}")
        try:
            return DiagonalSpectral(basis, mu)
        except ValueError as exc:
            raise ConfigError(f"operator '{name}': {exc}") from None
    if kind == "mode_projector":
        _need_spectral(basis, name, kind)
        bad = [m for m in spec["modes"] if abs(m) > basis.M]
        if bad:
            raise ConfigError(f"operator '{name}': modes {bad} outside -{basis.M}..{basis.M}")
        return mode_projector(spec["modes"], basis.M)
    if kind == "identity":
        return identity(basis)
    if kind == "zero":
        return zero(basis)
    if kind == "doubling":
        _need_spatial(basis, name, kind)
        if basis.G % 2 == 0:
            raise ConfigError(f"operator '{name}': the doubling map is a permutation only for odd G")
        return doubling(basis.G)
    if kind == "permutation":
        _need_spatial(basis, name, kind)
        given = [k for k in ("multiplier", "shift", "perm") if k in spec]
        if len(given) != 1:
            raise ConfigError(f"operator '{name}': give exactly one of multiplier, shift, perm")
        phase = np.exp(2j * np.pi * spec.get("phase_turn", 0.0)) if spec.get("phase_turn") else 1.0
        try:
            if "multiplier" in spec:
                P = multiplier_permutation(spec["multiplier"], basis.G)
            elif "shift" in spec:
                P = shift_permutation(spec["shift"], basis.G)
            else:
                P = GridPermutation(spec["perm"])
        except ValueError as exc:
            raise ConfigError(f"operator '{name}': {exc}") from None
        if P.dim != basis.G:
            raise ConfigError(f"operator '{name}': permutation has {P.dim} points, basis has {basis.G}")
        return P if phase == 1.0 else P.scale(phase)
    if kind == "dense":
        path = cfg_dir / spec["csv"]
        try:
            mat = np.loadtxt(path, delimiter=",", ndmin=2).astype(np.complex128)
            if "csv_imag" in spec:
                mat = mat + 1j * np.loadtxt(cfg_dir / spec["csv_imag"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"operator '{name}': cannot read matrix: {exc}") from None
        if mat.shape != (basis.dim, basis.dim):
            raise ConfigError(f"operator '{name}': matrix shape {mat.shape} does not match dimension {basis.dim}")
        return DenseOperator(basis, mat)
    if kind == "doubly_stochastic":
        _need_spatial(basis, name, kind)
        rng = streams(f"operator:{name}")
        return DenseOperator(basis, random_doubly_stochastic(basis.G, rng, spec.get("sweeps", 200)))
    raise ConfigError(f"operator '{name}': unknown kind {kind!r}")


@dataclass
class Context:
    cfg: dict
    cfg_dir: Path
    out: Path
    threads: int
    checkpoints: list | None
    streams: object
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    _ops: dict = field(default_factory=dict)

    @property
    def basis(self):
        return build_basis(self.cfg)

    def operator(self, name: str) -> Operator:
        if name not in self._ops:
            specs = self.cfg.get("operators", {})
            if name not in specs:
                raise ConfigError(f"unknown operator '{name}' (defined: {', '.join(sorted(specs)) or 'none'})")
            self._ops[name] = build_operator(name, specs[name], self.basis, self.streams, self.cfg_dir)
        return self._ops[name]

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        path.write_text(text, encoding="utf-8", newline="")
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_chain(ctx: Context):
    from .entangle import EntangledChain

    ch = ctx.cfg.get("chain")
    if ch is None:
        raise ConfigError("key 'chain' is required for this command")
    T = [ctx.operator(n) for n in ch["T"]]
    A = [ctx.operator(n) for n in ch.get("A", [])]
    if len(T) != len(A) + 1:
        raise ConfigError(f"chain needs one more T than A (got {len(T)} and {len(A)})")
    return EntangledChain(T, A)


def build_function(ctx: Context) -> FunctionVector:
    spec = ctx.cfg.get("f")
    if spec is None:
        raise ConfigError("key 'f' is required for this command")
    basis = ctx.basis
    kind = spec["kind"]
    if kind == "mode":
        m = spec["m"]
        if isinstance(basis, SpectralFourier):
            if abs(m) > basis.M:
                raise ConfigError(f"f: mode {m} outside -{basis.M}..{basis.M}")
            c = np.zeros(basis.dim, dtype=np.complex128)
            c[basis.index(m)] = 1.0
            return FunctionVector(basis, c)
        return FunctionVector(basis, np.exp(2j * np.pi * m * basis.points))
    if kind == "sawtooth":
        if isinstance(basis, SpectralFourier):
            return sawtooth_coefficients(basis.M)
        return FunctionVector(basis, basis.points.astype(np.complex128))
    if kind == "constant":
        return constant(basis, _complex(spec.get("value", 1.0)))
    if kind == "zero":
        return FunctionVector(basis, np.zeros(basis.dim, dtype=np.complex128))
    if kind in ("random", "stable_projected"):
        rng = ctx.streams("f")
        x = rng.standard_normal(basis.dim).astype(np.complex128)
        if not spec.get("real", False):
            x = x + 1j * rng.standard_normal(basis.dim)
        if kind == "random":
            if spec.get("mean_zero"):
                if isinstance(basis, SpectralFourier):
                    x[basis.M] = 0
                else:
                    x = x - x.mean()
            return FunctionVector(basis, x)
        from .jdlg import decompose, project_stable

        of = spec.get("of") or ctx.cfg.get("chain", {}).get("T", [None])[0]
        if of is None:
            raise ConfigError("f: stable_projected needs 'of' or a chain")
        return project_stable(decompose(ctx.operator(of)), FunctionVector(basis, x))
    if kind == "csv":
        try:
            f = read_csv(ctx.cfg_dir / spec["path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"f: cannot read {spec['path']}: {exc}") from None
        if f.basis != basis:
            raise ConfigError(f"f: file basis {f.basis} differs from config basis {basis}")
        return f
    raise ConfigError(f"f: unknown kind {kind!r}")


def _checkpoints(ctx: Context, section: dict, N: int):
    cp = ctx.checkpoints if ctx.checkpoints is not None else section.get("checkpoints")
    if cp is None:
        return None
    cp = [int(c) for c in cp]
    if min(cp) < 1 or max(cp) > N:
        raise ConfigError(f"checkpoints must lie in 1..{N}")
    return cp


# -- commands ----------------------------------------------------------------------

def cmd_average(ctx: Context) -> None:
    from .entangle import bohr_weight, cesaro_abs_average, cesaro_average, weighted_average

    sec = ctx.cfg.get("average")
    if sec is None:
        raise ConfigError("key 'average' is required for this command")
    N = sec["N"]
    chain, f = build_chain(ctx), build_function(ctx)
    cp = _checkpoints(ctx, sec, N)
    if "weight" in sec:
        if chain.a != 0:
            raise ConfigError("average.weight needs a chain with a single operator")
        w = sec["weight"]
        if len(w["gamma_turns"]) != len(w["qs"]):
            raise ConfigError("average.weight: gamma_turns and qs differ in length")
        gam = np.exp(2j * np.pi * np.array(w["gamma_turns"], dtype=float))
        weight = bohr_weight(gam, [_complex(q) for q in w["qs"]], N)
        series = weighted_average(chain.T[0], f, weight, N, cp, threads=ctx.threads)
    elif sec.get("abs"):
        series = cesaro_abs_average(chain, f, N, cp, G_eval=sec.get("G_eval"), threads=ctx.threads)
    else:
        series = cesaro_average(chain, f, N, cp, threads=ctx.threads)
    ctx.write("average.csv", series.full_csv())
    ctx.write("average_summary.csv", series.summary_csv())
    sup = series.sup_values()
    ctx.summary.update(mode=series.mode, final_sup=float(sup[-1]), first_sup=float(sup[0]))


def cmd_decompose(ctx: Context) -> None:
    from .jdlg import decompose
    from .limit import point_spectrum

    sec = ctx.cfg.get("decompose", {})
    names = sec.get("operators") or list(dict.fromkeys(ctx.cfg.get("chain", {}).get("T", [])))
    if not names:
        raise ConfigError("nothing to decompose: set decompose.operators or chain.T")
    kw = {k: sec[k] for k in ("tol_unimodular", "cond_max") if k in sec}
    for name in names:
        D = decompose(ctx.operator(name), **kw)
        ctx.write(f"decompose_{name}.csv", D.to_csv())
        sp = point_spectrum(D.operator, D)
        ctx.summary[name] = {"reversible_dim": D.reversible_dim, "stable_dim": D.stable_dim,
                             "distinct_eigenvalues": len(sp)}


def cmd_validate(ctx: Context) -> None:
    from .entangle import _structurally_ds
    from .rng import substream

    sec = ctx.cfg.get("validate", {})
    names = sec.get("operators") or sorted(ctx.cfg.get("operators", {}))
    if not names:
        raise ConfigError("nothing to validate: set validate.operators or define operators")
    rows = ["operator,trials,worst_l1_ratio,worst_linf_ratio,realization,numeric_pass,structural,accepted,fix_modulus_trivial"]
    failed = []
    for name in names:
        T = ctx.operator(name)
        # test vectors are internal, so an unseeded config falls back to seed 0
        kw = {"trials": sec.get("trials", 64), "rng": substream(ctx.cfg.get("seed", 0), f"validate:{name}")}
        if "tol" in sec:
            kw["tol"] = sec["tol"]
        rep = validate_dunford_schwartz(T, **kw)
        structural = _structurally_ds(T)
        accepted = rep.passed or structural
        try:
            fix = str(check_fix_modulus_trivial(T)).lower()
        except NotImplementedError:
            fix = "unsupported"
        rows.append(",".join([name, str(rep.trials), repr(rep.worst_l1_ratio), repr(rep.worst_linf_ratio),
                              rep.realization, str(rep.passed).lower(), str(structural).lower(),
                              str(accepted).lower(), fix]))
        if not accepted:
            failed.append(name)
    ctx.write("ds_report.csv", "\n".join(rows) + "\n")
    ctx.summary["failed"] = failed
    if failed:
        raise ValidationFailure(f"Dunford-Schwartz check failed for: {', '.join(failed)}")


def cmd_predict(ctx: Context) -> None:
    from .entangle import bohr_weight, cesaro_average, weighted_average
    from .limit import compare_limit, point_spectrum, predict_limit, predict_weighted_limit

    sec = ctx.cfg.get("predict", {})
    avg = ctx.cfg.get("average")
    if avg is None:
        raise ConfigError("key 'average' is required for this command")
    chain, f = build_chain(ctx), build_function(ctx)
    N = avg["N"]
    cp = _checkpoints(ctx, avg, N)
    tol_match = sec.get("tol_match", 1e-9)
    spectra = [point_spectrum(T, tol_sep=sec.get("tol_sep", 1e-6)) for T in chain.T]
    alternative = None
    if "weight" in avg:
        w = avg["weight"]
        gam = np.exp(2j * np.pi * np.array(w["gamma_turns"], dtype=float))
        qs = [_complex(q) for q in w["qs"]]
        pred = predict_weighted_limit(spectra[0], f, gam, qs, tol_match)
        series = weighted_average(chain.T[0], f, bohr_weight(gam, qs, N), N, cp, threads=ctx.threads)
        form = "weighted"
    else:
        form = sec.get("form", "full")
        det = predict_limit(chain, f, spectra, form=form, tol_match=tol_match, details=True)
        pred = det.vector
        ctx.write("resonances.csv", det.resonances.to_csv(det.contributions))
        if chain.a >= 1:
            other = "printed" if form == "full" else "full"
            alternative = predict_limit(chain, f, spectra, form=other, tol_match=tol_match)
        series = cesaro_average(chain, f, N, cp, threads=ctx.threads)
    report = compare_limit(pred, series, alternative)
    ctx.write("prediction.csv", format_csv(pred))
    ctx.write("comparison.csv", report.to_csv())
    ctx.summary.update(form=form, final_sup_err=report.final_sup, decay_exponent=report.decay_exponent)
    if alternative is not None:
        ctx.summary["alternative_form_final_l2"] = report.alternative_l2
    limit = sec.get("max_sup_err")
    if limit is not None and not report.final_sup <= limit:
        raise ValidationFailure(f"final sup error {report.final_sup:.3g} exceeds {limit:g}")


def cmd_volterra(ctx: Context, epsilon=None) -> None:
    from .volterra import build_volterra, certificates_csv, twisted_compactness_certificate, verify_certificate

    sec = ctx.cfg.get("volterra", {})
    eps = [epsilon] if epsilon is not None else sec.get("epsilon", [0.1])
    kw = {"M_cap": sec["M_cap"]} if "M_cap" in sec else {}
    certs = [twisted_compactness_certificate(e, **kw) for e in eps]
    ctx.write("certificate.csv", certificates_csv(certs))
    trials = sec.get("trials", 500)
    rows = ["epsilon,M_min,trials,violations,worst_sup"]
    bad = []
    for c in certs:
        parts = build_volterra(max(c.M_min, 1), sec.get("k", 1))
        chk = verify_certificate(c, parts, trials=trials, rng=ctx.streams(f"volterra:{c.epsilon!r}"),
                                 n_max=sec.get("n_max", 1000))
        rows.append(f"{c.epsilon!r},{c.M_min},{chk.trials},{chk.violations},{chk.worst_sup!r}")
        if not chk.passed:
            bad.append(c.epsilon)
    ctx.write("verification.csv", "\n".join(rows) + "\n")
    ctx.summary["M_min"] = {repr(c.epsilon): c.M_min for c in certs}
    if bad:
        raise ValidationFailure(f"certificate violated for epsilon in {bad}")


def _generator(ctx: Context, spec: dict, basis):
    from . import semigroup as sg

    kind = spec["kind"]
    if kind == "zero":
        return sg.zero_generator(basis)
    if kind == "rotation_flow":
        if not isinstance(basis, SpectralFourier):
            raise ConfigError("rotation_flow needs a spectral basis")
        return sg.rotation_flow(spec["alpha"], basis.M)
    if kind == "diagonal":
        rates = [_complex(v) for v in spec["rates"]]
        if len(rates) != basis.dim:
            raise ConfigError(f"diagonal generator needs {basis.dim} rates")
        return sg.GeneratorSpec(basis, "diagonal", np.array(rates))
    P = ctx.operator(spec["permutation"])
    if not isinstance(P, GridPermutation):
        raise ConfigError("permutation_laplacian needs a permutation operator")
    return sg.permutation_laplacian(P, spec.get("rate", 1.0))


def cmd_semigroup(ctx: Context) -> None:
    from .semigroup import SemigroupChain, cesaro_integral, cesaro_integral_abs

    sec = ctx.cfg.get("semigroup")
    if sec is None:
        raise ConfigError("key 'semigroup' is required for this command")
    basis = ctx.basis
    gens = [_generator(ctx, g, basis) for g in sec["generators"]]
    A = [ctx.operator(n) for n in sec.get("A", [])]
    if len(gens) != len(A) + 1:
        raise ConfigError("semigroup needs one more generator than A operators")
    try:
        chain = SemigroupChain(gens, A, sec["horizon"], sec.get("h"))
    except ValueError as exc:
        raise ConfigError(f"semigroup: {exc}") from None
    f = build_function(ctx)
    cp = ctx.checkpoints if ctx.checkpoints is not None else sec.get("checkpoints")
    try:
        if sec.get("abs"):
            series = cesaro_integral_abs(chain, f, cp, threads=ctx.threads)
        else:
            series = cesaro_integral(chain, f, cp, threads=ctx.threads)
    except ValueError as exc:
        if isinstance(exc, NumericalGuardError):
            raise
        raise ConfigError(f"semigroup: {exc}") from None
    ctx.write("integral.csv", series.full_csv())
    ctx.write("integral_summary.csv", series.summary_csv())
    ctx.summary.update(steps=chain.steps, h=chain.h, final_sup=float(series.sup_values()[-1]))


# -- driver ------------------------------------------------------------------------

def _versions() -> dict:
    import scipy

    return {"ergolab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "kernel_backend": BACKEND}


def _parse_list(text: str) -> list:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty checkpoint list")
    return vals


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


_HELP = {
    "average": "entangled Cesaro average (plain, absolute or weighted) at checkpoints",
    "decompose": "reversible/stable split and unimodular eigenvalues of operators",
    "volterra-cert": "Volterra compactness certificates and their randomized verification",
    "predict": "predicted limit, resonant tuples and distance to the empirical average",
    "semigroup": "trapezoid Cesaro integral of a semigroup chain",
    "validate": "Dunford-Schwartz and Fix|T| checks of the configured operators",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergolab", description="Entangled ergodic averages: experiment runner.")
    p.add_argument("--version", action="version", version=f"ergolab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=_HELP[name])
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--scenario", help="built-in scenario name (a --config is merged over it)")
        sp.add_argument("--out", type=Path, help="output directory (env ERGOLAB_OUT)")
        sp.add_argument("--seed", type=_u64, help="root seed, overrides the config")
        sp.add_argument("--threads", type=int, help="worker threads (env ERGOLAB_THREADS)")
        sp.add_argument("--checkpoints", type=_parse_list, help="comma-separated checkpoints")
        if name == "volterra-cert":
            sp.add_argument("--epsilon", type=float, help="single tolerance, overrides the config")
    sub.add_parser("scenarios", help="list built-in scenarios")
    return p


def _resolve(args) -> tuple[dict, Path]:
    cfg: dict = {}
    cfg_dir = Path.cwd()
    if args.scenario:
        cfg = scenarios.get(args.scenario)
    if args.config:
        user = cfgmod.load(args.config)
        cfg = cfgmod.merge(cfg, user) if cfg else user
        cfg_dir = args.config.resolve().parent
    if not cfg:
        if args.command != "volterra-cert":
            raise ConfigError("give --config or --scenario")
        cfg = {"schema_version": cfgmod.SCHEMA_VERSION}
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfgmod.validate(cfg)
    return cfg, cfg_dir


def run(argv=None) -> int:
    from .rng import MissingSeed, Streams

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scenarios":
        for n in scenarios.names():
            print(f"{n:22s} {scenarios.describe(n)}")
        return EXIT_OK
    t0 = time.perf_counter()
    try:
        cfg, cfg_dir = _resolve(args)
        out = args.out or (Path(os.environ["ERGOLAB_OUT"]) if os.environ.get("ERGOLAB_OUT") else None) \
            or Path(cfg.get("out", "ergolab-out"))
        env_threads = os.environ.get("ERGOLAB_THREADS")
        try:
            threads = args.threads or (int(env_threads) if env_threads else None) or cfg.get("threads", 1)
        except ValueError:
            raise ConfigError(f"ERGOLAB_THREADS must be an integer, got {env_threads!r}") from None
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        cp = args.checkpoints
        if cp is not None and args.command != "semigroup":
            if any(c != int(c) for c in cp):
                raise ConfigError("checkpoints must be integers for this command")
            cp = [int(c) for c in cp]
        out.mkdir(parents=True, exist_ok=True)
        ctx = Context(cfg, cfg_dir, out, threads, cp, Streams(cfg.get("seed")))
    except ConfigError as exc:
        print(f"ergolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status, message = EXIT_OK, "ok"
    try:
        if args.command == "average":
            cmd_average(ctx)
        elif args.command == "decompose":
            cmd_decompose(ctx)
        elif args.command == "validate":
            cmd_validate(ctx)
        elif args.command == "predict":
            cmd_predict(ctx)
        elif args.command == "volterra-cert":
            cmd_volterra(ctx, args.epsilon)
        else:
            cmd_semigroup(ctx)
    except (ConfigError, MissingSeed) as exc:
        status, message = EXIT_CONFIG, f"config error: {exc}"
    except ValueError as exc:
        if isinstance(exc, NumericalGuardError):
            status, message = EXIT_GUARD, f"numerical guard: {type(exc).__name__}: {exc}"
        else:
            status, message = EXIT_VALIDATION, f"validation failure: {type(exc).__name__}: {exc}"
    except ValidationFailure as exc:
        status, message = EXIT_VALIDATION, f"validation failure: {exc}"
    except NumericalGuardError as exc:
        status, message = EXIT_GUARD, f"numerical guard: {type(exc).__name__}: {exc}"

    manifest = {
        "command": args.command,
        "scenario": cfg.get("name"),
        "config_sha256": cfgmod.config_hash(cfg),
        "config": cfg,
        "seed": cfg.get("seed"),
        "threads": ctx.threads,
        "versions": _versions(),
        "exit_code": status,
        "message": message,
        "summary": ctx.summary,
        "files": dict(sorted(ctx.files.items())),
        "wall_time_s": round(time.perf_counter() - t0, 6),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                                       encoding="utf-8")
    stream = sys.stdout if status == EXIT_OK else sys.stderr
    print(f"ergolab {args.command}: {message} -> {out}", file=stream)
    return status


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
