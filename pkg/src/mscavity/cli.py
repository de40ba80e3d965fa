"""Command-line front end.

Subcommands: simulate (diagnostics CSV + snapshots), verify (named check
suites with pass/fail lines), spectrum (operator-level checks), snapshot
(binary state inspection and round trip), plots (gnuplot script emission).

Exit codes: 0 all checks pass, 1 a check failed its tolerance, 2 config or
format error, 3 the integration diverged.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import struct
import sys
from types import SimpleNamespace

import numpy as np
import yaml

from . import estimates
from .drive import PumpSpec, PumpTerm, phi_preset
from .dynamics import (
    DiagnosticsRow,
    Params,
    SimulationDiverged,
    State,
    check_stability,
    grad_check,
    make_initial,
    run,
    state_norm_sq,
)
from .matter import MAXWELL_PARITIES, PotentialSet
from .spectral import (
    BasisFamily,
    BoxDomain,
    SpectralScalar,
    SpectralVector,
    h1_norm,
    l2_norm,
)
from .util import fmt

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

SNAPSHOT_MAGIC = b"MSW1"
SNAPSHOT_VERSION = 1


class ConfigError(ValueError):
    """Bad configuration: unknown key, missing section, or a violated
    precondition (reported with the offending key)."""


class SnapshotFormatError(ValueError):
    """Snapshot file unreadable: wrong magic, version, size, or dims."""


# -- configuration --------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RunConfig:
    domain: BoxDomain
    params: Params
    potentials: PotentialSet
    pump: PumpSpec | None
    initial: dict
    outdir: str
    record_every: int
    snapshot_every: float


def _require_keys(section: str, data: dict, known: tuple) -> None:
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(
            f"unknown key(s) in '{section}': {', '.join(unknown)}; "
            f"expected a subset of {{{', '.join(known)}}}"
        )


def _triple(section: str, key: str, value, kind=float):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"'{section}.{key}' must be a list of 3 values")
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"'{section}.{key}': {err}") from None


_INITIAL_DEFAULTS = {
    "kind": "ground",
    "q": 1.0,
    "a_norm": 0.0,
    "pi_norm": 0.0,
    "scale": 1.0,
    "band_frac": 3,
}


def parse_config(text: str) -> RunConfig:
    """Validated run configuration from YAML text.

    Every module-level precondition is checked here so a bad value fails at
    load time with the offending key, not mid-run.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"config is not valid YAML: {err}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping of sections")
    _require_keys(
        "config", data, ("domain", "params", "potential", "pump", "initial", "output")
    )

    dom_block = data.get("domain")
    if not isinstance(dom_block, dict):
        raise ConfigError("missing required section 'domain' (lengths, modes)")
    _require_keys("domain", dom_block, ("lengths", "modes"))
    if "lengths" not in dom_block or "modes" not in dom_block:
        raise ConfigError("'domain' needs both 'lengths' and 'modes'")
    lengths = _triple("domain", "lengths", dom_block["lengths"], float)
    modes = _triple("domain", "modes", dom_block["modes"], int)
    try:
        domain = BoxDomain(lengths, modes)
    except ValueError as err:
        raise ConfigError(f"'domain': {err}") from None

    par_block = dict(data.get("params") or {})
    _require_keys(
        "params",
        par_block,
        ("dt", "t_final", "sigma", "eps", "gamma", "eta", "coulomb", "dealias", "seed"),
    )
    par_block.setdefault("dt", 1e-3)
    par_block.setdefault("t_final", 1.0)
    try:
        params = Params(**par_block)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"'params': {err}") from None
    try:
        check_stability(params, domain)
    except ValueError as err:
        raise ConfigError(f"'params.dt': {err}") from None

    pot_block = dict(data.get("potential") or {})
    _require_keys("potential", pot_block, ("preset", "params"))
    preset = pot_block.get("preset", "constant")
    preset_params = pot_block.get("params", None)
    try:
        potentials = phi_preset(domain, preset, preset_params)
    except ValueError as err:
        raise ConfigError(f"'potential': {err}") from None

    pump_block = data.get("pump") or []
    if not isinstance(pump_block, list):
        raise ConfigError("'pump' must be a list of term mappings")
    terms = []
    for i, raw in enumerate(pump_block):
        if not isinstance(raw, dict):
            raise ConfigError(f"'pump[{i}]' must be a mapping")
        _require_keys(
            f"pump[{i}]", raw, ("mode", "weights", "amplitude", "omega", "phase")
        )
        if "mode" not in raw or "weights" not in raw or "amplitude" not in raw:
            raise ConfigError(f"'pump[{i}]' needs mode, weights, and amplitude")
        terms.append(
            PumpTerm(
                mode=_triple(f"pump[{i}]", "mode", raw["mode"], int),
                weights=_triple(f"pump[{i}]", "weights", raw["weights"], float),
                amplitude=float(raw["amplitude"]),
                omega=float(raw.get("omega", 0.0)),
                phase=float(raw.get("phase", 0.0)),
            )
        )
    pump = None
    if terms:
        try:
            pump = PumpSpec(domain, tuple(terms))
        except ValueError as err:
            raise ConfigError(f"'pump': {err}") from None

    init_block = dict(data.get("initial") or {})
    _require_keys("initial", init_block, tuple(_INITIAL_DEFAULTS))
    initial = dict(_INITIAL_DEFAULTS)
    initial.update(init_block)
    if initial["kind"] not in ("ground", "random", "scaled"):
        raise ConfigError(
            f"'initial.kind' must be ground, random, or scaled, got "
            f"{initial['kind']!r}"
        )

    out_block = dict(data.get("output") or {})
    _require_keys("output", out_block, ("directory", "record_every", "snapshot_every"))
    outdir = str(out_block.get("directory", "out"))
    record_every = int(out_block.get("record_every", 1))
    if record_every < 1:
        raise ConfigError("'output.record_every' must be >= 1")
    snapshot_every = float(out_block.get("snapshot_every", 0.0))
    if snapshot_every < 0.0:
        raise ConfigError("'output.snapshot_every' must be >= 0")

    return RunConfig(
        domain, params, potentials, pump, initial, outdir, record_every, snapshot_every
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from None


def _resolve_outdir(cfg: RunConfig) -> str:
    outdir = os.environ.get("MSCAVITY_OUTDIR", cfg.outdir)
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _initial_state(cfg: RunConfig) -> State:
    ini = cfg.initial
    return make_initial(
        cfg.domain,
        kind=ini["kind"],
        seed=cfg.params.seed,
        q=float(ini["q"]),
        a_norm=float(ini["a_norm"]),
        pi_norm=float(ini["pi_norm"]),
        scale=float(ini["scale"]),
        band_frac=int(ini["band_frac"]),
    )


# -- diagnostics CSV -------------------------------------------------------------------


def write_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(DiagnosticsRow.FIELDS) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r.values()) + "\n")


def read_csv(path: str):
    """Rows of a diagnostics CSV as float dicts keyed by header name."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"{path}: empty file, expected a diagnostics CSV")
    header = lines[0].split(",")
    missing = [c for c in DiagnosticsRow.FIELDS if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
    if len(lines) < 2:
        raise ConfigError(f"{path}: no data rows")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}: ragged row with {len(parts)} fields")
        rows.append({k: float(v) for k, v in zip(header, parts)})
    return rows


# -- snapshot binary format ------------------------------------------------------------


def snapshot_save(s: State, path: str) -> None:
    """Magic, version, mode counts (3 x int32 LE), time (float64 LE), then
    the coefficient arrays in declared order, each as little-endian float64."""
    dom = s.domain
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<B", SNAPSHOT_VERSION))
        fh.write(struct.pack("<3i", *dom.modes))
        fh.write(struct.pack("<d", s.t))
        for v in (s.a, s.pi):
            for c in v.comps:
                fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(s.psi.coeffs.real, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(s.psi.coeffs.imag, dtype="<f8").tobytes())


def snapshot_header(path: str):
    """(mode counts, time) from the fixed-size header."""
    with open(path, "rb") as fh:
        head = fh.read(4 + 1 + 12 + 8)
    if len(head) < 25:
        raise SnapshotFormatError(f"{path}: truncated header")
    if head[:4] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {head[:4]!r}")
    version = head[4]
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    dims = struct.unpack("<3i", head[5:17])
    (t,) = struct.unpack("<d", head[17:25])
    return dims, t


def snapshot_load(path: str, domain: BoxDomain) -> State:
    dims, t = snapshot_header(path)
    if tuple(dims) != tuple(domain.modes):
        raise SnapshotFormatError(
            f"{path}: grid dims {tuple(dims)} do not match config modes "
            f"{tuple(domain.modes)}"
        )
    with open(path, "rb") as fh:
        fh.seek(25)
        body = fh.read()

    offset = 0

    def take(shape):
        nonlocal offset
        n = int(np.prod(shape))
        end = offset + 8 * n
        if end > len(body):
            raise SnapshotFormatError(f"{path}: truncated body")
        arr = np.frombuffer(body[offset:end], dtype="<f8").reshape(shape)
        offset = end
        return arr.astype(np.float64)

    vec_shapes = [domain.coeff_shape(MAXWELL_PARITIES[i]) for i in range(3)]
    a = SpectralVector(
        domain, BasisFamily.MAXWELL, tuple(take(sh) for sh in vec_shapes)
    )
    pi = SpectralVector(
        domain, BasisFamily.MAXWELL, tuple(take(sh) for sh in vec_shapes)
    )
    re = take(domain.scalar_shape)
    im = take(domain.scalar_shape)
    if offset != len(body):
        raise SnapshotFormatError(f"{path}: {len(body) - offset} trailing bytes")
    psi = SpectralScalar(domain, re + 1j * im)
    return State(a, pi, psi, t)


# -- subcommands -----------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    outdir = _resolve_outdir(cfg)
    s0 = _initial_state(cfg)
    snap_times = ()
    if cfg.snapshot_every > 0.0:
        n = int(math.floor(cfg.params.t_final / cfg.snapshot_every))
        snap_times = tuple((i + 1) * cfg.snapshot_every for i in range(n))
    csv_path = os.path.join(outdir, "diagnostics.csv")
    try:
        rows, snaps = run(
            s0,
            cfg.params,
            cfg.pump,
            cfg.potentials,
            record_every=cfg.record_every,
            snapshot_times=snap_times,
        )
    except SimulationDiverged as err:
        write_csv(csv_path, err.rows)
        for i, s in enumerate(err.snapshots):
            snapshot_save(s, os.path.join(outdir, f"snap_{i:04d}.msw1"))
        print(f"diverged: {err}", file=sys.stderr)
        print(f"partial diagnostics in {csv_path}")
        return EXIT_DIVERGED
    write_csv(csv_path, rows)
    for i, s in enumerate(snaps[:-1]):
        snapshot_save(s, os.path.join(outdir, f"snap_{i:04d}.msw1"))
    snapshot_save(snaps[-1], os.path.join(outdir, "final.msw1"))
    print(f"wrote {csv_path} ({len(rows)} rows) and {len(snaps)} snapshot(s)")
    return EXIT_OK


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def _verify_charge(cfg: RunConfig) -> int:
    if cfg.initial["kind"] != "ground":
        raise ConfigError("charge suite: 'initial.kind' must be ground")
    if cfg.pump is not None:
        raise ConfigError("charge suite: pump must be empty")
    p = cfg.params
    oracle = estimates.charge_ode_oracle(
        cfg.domain, cfg.potentials, p, float(cfg.initial["q"])
    )
    ok = True

    def residual_at(dt):
        pd = dataclasses.replace(p, dt=dt)
        rows, _ = run(_initial_state(cfg), pd, None, cfg.potentials, record_every=1)
        qs = [r.charge for r in rows]
        mono = all(b <= a + 1e-10 * qs[0] for a, b in zip(qs, qs[1:]))
        worst_rel = max(
            abs(r.charge - oracle(r.t)) / max(qs[0], 1e-300) for r in rows
        )
        return estimates.charge_residual(rows, p.eps, p.gamma, dt), mono, worst_rel

    res1, mono1, rel1 = residual_at(p.dt)
    res2, _, _ = residual_at(0.5 * p.dt)
    order = math.log2(res1 / res2) if res2 > 0 else float("inf")
    ok &= _report("charge residual order", order >= 3.5, f"measured {order:.2f}")
    ok &= _report("charge monotone", mono1, "Q nonincreasing within 1e-10/step")
    ok &= _report(
        "charge oracle match", rel1 < 1e-5, f"max relative error {rel1:.3e}"
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify_conservation(cfg: RunConfig) -> int:
    if cfg.pump is not None and any(t.omega != 0.0 for t in cfg.pump.terms):
        raise ConfigError("conservation suite: pump must be static (omega = 0)")
    p = dataclasses.replace(cfg.params, sigma=0.0, eps=0.0, gamma=0.0)
    rows, _ = run(
        _initial_state(cfg), p, cfg.pump, cfg.potentials,
        record_every=cfg.record_every,
    )
    e = [r.energy_canonical for r in rows]
    drift = max(abs(x - e[0]) for x in e) / max(abs(e[0]), 1e-300)
    gauge = max(r.div_a_norm for r in rows)
    ok = _report("energy drift", drift < 1e-6, f"relative drift {drift:.3e}")
    ok &= _report("gauge constraint", gauge < 1e-10, f"max div-norm {gauge:.3e}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify_lyapunov(cfg: RunConfig) -> int:
    p = cfg.params
    if p.sigma == 0.0 and p.eps == 0.0 and p.gamma == 0.0:
        raise ConfigError("lyapunov suite: needs at least one damping coefficient > 0")
    rows, _ = run(
        _initial_state(cfg), p, cfg.pump, cfg.potentials,
        record_every=cfg.record_every,
    )
    fit = estimates.lyapunov_fit(rows)
    ok = _report("decay rate", fit.beta > 0.0 and not fit.degenerate,
                 f"beta {fit.beta:.4f} (degenerate={fit.degenerate})")
    ok &= _report("pump-floor constant", math.isfinite(fit.c_p),
                  f"c_p {fit.c_p:.4e}, floor {fit.floor:.4e}")
    ok &= _report("envelope", fit.envelope_ok,
                  "Phi(0) e^(-beta t) + floor dominates every sample")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify_absorbing(cfg: RunConfig) -> int:
    radii = (0.1, 1.0, 10.0)
    rep = estimates.absorbing_experiment(
        cfg.domain, cfg.potentials, cfg.pump, cfg.params, radii,
        record_every=cfg.record_every, seed=cfg.params.seed,
        q=float(cfg.initial["q"]), a_norm=float(cfg.initial["a_norm"]),
        pi_norm=float(cfg.initial["pi_norm"]),
        band_frac=int(cfg.initial["band_frac"]),
    )
    ok = _report("no divergence", not rep.diverged,
                 f"{len(rep.diverged)} divergent member(s)")
    ok &= _report("terminal bound spread", rep.spread < 0.2,
                  f"bound {rep.b_hat:.4e}, spread {rep.spread:.3f}")
    entries = [t for t in rep.entry_times if math.isfinite(t)]
    mono = all(a <= b + 1e-12 for a, b in zip(entries, entries[1:]))
    ok &= _report("entry times nondecreasing", mono,
                  " ".join(f"{t:.2f}" for t in rep.entry_times))
    ok &= _report("stays inside doubled ball", all(rep.stayed_inside),
                  str(rep.stayed_inside))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify_gradcheck(cfg: RunConfig) -> int:
    s = _initial_state(cfg)
    report = grad_check(s, cfg.pump, cfg.potentials, seed=cfg.params.seed)
    ok = True
    for name, err in sorted(report.items()):
        ok &= _report(f"gradient {name}", err < 1e-6, f"max relative error {err:.3e}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


_SUITES = {
    "charge": _verify_charge,
    "conservation": _verify_conservation,
    "lyapunov": _verify_lyapunov,
    "absorbing": _verify_absorbing,
    "gradcheck": _verify_gradcheck,
}


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    return _SUITES[suite](cfg)


def cmd_spectrum(cfg: RunConfig, task: str) -> int:
    dom = cfg.domain
    if task == "lambda-min":
        value, mode = estimates.lambda_min_mode(dom)
        iterative = estimates.lambda_min_iterative(dom)
        print("claim: |kappa|^2 >= delta > 0 on divergence-free field modes,")
        print("hence ||A||^2 <= (1/delta) ||grad A||^2 on that subspace")
        print(f"enumerated delta = {fmt(value)} at mode {mode}")
        print(f"iterative eigensolve = {fmt(iterative)}")
        print(f"L2-control constant 1/delta = {fmt(1.0 / value)}")
        agree = abs(value - iterative) < 1e-8
        ok = _report("spectral gap", value > 0.0 and agree,
                     f"enumeration vs eigensolve gap {abs(value - iterative):.2e}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    a = None
    if float(cfg.initial["a_norm"]) > 0.0:
        a = _initial_state(cfg).a
    if task == "equivalence":
        print("claim: c1 ||psi||_Hk^2 <= quadratic covariant form <= c2 ||psi||_Hk^2")
        print("(brackets of the non-quadratic form lie within a factor 2)")
        ok = True
        for order in ("H1", "H2"):
            phi = cfg.potentials.phi if order == "H2" else None
            rep = estimates.rayleigh_equivalence(dom, a, order, phi_samples=phi)
            ok &= _report(
                f"equivalence {order}",
                rep.c_low > 0.0 and math.isfinite(rep.c_high),
                f"c1 {fmt(rep.c_low)}, c2 {fmt(rep.c_high)}, "
                f"|A|_H1 {rep.a_h1:.4f}, {rep.method}",
            )
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    if task == "relative-bound":
        if any(n > estimates.DENSE_CAP for n in dom.modes):
            raise ConfigError(
                f"relative-bound needs modes <= {estimates.DENSE_CAP} per axis"
            )
        if a is None:
            a = SpectralVector.zeros(dom, BasisFamily.MAXWELL)
        rep = estimates.relative_bound(dom, a)
        print("claim: |<psi, T psi>| <= delta <psi, (-lap + 1) psi> + C ||psi||^2")
        print("for the magnetic perturbation T of the kinetic operator")
        ok = _report("T symmetric", rep.asymmetry < 1e-10,
                     f"max asymmetry {rep.asymmetry:.2e}")
        for d, c in zip(rep.deltas, rep.constants):
            ok &= _report(f"relative bound delta={d}", math.isfinite(c) and c >= 0.0,
                          f"C = {fmt(c)}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    raise ConfigError(f"unknown spectrum task {task!r}")


def cmd_snapshot(in_path: str, out_path: str | None, cfg: RunConfig | None) -> int:
    if cfg is None:
        dims, t = snapshot_header(in_path)
        print(f"{in_path}: modes {dims}, t = {fmt(t)}")
        if out_path is not None:
            raise ConfigError("writing a snapshot copy needs --config for the domain")
        return EXIT_OK
    s = snapshot_load(in_path, cfg.domain)
    print(
        f"{in_path}: t = {fmt(s.t)}, |A|_H1 = {fmt(h1_norm(s.a))}, "
        f"|Pi| = {fmt(l2_norm(s.pi))}, |psi| = {fmt(l2_norm(s.psi))}, "
        f"|X|^2 = {fmt(state_norm_sq(s))}"
    )
    if out_path is not None:
        snapshot_save(s, out_path)
        with open(in_path, "rb") as fa, open(out_path, "rb") as fb:
            same = fa.read() == fb.read()
        print(f"round trip to {out_path}: {'bit-exact' if same else 'MISMATCH'}")
        return EXIT_OK if same else EXIT_CHECK_FAILED
    return EXIT_OK


_GP_PREAMBLE = """\
# generated plot script; run with: gnuplot {name}
set datafile separator ","
set terminal pngcairo size 960,640
set grid
set xlabel "t"
"""


def _col(name: str) -> int:
    return DiagnosticsRow.FIELDS.index(name) + 1


def cmd_plots(csv_path: str, ensemble: list, outdir: str | None) -> int:
    rows = read_csv(csv_path)
    target = outdir or os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(target, exist_ok=True)
    rel = os.path.relpath(os.path.abspath(csv_path), target)

    charge_gp = os.path.join(target, "charge.gp")
    with open(charge_gp, "w", encoding="utf-8") as fh:
        fh.write(_GP_PREAMBLE.format(name="charge.gp"))
        fh.write('set output "charge.png"\nset ylabel "Q(t)"\nset logscale y\n')
        fh.write(f'plot "{rel}" using {_col("t")}:{_col("Q")} with lines title "Q(t)"\n')

    fit = estimates.lyapunov_fit(
        [SimpleNamespace(t=r["t"], lyapunov=r["Phi"]) for r in rows]
    )
    phi0 = rows[0]["Phi"]
    lyap_gp = os.path.join(target, "lyapunov.gp")
    with open(lyap_gp, "w", encoding="utf-8") as fh:
        fh.write(_GP_PREAMBLE.format(name="lyapunov.gp"))
        fh.write('set output "lyapunov.png"\nset ylabel "Phi(t)"\n')
        fh.write(f"beta = {fmt(fit.beta)}\nfloor = {fmt(fit.floor)}\n")
        fh.write(f"phi0 = {fmt(phi0)}\nt0 = {fmt(rows[0]['t'])}\n")
        fh.write(
            f'plot "{rel}" using {_col("t")}:{_col("Phi")} with lines '
            'title "Phi(t)", \\\n'
            "     phi0 * exp(-beta * (x - t0)) + floor with lines "
            'title "fitted envelope"\n'
        )

    ens_gp = os.path.join(target, "ensemble.gp")
    all_csvs = [csv_path] + list(ensemble)
    for extra in ensemble:
        read_csv(extra)
    with open(ens_gp, "w", encoding="utf-8") as fh:
        fh.write(_GP_PREAMBLE.format(name="ensemble.gp"))
        fh.write('set output "ensemble.png"\nset ylabel "|X|^2"\nset logscale y\n')
        parts = []
        for pth in all_csvs:
            r = os.path.relpath(os.path.abspath(pth), target)
            base = os.path.basename(pth)
            parts.append(
                f'"{r}" using {_col("t")}:{_col("X_norm_sq")} with lines '
                f'title "{base}"'
            )
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")

    print(f"wrote {charge_gp}, {lyap_gp}, {ens_gp}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mscavity",
        description="Cavity field-matter simulator and verification suite",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate and write diagnostics")
    p_sim.add_argument("config")

    p_ver = sub.add_parser("verify", help="run a named check suite")
    p_ver.add_argument("config")
    p_ver.add_argument("--suite", required=True, choices=sorted(_SUITES))

    p_spec = sub.add_parser("spectrum", help="operator-level checks")
    p_spec.add_argument("config")
    p_spec.add_argument(
        "--task",
        required=True,
        choices=("lambda-min", "equivalence", "relative-bound"),
    )

    p_snap = sub.add_parser("snapshot", help="inspect or round-trip a snapshot")
    p_snap.add_argument("--in", dest="in_path", required=True)
    p_snap.add_argument("--out", dest="out_path", default=None)
    p_snap.add_argument("--config", default=None)

    p_plot = sub.add_parser("plots", help="emit gnuplot scripts for a CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--ensemble", nargs="*", default=[])
    p_plot.add_argument("--outdir", default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(load_config(args.config))
        if args.command == "verify":
            return cmd_verify(load_config(args.config), args.suite)
        if args.command == "spectrum":
            return cmd_spectrum(load_config(args.config), args.task)
        if args.command == "snapshot":
            cfg = load_config(args.config) if args.config else None
            return cmd_snapshot(args.in_path, args.out_path, cfg)
        if args.command == "plots":
            return cmd_plots(args.csv, args.ensemble, args.outdir)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, SnapshotFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as err:
        print(f"diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
