"""Command-line interface.

Usage examples::

    susyrabi spectrum --set model.g2=0.2 --set sweep.param=g1 --set sweep.max=3 --out fig1d.csv
    susyrabi susy-verify --set model.g1=1.4
    susyrabi lindblad stationary --nmax 12 --format json
    susyrabi lattice --set lattice.n_max_site=8
    susyrabi map lambda --config lambda.json

Every command reads an optional JSON config, applies ``--set key=value``
overrides (dotted keys, JSON-parsed values) and writes CSV with ``#`` header
lines or a single JSON object. Failures exit with status 2 and a JSON error
record on stderr.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .dynamics import sweep_hopping, sweep_parameter
from .errors import SusyRabiError
from .lindblad import (
    LindbladRates,
    build_dressed_system,
    conserved_quantities_direct,
    conserved_quantities_recurrence,
    decay_rate_fit,
    decompose_liouvillian,
    evolve_density_matrix,
    phi_equal,
    project_stationary,
)
from .model import (
    GrParams,
    LambdaSchemeParams,
    RdParams,
    em_dual_form,
    lambda_scheme_to_gr,
    rd_to_gr,
    susy_residual,
)
from .operators import Truncation
from .susy import (
    build_supercharge,
    kernel_dimensions,
    verify_susy_algebra,
    zero_mode_parities,
    zero_modes_displacement,
    zero_modes_recurrence,
)

DEFAULT_CONFIG = {
    "model": {"type": "gr", "omega": 1.0, "delta": 2.0, "g1": 1.5, "g2": 0.5, "lam": 0.0},
    "trunc": {"n_max": 60, "interior_margin": 12},
    "levels": 4,
    "n_jobs": 1,
    "sweep": None,
    "rates": {"kappa": 0.01, "gamma": 0.01, "gamma_phi0": 0.0, "n_levels": None},
    "lindblad": {"t_max": 1000.0, "n_t": 201, "fit_t_max": 4000.0, "fit_n_t": 401},
    "lattice": {"n_sites": 3, "n_max_site": 8, "hopping": [0.0, 0.05, 0.1, 0.15, 0.2]},
}

TOLERANCES = {
    "susy_line": 1e-10,
    "degeneracy_tie": 1e-8,
    "svd_rel": 1e-8,
    "zero_cluster_rel": 1e-8,
}


class ConfigError(SusyRabiError, ValueError):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for part in parts[:-1]:
        if node.get(part) is None:
            node[part] = {}
        node = node[part]
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not a section")
    node[parts[-1]] = _parse_value(value)


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
        if "model" in user and "type" in user["model"]:
            # a different model variant replaces the default GR block entirely
            if user["model"]["type"] != cfg["model"]["type"]:
                cfg["model"] = {}
        cfg = _merge(cfg, user)
    for assignment in args.set or []:
        apply_override(cfg, assignment)
    if args.nmax is not None:
        cfg["trunc"]["n_max"] = args.nmax
        if args.margin is None and cfg["trunc"].get("interior_margin", 0) >= args.nmax:
            # keep the default margin usable for small cutoffs
            cfg["trunc"]["interior_margin"] = args.nmax // 5
    if args.margin is not None:
        cfg["trunc"]["interior_margin"] = args.margin
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def gr_from_config(cfg: dict) -> GrParams:
    m = dict(cfg["model"])
    kind = m.pop("type", "gr")
    if kind != "gr":
        raise ConfigError(f"this command needs a 'gr' model, got {kind!r}")
    try:
        return GrParams(**m)
    except TypeError as exc:
        raise ConfigError(f"invalid model fields: {exc}") from None


def trunc_from_config(cfg: dict) -> Truncation:
    t = cfg["trunc"]
    return Truncation(int(t["n_max"]), int(t.get("interior_margin", 0)))


def rates_from_config(cfg: dict) -> LindbladRates:
    r = cfg.get("rates")
    if not r or r.get("kappa") is None or r.get("gamma") is None:
        raise ConfigError("lindblad commands require rates.kappa and rates.gamma")
    return LindbladRates(
        float(r["kappa"]), float(r["gamma"]), float(r.get("gamma_phi0") or 0.0), r.get("n_levels")
    )


def sweep_values(sweep: dict) -> np.ndarray:
    if "values" in sweep:
        return np.asarray(sweep["values"], dtype=float)
    count = int(sweep.get("count", 31))
    if count < 1:
        raise ConfigError("sweep.count must be positive")
    return np.linspace(float(sweep["min"]), float(sweep["max"]), count)


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


class Output:
    """Collects one command's result: header metadata plus a table and/or record."""

    def __init__(self, command: str, cfg: dict):
        self.header = {
            "command": command,
            "version": __version__,
            "config_sha256": config_hash(cfg),
            "truncation": dict(cfg["trunc"]),
            "tolerances": TOLERANCES,
        }
        self.record: dict = {}
        self.rows: list[dict] = []

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"header": self.header, **self.record}
            if self.rows:
                doc["rows"] = self.rows
            return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
        buf = io.StringIO()
        for k, v in self.header.items():
            buf.write(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
        for k, v in self.record.items():
            buf.write(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
        if self.rows:
            cols = list(self.rows[0])
            buf.write(",".join(cols) + "\n")
            for row in self.rows:
                buf.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")
        return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".susyrabi-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg: dict, out: Output) -> None:
    base = gr_from_config(cfg)
    trunc = trunc_from_config(cfg)
    sweep = cfg.get("sweep")
    if sweep:
        name = sweep.get("param", "g1")
        values = sweep_values(sweep)
    else:
        name, values = "g1", [base.g1]
    rows = sweep_parameter(base, name, values, trunc, int(cfg["levels"]), int(cfg["n_jobs"]))
    out.record["model"] = base.to_dict()
    out.rows = rows


def _line_g1(p: GrParams) -> float:
    w, lam = p.omega, p.lam
    g1_sq = (p.g2**2 * (w - lam) + p.delta * (w * w - lam * lam)) / (w + lam)
    if g1_sq < 0:
        raise ConfigError("no real g1 puts these parameters on the SUSY line")
    return float(np.sqrt(g1_sq))


def cmd_susy_verify(cfg: dict, out: Output) -> None:
    p = gr_from_config(cfg)
    trunc = trunc_from_config(cfg)
    res_main = susy_residual(p, "main")
    res_kernel = susy_residual(p, "kernel")
    rec = out.record
    rec["model"] = p.to_dict()
    rec["susy_residual"] = res_main
    rec["susy_residual_kernel"] = res_kernel
    scale = max(1.0, p.g1**2, p.g2**2, abs(p.delta * p.omega))
    if abs(res_kernel) > TOLERANCES["susy_line"] * scale:
        rec["status"] = "not on SUSY line"
        return
    rec["status"] = "on SUSY line"
    sc = build_supercharge(p, trunc)
    rep = verify_susy_algebra(sc, p, trunc)
    rep2 = verify_susy_algebra(build_supercharge(p, trunc.doubled()), p, trunc.doubled())
    n_minus, n_plus = kernel_dimensions(p, trunc)
    rec.update(
        family=sc.family.value,
        kernel_shift=sc.kernel_shift,
        shift_c=sc.shift_c,
        partner_residual=rep.residual_partner,
        partner_residual_with_shift_c=rep.residual_plus_shift,
        nilpotency=rep.nilpotency,
        isospectral_gap=rep.isospectral.max_pair_gap,
        dim_ker_minus=n_minus,
        dim_ker_plus=n_plus,
        witten_index=n_minus - n_plus,
        convergence={
            "n_max": [trunc.n_max, 2 * trunc.n_max],
            "partner_residual": [rep.residual_partner, rep2.residual_partner],
            "delta": rep2.residual_partner - rep.residual_partner,
        },
    )
    if p.lam == 0:
        rz = zero_modes_recurrence(p, trunc)
        dz = zero_modes_displacement(p, trunc)
        rec["zero_modes"] = {
            "recurrence_residuals": list(rz.annihilation_residuals),
            "displacement_residuals": list(dz.annihilation_residuals),
            "displacement_amplitude": abs(dz.amplitude),
            "parity_labels": list(zero_mode_parities(rz, trunc)),
        }


def _lindblad_setup(cfg: dict):
    p = gr_from_config(cfg)
    trunc = trunc_from_config(cfg)
    rates = rates_from_config(cfg)
    system = build_dressed_system(p, trunc, rates)
    decomp = decompose_liouvillian(system.l_matrix)
    psi = np.zeros(2 * trunc.n_max)
    psi[0] = 1.0  # |0>_b |up>
    return p, system, decomp, system.bare_state(psi)


def _conserved(system, decomp):
    return conserved_quantities_direct(decomp, basis=system.basis)


def cmd_lindblad_evolve(cfg: dict, out: Output) -> None:
    p, system, decomp, rho0 = _lindblad_setup(cfg)
    lc = cfg["lindblad"]
    times = np.linspace(0.0, float(lc["t_max"]), int(lc["n_t"]))
    traj = evolve_density_matrix(system.l_matrix, rho0, times, decomp=decomp)
    obs = system.observables()
    cq = _conserved(system, decomp)
    rows = []
    for t, rho in zip(times, traj):
        row = {
            "t": float(t),
            "mean_photon": float(np.real(np.trace(obs["mean_photon"] @ rho))),
            "inversion": float(np.real(np.trace(obs["inversion"] @ rho))),
            "trace_err": float(abs(np.trace(rho) - 1)),
        }
        for label, value in zip(cq.labels, cq.evaluate(rho)):
            if label in ("c12", "c21"):
                continue
            row[f"I_{label}"] = float(np.real(value))
        rows.append(row)
    herm = float(max(np.abs(r - r.conj().T).max() for r in traj))
    if max(r["trace_err"] for r in rows) > 1e-10 or herm > 1e-10:
        raise SusyRabiError("trace or Hermiticity invariant violated during evolution")
    out.record.update(model=p.to_dict(), rates=system.rates.__dict__, zero_dim=decomp.zero_dim)
    out.rows = rows


def cmd_lindblad_stationary(cfg: dict, out: Output) -> None:
    p, system, decomp, rho0 = _lindblad_setup(cfg)
    obs = system.observables()
    rho_st = project_stationary(decomp, rho0)
    rec = out.record
    rec.update(model=p.to_dict(), rates=system.rates.__dict__, zero_dim=decomp.zero_dim)
    rec["plateau"] = {
        "mean_photon": float(np.real(np.trace(obs["mean_photon"] @ rho_st))),
        "inversion": float(np.real(np.trace(obs["inversion"] @ rho_st))),
    }
    cq = _conserved(system, decomp)
    rec["conserved_values"] = {
        label: float(np.real(v)) for label, v in zip(cq.labels, cq.evaluate(rho0))
    }
    rec["phi_equal"] = phi_equal(system.pieces.phi, p.omega)
    diag_labels = [l for l in cq.labels if l not in ("c12", "c21")]
    out.rows = [
        {"k": k, "energy": float(system.pieces.energies[k]),
         **{f"rho_bar_{l}": float(np.real(cq[l][k, k])) for l in diag_labels}}
        for k in range(system.pieces.dim)
    ]


def cmd_lindblad_decay_fit(cfg: dict, out: Output) -> None:
    p = gr_from_config(cfg)
    trunc = trunc_from_config(cfg)
    rates = rates_from_config(cfg)
    ref = p.replace(g1=_line_g1(p))
    ref_system = build_dressed_system(ref, trunc, rates)
    cq = conserved_quantities_recurrence(
        ref_system.pieces.energies, ref_system.pieces.gammas, ref.omega, ref_system.basis
    )
    system = build_dressed_system(p, trunc, rates)
    psi = np.zeros(2 * trunc.n_max)
    psi[0] = 1.0
    lc = cfg["lindblad"]
    t = np.linspace(0.0, float(lc["fit_t_max"]), int(lc["fit_n_t"]))
    fit = decay_rate_fit(system.l_matrix, system.bare_state(psi), cq.in_basis(system.basis), t)
    out.record.update(
        model=p.to_dict(),
        reference_g1=ref.g1,
        delta_g1=p.g1 - ref.g1,
        rates=rates.__dict__,
        kappa_fit=fit.kappa,
        fit_residual=fit.residual,
        i2_initial=float(fit.i2[0]),
        i2_asymptote=fit.i2_inf,
        fit_window=list(fit.window),
    )


def cmd_lattice(cfg: dict, out: Output) -> None:
    p = gr_from_config(cfg)
    lat = cfg["lattice"]
    hopping = lat["hopping"]
    values = sweep_values(hopping) if isinstance(hopping, dict) else np.asarray(hopping, float)
    rows = sweep_hopping(
        [p] * int(lat["n_sites"]), values, int(lat["n_max_site"]), int(cfg["levels"]),
        int(cfg["n_jobs"]),
    )
    out.header["truncation"] = {"n_max_site": int(lat["n_max_site"])}
    out.record.update(model=p.to_dict(), n_sites=int(lat["n_sites"]))
    out.rows = rows


def _map_report(gr: GrParams, cancelled) -> dict:
    rec = {"gr_params": gr.to_dict(), "susy_residual": susy_residual(gr, "kernel")}
    if gr.lam == 0:
        omega_e, omega_b, _ = em_dual_form(gr)
        rec.update(omega_e=omega_e, omega_b=omega_b)
    else:
        rec.update(omega_e=None, omega_b=None)
    rec["bloch_siegert_cancelled"] = cancelled
    return rec


def cmd_map(cfg: dict, out: Output, kind: str) -> None:
    m = dict(cfg["model"])
    given = m.pop("type", None)
    if given != kind:
        raise ConfigError(f"map {kind} needs model.type={kind!r}, got {given!r}")
    if kind == "rd":
        rd = RdParams(**m)
        out.record.update(_map_report(rd_to_gr(rd), None))
    else:
        variant = m.pop("variant", "main")
        for key in ("om1", "om2"):
            if isinstance(m.get(key), dict):
                m[key] = complex(m[key].get("re", 0.0), m[key].get("im", 0.0))
        gr, cancelled = lambda_scheme_to_gr(LambdaSchemeParams(**m), variant)
        out.record.update(_map_report(gr, cancelled))
        out.record["variant"] = variant


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--nmax", type=int, help="Fock cutoff n_max")
    common.add_argument("--margin", type=int, help="interior margin")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a config field (repeatable)"
    )

    parser = argparse.ArgumentParser(prog="susyrabi", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="energies along a parameter sweep")
    sub.add_parser("susy-verify", parents=[common], help="SUSY algebra and Witten index report")
    lb = sub.add_parser("lindblad", help="dressed-state open dynamics")
    lsub = lb.add_subparsers(dest="action", required=True)
    for name in ("evolve", "stationary", "decay-fit"):
        lsub.add_parser(name, parents=[common])
    sub.add_parser("lattice", parents=[common], help="coupled-cavity ground-state gap")
    mp = sub.add_parser("map", help="map physical models onto generalized Rabi parameters")
    msub = mp.add_subparsers(dest="action", required=True)
    for name in ("rd", "lambda"):
        msub.add_parser(name, parents=[common])
    return parser


DEFAULT_FORMAT = {
    "susy-verify": "json",
    "map.rd": "json",
    "map.lambda": "json",
    "lindblad.stationary": "json",
    "lindblad.decay-fit": "json",
}


def _error(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    key = args.command + (f".{args.action}" if getattr(args, "action", None) else "")
    try:
        cfg = load_config(args)
        fmt = args.format or cfg.get("output_format") or DEFAULT_FORMAT.get(key, "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown output format {fmt!r}")
        out_path = args.out or cfg.get("output_path")
        out = Output(key, cfg)
        if args.command == "spectrum":
            cmd_spectrum(cfg, out)
        elif args.command == "susy-verify":
            cmd_susy_verify(cfg, out)
        elif args.command == "lindblad":
            {"evolve": cmd_lindblad_evolve, "stationary": cmd_lindblad_stationary,
             "decay-fit": cmd_lindblad_decay_fit}[args.action](cfg, out)
        elif args.command == "lattice":
            cmd_lattice(cfg, out)
        elif args.command == "map":
            cmd_map(cfg, out, args.action)
        text = out.render(fmt)
    except (SusyRabiError, ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        return _error(type(exc).__name__, str(exc))
    if out_path:
        try:
            write_atomic(out_path, text)
        except OSError as exc:
            return _error(type(exc).__name__, str(exc))
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
