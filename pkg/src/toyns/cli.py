"""Batch entry points: ``toyns {simulate,certify,compare,sweep,verify-multipliers}``.

Every artifact starts with a ``# config: {...}`` line holding the fully
resolved configuration.  Wall-clock timings go to the log only, so that
identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import io
import itertools
import json
import logging
import math
import sys
from pathlib import Path

import scipy.fft as sfft

from .analysis import heat_besov_minus1, write_diagnostics
from .certificate import certify, verify_domination
from .config import ConfigError, RunConfig, load_config, resolve
from .initdata import (
    AdmissibilityError,
    cg_data,
    cg_heat_besov_minus1,
    ms_bump,
    vorticity_bump,
)
from .models import ModelKind, ModelSpec, simulate
from .multipliers import verify_positivity
from .spectral import read_checkpoint

log = logging.getLogger("toyns")

__all__ = ["main", "build_data", "cmd_simulate", "cmd_certify", "cmd_compare", "cmd_sweep", "cmd_verify_multipliers"]


def _header(cfg: dict) -> str:
    return "# config: " + json.dumps(cfg, sort_keys=True) + "\n"


def _write(path: Path, body: str, cfg: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_header(cfg) + body)
    return path


def build_data(rc: RunConfig):
    """Initial field described by the config."""
    if rc.data_kind == "ms_bump":
        return ms_bump(rc.lattice, rc.data)
    if rc.data_kind == "cg_data":
        return cg_data(rc.lattice, rc.data)
    if rc.data_kind == "vorticity_bump":
        return vorticity_bump(rc.lattice, **rc.data)
    f = read_checkpoint(rc.data, rc.lattice.padded)
    if f.lattice != rc.lattice:
        raise ConfigError(f"checkpoint lattice {f.lattice} differs from the configured one")
    return f.replace(time=0.0)


def _summary(result, extra: dict | None = None) -> str:
    fields = {
        "termination": result.reason.value,
        "blew_up": result.reason.blew_up,
        "t_final": result.final.time,
        "steps": result.steps,
        "rejected_steps": result.rejected,
        "dt_final": result.dt_final,
        "peak_sup_fourier": result.peak_sup,
        "worst_positivity_ratio": result.worst_positivity,
        "worst_divergence_residual": result.worst_divergence,
    }
    if result.records:
        fields["peak_heat_besov_minus1"] = max(r.heat_besov_minus1 for r in result.records)
        fields["initial_heat_besov_minus1"] = result.records[0].heat_besov_minus1
    fields.update(extra or {})
    return "".join(f"{k}: {v!r}\n" if isinstance(v, float) else f"{k}: {v}\n" for k, v in fields.items())


def _run(rc: RunConfig, u0, out: Path | None, snapshot_times=(), model: ModelSpec | None = None, tag: str = ""):
    model = model or rc.model
    ckpt = None if out is None else out / f"checkpoints{tag}"
    snaps = sorted(set(rc.resolved["run"]["snapshot_times"]) | set(snapshot_times))
    result = simulate(u0, model, rc.stepper, snapshot_times=snaps, checkpoint_dir=ckpt)
    if out is not None:
        write_diagnostics(result.records, out / f"diagnostics{tag}.csv", rc.resolved)
        _write(out / f"summary{tag}.txt", _summary(result, {"model": model.kind.value}), rc.resolved)
    return result


# -- commands ------------------------------------------------------------

def cmd_simulate(cfg: dict, out: Path) -> int:
    rc = RunConfig.from_dict(cfg)
    u0 = build_data(rc)
    result = _run(rc, u0, out)
    print(f"{rc.model.kind.value}: {result.reason.value} at t={result.final.time:.6g} after {result.steps} steps")
    return 0


def cmd_certify(cfg: dict, out: Path) -> int:
    rc = RunConfig.from_dict(cfg)
    u0 = build_data(rc)
    cert = certify(u0)
    if not cert:
        _write(out / "certificate.txt", cert.to_text() + "\n", cfg)
        print(cert.to_text())
        return 0
    _write(out / "certificate.txt", cert.to_text() + "\n", cfg)
    _write(out / "certificate.csv", cert.to_csv(), cfg)
    print(cert.to_text())
    k_req = cfg["run"]["k_max"]
    k_max = cert.K_max if k_req is None else k_req
    if k_max > cert.K_max:
        log.warning("requested k_max=%d but the lattice only has room for K_max=%d", k_max, cert.K_max)
        print(f"warning: lattice room limits the certificate to K_max={cert.K_max} < {k_max}")
        k_max = cert.K_max
    if cfg["run"]["simulate"]:
        result = _run(rc, u0, out, snapshot_times=cert.checkpoints(k_max))
        rep = verify_domination(result, cert, k_max, dt=rc.stepper.dt)
        _write(out / "domination.txt", rep.to_text() + "\n", cfg)
        _write(out / "domination.csv", rep.to_csv(), cfg)
        print(f"simulation: {result.reason.value} at t={result.final.time:.6g}")
        print(rep.to_text())
    return 0


def _first_divergence(a: list, b: list, rtol: float):
    for ra, rb in zip(a, b):
        x, y = ra.sup_fourier, rb.sup_fourier
        if abs(x - y) > rtol * max(abs(x), abs(y), 1e-300):
            return ra.t
    return None


def cmd_compare(cfg: dict, out: Path) -> int:
    rc = RunConfig.from_dict(cfg)
    if rc.model.kind is ModelKind.VORTICITY_TOY:
        raise ConfigError("compare needs velocity data")
    u0 = build_data(rc)
    toy = ModelSpec(ModelKind.TNS_HYPERVISCOUS if rc.model.alpha != 1 else ModelKind.TNS, rc.model.dim, rc.model.alpha)
    ns = ModelSpec(ModelKind.NS, rc.model.dim)
    rt = _run(rc, u0, out, model=toy, tag="_tns")
    rn = _run(rc, u0, out, model=ns, tag="_ns")
    times = sorted({r.t for r in rt.records} | {r.t for r in rn.records})
    bt = {r.t: r for r in rt.records}
    bn = {r.t: r for r in rn.records}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["sup_fourier", "l2_energy", "heat_besov_minus1", "divergence_residual"]
    w.writerow(["t"] + [f"tns_{c}" for c in cols] + [f"ns_{c}" for c in cols])
    for t in times:
        row = [repr(t)]
        for rec in (bt.get(t), bn.get(t)):
            row += [repr(float(getattr(rec, c))) if rec is not None else "" for c in cols]
        w.writerow(row)
    _write(out / "compare.csv", buf.getvalue(), cfg)
    div = _first_divergence(rt.records, rn.records, cfg["run"]["compare_rtol"])
    text = (
        f"tns: {rt.reason.value} at t={rt.final.time!r}\n"
        f"ns: {rn.reason.value} at t={rn.final.time!r}\n"
        f"divergence_time (sup_fourier rtol {cfg['run']['compare_rtol']:g}): {div!r}\n"
    )
    _write(out / "compare_summary.txt", text, cfg)
    print(text, end="")
    return 0


def _data_norms(rc: RunConfig) -> dict:
    """Amplitude and heat-semigroup norm of the configured data."""
    if rc.data_kind == "cg_data" and rc.model.dim == 3:
        try:
            u0 = build_data(rc)
        except AdmissibilityError:
            # the lattice cannot hold xi3 ~ 1/eps; evaluate the continuum norm instead
            return {"A": math.nan, "heat_besov_minus1": cg_heat_besov_minus1(rc.data), "norm_source": "continuum"}
    else:
        u0 = build_data(rc)
    return {"A": u0.l1(), "heat_besov_minus1": heat_besov_minus1(u0), "norm_source": "lattice"}


def _sweep_cell(args):
    index, cfg, command, out = args
    row = {"cell": index}
    try:
        rc = RunConfig.from_dict(cfg)
        cell_out = out / f"cell_{index:04d}"
        norms = _data_norms(rc)
        row.update(norms)
        eps = cfg["data"]["eps"]
        row["heat_over_log_scale"] = norms["heat_besov_minus1"] / (-math.log(eps)) ** 0.2 if rc.data_kind == "cg_data" else math.nan
        if command in ("simulate", "certify"):
            u0 = build_data(rc)
            if command == "certify":
                cert = certify(u0)
                row["certified"] = bool(cert)
                row["certificate"] = "issued" if cert else cert.reason
            result = _run(rc, u0, cell_out)
            row.update({"termination": result.reason.value, "t_final": result.final.time, "peak_sup": result.peak_sup})
        elif command != "norms":
            raise ConfigError(f"unknown sweep command {command!r}")
        row["error"] = ""
    except Exception as e:  # per-cell failures are recorded, the sweep goes on
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def cmd_sweep(cfg: dict, out: Path, threads: int = 1) -> int:
    axes = list(cfg["sweep"]["grid"].items())
    command = cfg["sweep"]["command"]
    cells = []
    if axes:
        for combo in itertools.product(*[vals for _, vals in axes]):
            overrides = [f"{k}={v}" for (k, _), v in zip(axes, combo)]
            cell_cfg = resolve(cfg, overrides)
            cells.append((len(cells), cell_cfg, command, out, dict(zip([k for k, _ in axes], combo))))
    rows = []
    if threads > 1 and len(cells) > 1:
        with cf.ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_sweep_cell, [c[:4] for c in cells]))
    else:
        rows = [_sweep_cell(c[:4]) for c in cells]
    keys = [k for k, _ in axes]
    cols = ["cell"] + keys + ["A", "heat_besov_minus1", "heat_over_log_scale", "norm_source", "certified", "certificate", "termination", "t_final", "peak_sup", "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for cell, row in zip(cells, rows):
        row.update(cell[4])
        w.writerow([repr(row[c]) if isinstance(row.get(c), float) else row.get(c, "") for c in cols])
    _write(out / "sweep.csv", buf.getvalue(), cfg)
    failed = sum(1 for r in rows if r["error"])
    print(f"sweep: {len(rows)} cells, {failed} failed")
    return 0


def cmd_verify_multipliers(cfg: dict, out: Path) -> int:
    rc = RunConfig.from_dict(cfg)
    rep = verify_positivity(rc.lattice, rc.lattice.dim, cfg["run"]["positivity_samples"], rng=cfg["run"]["seed"])
    _write(out / "positivity.txt", rep.to_text() + "\n", cfg)
    _write(out / "positivity_violations.csv", rep.to_csv(), cfg)
    print(rep.to_text())
    return 0 if rep.ok else 3


COMMANDS = {
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "verify-multipliers": cmd_verify_multipliers,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toyns", description="Spectral experiments on toy Navier-Stokes systems with positive Fourier dynamics.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="INI-style or JSON config file")
        s.add_argument("--out", type=Path, default=Path("runs") / name, help="output directory")
        s.add_argument("--threads", type=int, default=1, help="FFT workers, or parallel sweep cells")
        s.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE", help="repeatable")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.override)
        RunConfig.from_dict(cfg)
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.threads)
        with sfft.set_workers(args.threads):
            return COMMANDS[args.command](cfg, args.out)
    except (ConfigError, AdmissibilityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
