"""Acceptance criteria 1-12.

Each test records one PASS/FAIL line, printed in the terminal summary and
to stdout.  Tolerances are the published ones; nothing here is relaxed.
"""

import functools
import inspect
import math
import time

import numpy as np
import pytest

from fields import random_complex, random_divfree, random_hermitian, random_positive_even
from oracles import ns_direct, tns_direct, vorticity_direct
from toyns.analysis import energy_flux, heat_besov_minus1, inner
from toyns.certificate import T_INFINITY, certify, threshold_amplitude, tk_schedule, verify_domination
from toyns.initdata import (
    BumpSpec,
    CGSpec,
    ProfileSpec,
    cg_data,
    cg_heat_besov_minus1,
    ms_bump,
    validate_admissibility,
    vorticity_bump,
)
from toyns.models import ModelSpec, StepperConfig, Termination, rhs_ns, rhs_tns, rhs_vorticity_toy, simulate
from toyns.multipliers import verify_positivity
from toyns.spectral import FrequencyLattice, SpectralScalarField, SpectralVectorField, make_lattice

RESULTS = {}
A_STAR = 16 * 2 ** (1 / 3)


class Checks:
    def __init__(self):
        self.items = []

    def __call__(self, ok, text):
        self.items.append((bool(ok), text))
        return bool(ok)

    @property
    def failed(self):
        return [t for ok, t in self.items if not ok]


def criterion(key, title):
    """Run the test body with a Checks collector; record and print one line."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            chk = Checks()
            t0 = time.perf_counter()
            try:
                fn(chk, *args, **kwargs)
            except Exception as e:
                chk(False, f"{type(e).__name__}: {e}")
            bad = chk.failed
            shown = [t if ok else f"FAILED {t}" for ok, t in chk.items]
            line = f"criterion {key:<3} {'PASS' if not bad else 'FAIL'}  {title}  [{time.perf_counter() - t0:.1f}s]  " + "; ".join(shown)
            RESULTS[key] = line
            print(line)
            assert not bad, "; ".join(bad)

        # hide the collector from pytest's fixture lookup
        sig = inspect.signature(fn)
        wrapper.__signature__ = sig.replace(parameters=list(sig.parameters.values())[1:])
        return wrapper

    return deco


def rel_err(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


# -- shared runs -------------------------------------------------------------

def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


BLOWUP_STEPPER = StepperConfig(dt=1e-4, t_end=0.4, adaptive=True, blowup_norm_cap=1e6, record_interval=1e-3)


def _blowup_run(dim, N, h, center, radius, k_max, model=None):
    lat = make_lattice(dim, N, h)
    u0 = ms_bump(lat, BumpSpec(dim, center, radius, 2 * A_STAR))
    cert = certify(u0)
    assert cert, cert.to_text()
    ks = min(k_max, cert.K_max)
    model = model or ModelSpec("TNS", dim)
    res, secs = timed(lambda: simulate(u0, model, BLOWUP_STEPPER, snapshot_times=cert.checkpoints(ks)))
    return {"u0": u0, "cert": cert, "result": res, "seconds": secs, "k_max": k_max}


@pytest.fixture(scope="module")
def blowup_2d():
    return _blowup_run(2, 256, 1 / 32, (0.6, -0.6), 0.05, 3)


@pytest.fixture(scope="module")
def blowup_3d():
    return _blowup_run(3, 64, 1 / 16, (0.5625, -0.5, -0.5625), 0.04, 2)


CG_SPEC = CGSpec(1e-2, 0.5, ProfileSpec((0.6, -0.08), 0.07, 200.0))


@pytest.fixture(scope="module")
def cg_runs():
    lat = make_lattice(2, 128, 1 / 16)
    u0 = cg_data(lat, CG_SPEC)
    cfg = StepperConfig(dt=1e-3, t_end=1.0, adaptive=True, record_interval=0.05)
    tns, t_tns = timed(lambda: simulate(u0, ModelSpec("TNS", 2), cfg))
    ns, t_ns = timed(lambda: simulate(u0, ModelSpec("NS", 2), cfg))
    return {"u0": u0, "tns": tns, "ns": ns, "seconds": t_tns + t_ns}


@pytest.fixture(scope="module")
def ns_bump_run():
    lat = make_lattice(2, 256, 1 / 32)
    u0 = ms_bump(lat, BumpSpec(2, (0.6, -0.6), 0.05, 2 * A_STAR))
    return simulate(u0, ModelSpec("NS", 2), StepperConfig(dt=1e-3, t_end=0.05, record_interval=5e-3))


# -- criteria ----------------------------------------------------------------

@criterion("1", "multiplier positivity")
def test_c1_multiplier_positivity(chk):
    t0 = time.perf_counter()
    for dim, N, h in ((2, 256, 1 / 32), (3, 64, 1 / 16)):
        rep = verify_positivity(make_lattice(dim, N, h), dim, 10**6, rng=dim, tol=1e-14)
        chk(rep.ok, f"{dim}-D: {rep.n_lattice} lattice + {rep.n_random} cone points, {len(rep.violations)} violations")
        chk(rep.max_abs_off_cone == 0, f"{dim}-D off-cone max |entry| = {rep.max_abs_off_cone:g}")
        chk(rep.min_on_cone >= -1e-14, f"{dim}-D min entry/|xi| = {rep.min_on_cone:.3e}")
    secs = time.perf_counter() - t0
    chk(secs < 30, f"runtime {secs:.1f}s < 30s")


@criterion("2", "divergence-free invariance")
def test_c2_divergence_free(chk, blowup_2d, blowup_3d, cg_runs, ns_bump_run):
    runs = {
        "TNS ms_bump 2-D": blowup_2d["result"],
        "TNS ms_bump 3-D": blowup_3d["result"],
        "NS ms_bump 2-D": ns_bump_run,
        "TNS cg_data": cg_runs["tns"],
        "NS cg_data": cg_runs["ns"],
    }
    for name, res in runs.items():
        recs = max(r.divergence_residual for r in res.records)
        chk(recs <= 1e-10 and res.worst_divergence <= 1e-10, f"{name}: max residual/max|u| = {max(recs, res.worst_divergence):.1e} over {len(res.records)} records")


@criterion("3", "positivity invariance")
def test_c3_positivity(chk, blowup_2d, blowup_3d):
    for name, run in (("2-D", blowup_2d), ("3-D", blowup_3d)):
        res = run["result"]
        worst = min(res.worst_positivity, min(r.min_fourier / r.sup_fourier for r in res.records))
        chk(worst >= -1e-12, f"{name}: min Re u_hat / max |u_hat| = {worst:.2e} over {res.steps} steps")


@criterion("4", "oracle equivalence")
def test_c4_oracles(chk):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = {"rhs_tns": 0.0, "rhs_ns": 0.0, "rhs_vorticity_toy": 0.0}
    gens = (random_complex, random_hermitian, random_positive_even)
    for trial in range(200):
        dim = 2 + trial % 2
        h = rng.uniform(0.1, 1.0)
        lat = FrequencyLattice(dim, 4, h)
        gen = gens[trial % 3]
        u = SpectralVectorField(lat, gen(lat, rng, dim))
        worst["rhs_tns"] = max(worst["rhs_tns"], rel_err(rhs_tns(u).components, tns_direct(u.components, 4, h)))
        worst["rhs_ns"] = max(worst["rhs_ns"], rel_err(rhs_ns(u).components, ns_direct(u.components, 4, h)))
        lat2 = FrequencyLattice(2, 4, h)
        w = SpectralScalarField(lat2, gen(lat2, rng))
        worst["rhs_vorticity_toy"] = max(worst["rhs_vorticity_toy"], rel_err(rhs_vorticity_toy(w).coeffs, vorticity_direct(w.coeffs, 4, h)))
    for name, err in worst.items():
        chk(err <= 1e-12, f"{name} worst rel err {err:.1e} (200 trials)")
    secs = time.perf_counter() - t0
    chk(secs < 10, f"runtime {secs:.1f}s < 10s")


@criterion("5", "schedule and threshold numerics")
def test_c5_schedule(chk):
    chk(abs(tk_schedule(1) - math.log(2) / 4) <= 1e-12, f"t_1 = {tk_schedule(1)!r}")
    chk(abs(T_INFINITY - math.log(2) / 3) <= 1e-12, f"t_inf = {T_INFINITY!r}")
    chk(abs(tk_schedule(200) - math.log(2) / 3) <= 1e-12, f"t_200 = {tk_schedule(200)!r}")
    chk(abs(threshold_amplitude() - A_STAR) <= 1e-12, f"A* = {threshold_amplitude()!r}")


def _blowup_checks(chk, run, limit):
    res, cert = run["result"], run["cert"]
    chk(validate_admissibility(run["u0"]).ok, "data admissible")
    chk(res.reason is Termination.NORM_CAP_EXCEEDED and res.t_final <= 0.4, f"{res.reason.value} at t*={res.t_final:.6g}")
    rep = verify_domination(res, cert, min(run["k_max"], cert.K_max), dt=BLOWUP_STEPPER.dt)
    chk(cert.K_max >= run["k_max"], f"K_max={cert.K_max} (need {run['k_max']})")
    for k, v in rep.verdicts.items():
        chk(v == "pass", f"domination k={k} (t_k={tk_schedule(k):.4f}): {v}")
    chk(run["seconds"] < limit, f"runtime {run['seconds']:.0f}s < {limit}s")


@criterion("6a", "discrete blow-up experiment, 2-D")
def test_c6_blowup_2d(chk, blowup_2d):
    _blowup_checks(chk, blowup_2d, 300)


@criterion("6b", "discrete blow-up experiment, 3-D")
def test_c6_blowup_3d(chk, blowup_3d):
    _blowup_checks(chk, blowup_3d, 900)


@criterion("7", "small-data decay")
def test_c7_small_data(chk):
    lat = make_lattice(2, 256, 1 / 32)
    u0 = ms_bump(lat, BumpSpec(2, (0.6, -0.6), 0.05, 1e-2 * A_STAR))
    cfg = StepperConfig(dt=0.01, t_end=2.0, record_interval=0.05)
    res = simulate(u0, ModelSpec("TNS", 2), cfg)
    sups = np.array([r.sup_fourier for r in res.records])
    chk(res.reason is Termination.REACHED_T_END, f"{res.reason.value} at t={res.t_final:.3g}")
    chk(res.records[-1].t == pytest.approx(2.0), f"records span [0, {res.records[-1].t:.3g}]")
    chk(np.all(np.diff(sups) < 0), f"sup|u_hat| strictly decreasing over {len(sups)} records ({sups[0]:.3g} -> {sups[-1]:.3g})")


@criterion("8", "NS vs TNS contrast on cg_data")
def test_c8_compare(chk, cg_runs):
    tns, ns = cg_runs["tns"], cg_runs["ns"]
    chk(certify(cg_runs["u0"]), "data certified")
    chk(tns.reason is Termination.NORM_CAP_EXCEEDED, f"TNS: {tns.reason.value} at t={tns.t_final:.4g}")
    chk(ns.reason is Termination.REACHED_T_END and ns.t_final == pytest.approx(1.0), f"NS: {ns.reason.value} at t={ns.t_final:.4g}")
    heat = np.array([r.heat_besov_minus1 for r in ns.records])
    chk(heat.max() <= 3 * heat[0], f"NS heat B^-1 max/initial = {heat.max() / heat[0]:.3f} <= 3")
    chk(cg_runs["seconds"] < 1200, f"runtime {cg_runs['seconds']:.0f}s < 1200s")


@criterion("9", "norm scaling of the data family")
def test_c9_norm_scaling(chk):
    ratios = []
    for eps in (1e-1, 1e-2, 1e-3):
        spec = CGSpec(eps, 0.5, ProfileSpec((0.6, -0.6, 0.6), 0.3))
        ratios.append(cg_heat_besov_minus1(spec) / (-math.log(eps)) ** 0.2)
    band = max(ratios) / min(ratios)
    chk(band <= 4, "ratios " + ", ".join(f"{r:.4g}" for r in ratios) + f", band {band:.3f} <= 4")


@criterion("10", "energy-inequality failure")
def test_c10_energy(chk):
    lat = make_lattice(2, 64, 1 / 32)
    u = ms_bump(lat, BumpSpec(2, (0.49, -0.49), 0.3, 1.0))
    flux = energy_flux(u)
    chk(flux > 0, f"<Q(u,u), u> = {flux:.3e} > 0")
    rng = np.random.default_rng(10)
    worst = 0.0
    for i in range(100):
        lat = make_lattice(2 + i % 2, 8, rng.uniform(0.1, 1.0))
        v = random_divfree(lat, rng)
        r = rhs_ns(v)
        worst = max(worst, abs(inner(r, v)) / math.sqrt(inner(r, r) * inner(v, v)))
    chk(worst <= 1e-10, f"NS |<rhs, u>| / (|rhs| |u|) <= {worst:.1e} over 100 fields")


@criterion("11", "vorticity toy model")
def test_c11_vorticity(chk):
    t0 = time.perf_counter()
    lat = make_lattice(2, 256, 1 / 32)
    model = ModelSpec("VORTICITY_TOY", 2)
    cfg = StepperConfig(dt=1e-2, t_end=1.0, adaptive=True, record_interval=0.05)
    big = simulate(vorticity_bump(lat, 50.0), model, cfg)
    chk(big.blew_up and big.t_final < 1.0, f"L1 = 50: {big.reason.value} at t={big.t_final:.4g}")
    small = simulate(vorticity_bump(lat, 0.1), model, cfg)
    chk(small.reason is Termination.REACHED_T_END, f"L1 = 0.1: {small.reason.value}")
    secs = time.perf_counter() - t0
    chk(secs < 60, f"runtime {secs:.1f}s < 60s")


@criterion("12", "hyperviscous variant")
def test_c12_hyperviscous(chk):
    run = _blowup_run(2, 256, 1 / 32, (0.6, -0.6), 0.05, 3, model=ModelSpec("TNS_HYPERVISCOUS", 2, alpha=2.0))
    res = run["result"]
    chk(res.blew_up, f"alpha=2: {res.reason.value} at t={res.t_final:.4g}")
    worst = min(res.worst_positivity, min(r.min_fourier / r.sup_fourier for r in res.records))
    chk(worst >= -1e-12, f"min Re u_hat / max |u_hat| = {worst:.2e}")
