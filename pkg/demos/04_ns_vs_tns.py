"""Same data, two equations.

The 2-D reduction of the large-data family at eps = 1e-2 is certified for
the toy system, which hits the norm cap almost at once.  Navier-Stokes
from the same data stays bounded over the unit time horizon.
"""

from toyns import CGSpec, ModelSpec, ProfileSpec, StepperConfig, cg_data, certify, make_lattice, simulate

lat = make_lattice(2, 128, 1 / 16)
u0 = cg_data(lat, CGSpec(1e-2, 0.5, ProfileSpec((0.6, -0.08), 0.07, 200.0)))
cert = certify(u0)
print(f"certified: {bool(cert)}, A = {cert.A:.4g}, K_max = {cert.K_max}")

cfg = StepperConfig(dt=1e-3, t_end=1.0, adaptive=True, record_interval=0.1)
for kind in ("TNS", "NS"):
    res = simulate(u0, ModelSpec(kind, 2), cfg)
    heat = [r.heat_besov_minus1 for r in res.records]
    print(f"{kind:>3}: {res.reason.value} at t = {res.t_final:.4g}; heat B^-1 from {heat[0]:.4g} to max {max(heat):.4g}")
