"""From initial data to a blow-up certificate.

A smooth bump in the sector with Fourier L1 norm A = 2 A* yields a seed
on {|xi_i| >= 1/2, |xi| <= 1}.  Its convolution powers carry the lower
envelope at the times t_k, and the growth factor A e^(-t_inf) / 16 > 1
makes the envelope diverge with k.
"""

from toyns import BumpSpec, besov_lower_bound, certify, make_lattice, ms_bump, threshold_amplitude, validate_admissibility

lat = make_lattice(2, 256, 1 / 32)
A = 2 * threshold_amplitude()
u0 = ms_bump(lat, BumpSpec(2, (0.6, -0.6), 0.05, A))
print(validate_admissibility(u0).to_text())
print()

cert = certify(u0)
print(cert.to_text())
print()
print(f"{'k':>2} {'t_k':>10} {'support':>8} {'|w^k|_1':>12} {'q_jj/2^k':>10}")
for row in cert.table():
    print(f"{row['k']:>2} {row['t_k']:>10.6f} {row['support_size']:>8} {row['w_l1']:>12.4e} {row['min_q_jj_over_2k']:>10.4f}")
print()
for s in (-1.0, 0.0):
    bounds = ", ".join(f"{besov_lower_bound(cert, s, k):.4g}" for k in range(cert.K_max + 1))
    print(f"B^{s:g}_inf,inf lower bounds for k = 0..{cert.K_max}: {bounds}")

print()
print(certify(ms_bump(lat, BumpSpec(2, (0.6, -0.6), 0.05, 1.0))).to_text())
