"""Smoke test for the agelab extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

import math

import agelab


def main():
    k = agelab.BirthKernel.shifted_gamma(1.0, 1.0, 2, 1.0)
    assert abs(k.laplace(0.0) - 1.0) < 1e-14
    assert k.reproductive_horizon() == math.inf

    alpha = 5.0
    u_bar0, ubar = agelab.positive_equilibrium(alpha, 1.0, 0.01, 30.0)
    assert u_bar0 == math.log(alpha)
    u0 = [0.5 * v for v in ubar]
    tr = agelab.simulate(alpha, k, u0, 0.01, 0.01, 200.0)
    err = abs(tr.birth[-1] - u_bar0)
    v = [x for x in agelab.lyapunov_series(tr, k, u_bar0) if x is not None]
    increase = max(b - a - 1e-6 * (1 + a) for a, b in zip(v, v[1:]))
    print(f"simulate: |b(T) - ln alpha| = {err:.2e}, max Lyapunov increase = {increase:.2e}")
    assert err < 1e-3 and increase <= 0.0

    lam = agelab.dominant_eigenvalue(math.e ** 2, agelab.BirthKernel.shifted_gamma(1.0, 0.0, 0, 1.0))
    print(f"dominant eigenvalue (m = e^2): {lam:.15f}")
    assert abs(lam - 1.207940031569323) < 1e-12

    for hp in agelab.hopf_locus(2, 1.0, 0.0, 0, 1.0):
        print(hp)
    hp0 = agelab.hopf_point(0, 1.0, 0.0, 0, 1.0)
    assert abs(hp0.omega - 2.0287578381104342) < 1e-10 and hp0.transversality_re > 0

    orbit = agelab.ricker_orbit(math.e, 0.3, 10_000)
    assert abs(orbit[-1] - 1.0) < 1e-8
    print("smoke test passed")


if __name__ == "__main__":
    main()
