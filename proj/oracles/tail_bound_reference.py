"""Arbitrary-precision reference values for the closed-form tail bounds in
include/sdde/drift_bounds.hpp. Run with python3; values are frozen into
tests/test_drift_bounds.cpp as regression goldens."""

import mpmath as mp

mp.mp.dps = 40


def brownian_reverse_sup(alpha, beta, R):
    b2 = beta * beta
    return 4 * mp.e**(-R * R / (64 * b2)) + \
        4 * mp.e**(-alpha * R / (64 * b2)) / (1 - mp.e**(-alpha * alpha / (128 * b2)))


def brownian_interval_sup(beta, T, R):
    return 2 * mp.e**(-R * R / (16 * beta * beta * T))


def split_rate(kappa, lam, zeta, beta, q):
    # equal-split form: (lam / kappa) * (exp(kappa * zeta * beta / q) - 1)
    return (lam / kappa) * (mp.e**(kappa * zeta * beta / q) - 1)


def solve_kappa1(alpha, beta, zeta, lam, q):
    lo, hi = mp.mpf("1e-12"), mp.mpf(1)
    while split_rate(hi, lam, zeta, beta, q) <= alpha:
        hi *= 2
    for _ in range(400):
        mid = (lo + hi) / 2
        if split_rate(mid, lam, zeta, beta, q) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def levy_reverse_sup(alpha, beta, sigma, kappa1, R):
    d = beta * beta * sigma * sigma
    return 4 * mp.e**(-R * R / (256 * d)) + \
        4 * mp.e**(-alpha * R / (256 * d)) / (1 - mp.e**(-alpha * alpha / (512 * d))) + \
        mp.e**(-kappa1 * R)


def levy_interval_sup(beta, sigma, T, lam, zeta, kappa2, R0, R):
    C = mp.e**(4 * kappa2 * lam * zeta * beta * T) * \
        mp.e**(lam * T * (mp.e**(4 * kappa2 * zeta * beta) - 1))
    ind = 1 if R < R0 else 0
    return 2 * mp.e**(-R * R / (64 * beta * beta * sigma * sigma * T)) + \
        C * mp.e**(-kappa2 * R) + ind


def d1_reverse_sup(alpha, beta1, R):
    b2 = beta1 * beta1
    return 2 * mp.e**(-R * R / (8 * b2)) + \
        2 * mp.e**(-alpha * R / (8 * b2)) / (1 - mp.e**(-alpha * alpha / (16 * b2)))


def show(name, value):
    print(f"{name} = {mp.nstr(value, 20)}")


show("brownian_reverse_sup(1, 1, 64)", brownian_reverse_sup(1, 1, 64))
show("brownian_reverse_sup(2, 0.5, 8)", brownian_reverse_sup(2, mp.mpf("0.5"), 8))
show("brownian_interval_sup(1, 1, 4)", brownian_interval_sup(1, 1, 4))
show("brownian_interval_sup(0.7, 25, 10)", brownian_interval_sup(mp.mpf("0.7"), 25, 10))

k_half = solve_kappa1(4, 1, 1, 1, mp.mpf("0.5"))
show("solve_kappa1(alpha=4, beta=1, zeta=1, lam=1, q=1/2)", k_half)
show("  split_rate at kappa1", split_rate(k_half, 1, 1, 1, mp.mpf("0.5")))
k_lim = solve_kappa1(4, 1, 1, 1, 1 - mp.mpf("1e-3"))
show("solve_kappa1(alpha=4, beta=1, zeta=1, lam=1, q=1-1e-3)", k_lim)

show("levy_reverse_sup(alpha=4, beta=1, sigma=1, kappa1=k_half, R=32)",
     levy_reverse_sup(4, 1, 1, k_half, 32))

show("levy_interval_sup(beta=1, sigma=1, T=5, lam=0.5, zeta=0.2, kappa2=1, R0=0, R=15)",
     levy_interval_sup(1, 1, 5, mp.mpf("0.5"), mp.mpf("0.2"), 1, 0, 15))
show("levy_interval_sup same cell at R=2 with R0=3 (indicator active)",
     levy_interval_sup(1, 1, 5, mp.mpf("0.5"), mp.mpf("0.2"), 1, 3, 2))

show("d1_reverse_sup(1, 1, 16)", d1_reverse_sup(1, 1, 16))
show("d1_reverse_sup(3, 2, 10)", d1_reverse_sup(3, 2, 10))

# reflection-principle reference for the interval-sup Monte Carlo example:
# P(sup_{[0,1]} W >= 3) = 2 P(W(1) >= 3) = erfc(3 / sqrt(2))
show("reflection 2*Phi_bar(3)", mp.erfc(3 / mp.sqrt(2)))
