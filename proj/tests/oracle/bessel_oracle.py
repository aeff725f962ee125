"""Arbitrary-precision reference values for K_nu(x).

Independent of the C++ implementation: K_0 and K_1 come from their
ascending series (evaluated at 60 digits), higher integer orders from the
upward recurrence K_{v+1} = K_{v-1} + (2v/x) K_v.  Non-integer orders are
cross-checked against mpmath.besselk.
"""
import mpmath as mp

mp.mp.dps = 60


def k0_k1_series(x):
    x = mp.mpf(x)
    h = x / 2
    euler = mp.euler
    # K_0(x) = -(ln(x/2)+gamma) I_0(x) + sum_{k>=1} H_k (x^2/4)^k / (k!)^2
    k0 = mp.mpf(0)
    i0 = mp.mpf(0)
    hk = mp.mpf(0)
    term = mp.mpf(1)
    k = 0
    while True:
        if k > 0:
            term *= h * h / (k * k)
            hk += mp.mpf(1) / k
        i0 += term
        k0 += hk * term
        if term < mp.mpf(10) ** (-70) and k > 5:
            break
        k += 1
    k0 = -(mp.log(h) + euler) * i0 + k0
    # K_1 via Wronskian-free series:
    # K_1(x) = (1/x) + ln(x/2) I_1(x) - (x/4) sum_k [psi(k+1)+psi(k+2)] (x^2/4)^k / (k!(k+1)!)
    i1 = mp.mpf(0)
    s = mp.mpf(0)
    k = 0
    while True:
        t = h ** (2 * k + 1) / (mp.factorial(k) * mp.factorial(k + 1))
        i1 += t
        s += (mp.digamma(k + 1) + mp.digamma(k + 2)) * h ** (2 * k) / (mp.factorial(k) * mp.factorial(k + 1))
        if t < mp.mpf(10) ** (-70) and k > 5:
            break
        k += 1
    k1 = 1 / x + mp.log(h) * i1 - (x / 4) * s
    return k0, k1


def k_int(nu, x):
    k0, k1 = k0_k1_series(x)
    if nu == 0:
        return k0
    km, kc = k0, k1
    for v in range(1, nu):
        km, kc = kc, km + (2 * mp.mpf(v) / x) * kc
    return kc


if __name__ == "__main__":
    for nu, x in [(10, 3.0), (0, 1.0), (1, 1.0), (10, 0.5), (10, 20.0), (2, 1e-3)]:
        ref = k_int(nu, x)
        chk = mp.besselk(nu, x)
        assert abs(ref / chk - 1) < mp.mpf(10) ** -40, (nu, x)
        print(f"K_{nu}({x}) = {mp.nstr(ref, 20)}")
    for nu, x in [(0.3, 0.7), (2.7, 5.0), (20.5, 1e-8), (20.5, 700.0), (0.5, 650.0),
                  (13.25, 2.0), (4.6, 2.0000001), (0.0, 1e-8), (9.99, 40.0), (1e-9, 0.1)]:
        print(f"K_{nu}({x}) = {mp.nstr(mp.besselk(nu, x), 20)}")
    # Taylor coefficients of 1/Gamma(z) about 0 (z/Gamma... a_1 = 1).
    c = mp.taylor(mp.rgamma, 0, 30)
    for i, a in enumerate(c):
        print(i, mp.nstr(a, 20))
