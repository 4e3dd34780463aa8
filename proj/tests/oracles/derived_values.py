"""High-precision evaluation of the closed-form values frozen into tests."""
from mpmath import mp, mpf, log, sqrt, exp, e

mp.dps = 40


def kl(p, q):
    return sum(pi * log(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def robustness(n, beta, m, c_m, eps, mu):
    n, beta, c_m, eps, mu = map(mpf, (n, beta, c_m, eps, mu))
    tau = log((1 / beta) * (e * (n + m) / m) ** m) / n
    h = sqrt(3 * tau / c_m)
    drift_up = (1 + eps) * exp(h) - 1
    drift_down = 1 - (1 - eps) * exp(-h)
    return tau, h, max(drift_up, drift_down), mu + 4 * sqrt(2 * tau)


if __name__ == "__main__":
    print("kl((0.5,0.5),(0.25,0.75)) =", kl([mpf("0.5")] * 2,
                                          [mpf("0.25"), mpf("0.75")]))
    for n in (1000, 10000, 100000):
        tau, h, eps_drift, mu_drift = robustness(n, "0.05", 8, "0.1", "0.1",
                                                 "0.02")
        print(f"n={n}: tau={tau} h={h} eps_drift={eps_drift} "
              f"mu_drift={mu_drift}")
    print("g(0.03, 0.1) =", sqrt(3 * mpf("0.03") / mpf("0.1")))
    print("P_c for [[0.4,0.1],[0.2,0.3]] =", max(mpf("0.4"), mpf("0.2")) +
          max(mpf("0.1"), mpf("0.3")))
