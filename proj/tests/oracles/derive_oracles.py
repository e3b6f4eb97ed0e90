"""Independent numerical oracles for values frozen into the C++ unit tests.

Every value is computed here by direct quadrature or by exhaustive enumeration,
without using the library, and printed with 17 significant digits.
"""
import itertools
import math

import numpy as np
from scipy import integrate


def normal_pdf(x, m, v):
    return math.exp(-0.5 * (x - m) ** 2 / v) / math.sqrt(2 * math.pi * v)


def show(name, value):
    print(f"{name} = {value:.17g}")


# Fractional power of N(0,1) with exponent 0.5: the scale is the integral of the powered density.
scale, _ = integrate.quad(lambda x: normal_pdf(x, 0, 1) ** 0.5, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-14)
show("power_scale_1d_half", scale)

# Normalizer of N(0,1)^0.5 N(2,1)^0.5 and the fused mean/variance.
eta, _ = integrate.quad(lambda x: math.sqrt(normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1)), -np.inf, np.inf,
                        epsabs=1e-14, epsrel=1e-14)
m1, _ = integrate.quad(lambda x: x * math.sqrt(normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1)), -np.inf, np.inf,
                       epsabs=1e-14, epsrel=1e-14)
m2, _ = integrate.quad(lambda x: x * x * math.sqrt(normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1)), -np.inf, np.inf,
                       epsabs=1e-14, epsrel=1e-14)
show("gci_eta_0_2", eta)
show("gci_mean_0_2", m1 / eta)
show("gci_var_0_2", m2 / eta - (m1 / eta) ** 2)

# Posterior position variance of a prior variance 900 observed with variance 625.
show("posterior_position_variance", 1.0 / (1.0 / 900.0 + 1.0 / 625.0))


def single_track_update(r, pd, q, kappa):
    """Exhaustive enumeration over the two association hypotheses of one track and one measurement."""
    hyps = {
        "miss": (1 - r * pd),          # track not detected (or absent); measurement is clutter
        "detect": r * pd * q / kappa,  # track detected by the measurement
    }
    total = sum(hyps.values())
    exist_given_miss = r * (1 - pd) / (1 - r * pd)
    r_post = (hyps["detect"] + hyps["miss"] * exist_given_miss) / total
    assoc = hyps["detect"] / total
    return r_post, assoc


show("miss_only_existence", single_track_update(0.5, 0.99, 0.0, 1.0)[0])
# Track r = 0.9, position variance 25, measurement noise 25^2, clutter 10 over 1000 x 1000 m.
S = 25.0 + 625.0
q = 1.0 / (2 * math.pi * S)
r_post, assoc = single_track_update(0.9, 0.99, q, 10.0 / 1e6)
show("one_track_existence", r_post)
show("one_track_association", assoc)

# Adaptive birth shares with association probabilities (0, 0.5).
shares = [1.0, 0.5]
show("adaptive_birth_second", min(0.3, shares[1] / sum(shares) * 0.8))

# Two single-Bernoulli MBs with r = 0.8 and identical densities, equal weights.
w_empty = math.sqrt(0.2 * 0.2)
w_one = math.sqrt(0.8 * 0.8) * 1.0
show("fused_r_identical", w_one / (w_empty + w_one))

# Two sensors with r = 0.9 and r = 0.6 for the same single object (identical densities), equal weights.
w_empty = math.sqrt(0.1 * 0.4)
w_one = math.sqrt(0.9 * 0.6)
show("fused_r_09_06", w_one / (w_empty + w_one))

# Two r = 0.9 Bernoullis with unit-variance densities 0.5 apart, equal weights.
eta_shift, _ = integrate.quad(lambda x: math.sqrt(normal_pdf(x, 0, 1) * normal_pdf(x, 0.5, 1)), -np.inf, np.inf,
                              epsabs=1e-14, epsrel=1e-14)
show("fused_r_shifted", 0.9 * eta_shift / (0.1 + 0.9 * eta_shift))

# GCI divergence of two certain objects with cell densities (1/2, 1/2) and (1, 0) on unit cells.
c = sum(math.sqrt(a * b) for a, b in zip([0.5, 0.5], [1.0, 0.0]))
show("divergence_half_overlap", -math.log(c))

# Threshold of the labeled yes-object probability for P_y = 0.999 and target 0.5.
show("threshold_ln500", math.log(500.0))

# Labeled yes-object probability given d_G and unlabeled yes-object probability.
show("labeled_yes_dG1_py09", 1 - math.exp(1.0) * (1 - 0.9))


def brute_ospa(X, Y, c, p):
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        cost = sum(min(c, math.dist(X[i], Y[perm[i]])) ** p for i in range(m))
        best = min(best, cost)
    return ((best + c ** p * (n - m)) / n) ** (1 / p)


show("ospa_fixture", brute_ospa([(0, 0), (50, -20)], [(30, 0)], 100.0, 1.0))
show("ospa_fixture_p2", brute_ospa([(0, 0), (50, -20), (400, 400)], [(30, 0), (10, 10)], 100.0, 2.0))
