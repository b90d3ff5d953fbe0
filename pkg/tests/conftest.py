"""Shared fixtures and independent reference solutions.

The oracles here deliberately avoid the package's own solvers: the
homogeneous ensemble is reduced by hand to its two bright collective modes,
whose 2x2 resolvent has a closed form.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from transduce_opt.model import Ensemble, Rates, SamplingSpec, sample_ensemble


def bright_mode_amplitude(n, rates: Rates, omega_drive, omega):
    """Transmission amplitude of a homogeneous ensemble from its two bright modes.

    Only the symmetric microwave and optical excitations couple to the
    channels; they decay at ``kappa = N gamma + Gamma`` and are hybridized by
    the drive, so ``t(w) = N sqrt(g_mu g_opt) W / ((w + i k_mu/2)(w + i k_opt/2) - W^2)``.
    """
    k_mu = n * rates.gamma_mu + rates.Gamma_mu
    k_opt = n * rates.gamma_opt + rates.Gamma_opt
    omega = np.asarray(omega, dtype=float)
    num = n * math.sqrt(rates.gamma_mu * rates.gamma_opt) * omega_drive
    return num / ((omega + 0.5j * k_mu) * (omega + 0.5j * k_opt) - omega_drive**2)


def peak_efficiency_closed_form(n, cooperativity):
    nc = n * cooperativity
    return (nc / (1.0 + nc)) ** 2


def gaussian_input_efficiency(n, rates, omega_drive, center, sigma):
    """``int |t(w)|^2 |a(w)|^2 dw`` for a unit-norm Gaussian pulse.

    ``sigma`` is the width of the amplitude spectrum, so the power spectrum
    ``|a(w)|^2`` is a normal density of standard deviation ``sigma / sqrt(2)``.
    """

    def integrand(w):
        g = math.exp(-(((w - center) / sigma) ** 2)) / (sigma * math.sqrt(math.pi))
        return abs(bright_mode_amplitude(n, rates, omega_drive, w)) ** 2 * g

    val, _ = quad(integrand, center - 12 * sigma, center + 12 * sigma, limit=400, epsabs=1e-13)
    return val


def symmetric(cooperativity, gamma=1.0):
    return Rates(gamma, gamma, gamma / cooperativity, gamma / cooperativity)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def flagship_rates():
    return symmetric(0.1)


@pytest.fixture
def small_random_ensemble():
    def make(n=3, broadening=5.0, seed=0, rates=None):
        return sample_ensemble(n, rates or symmetric(0.1), SamplingSpec(broadening, seed))

    return make


@pytest.fixture
def homogeneous():
    def make(n=10, cooperativity=0.1):
        return Ensemble.homogeneous(n, symmetric(cooperativity))

    return make
