"""Closed-form spectral quantities of the expected observation matrices.

``iHbar`` has eigenpairs ``(sigma_bar, phi_bar)`` and ``(-sigma_bar, conj(phi_bar))``;
``i Dbar^{-1} Hbar`` has top eigenpair ``(xi_bar, psi_bar)``. Both vectors are
returned in the phase convention where the real part is centred (orthogonal
to the all-ones vector) and the imaginary part points along ``-1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantScores, ZeroExpectedDegree
from .model import EroParams, GroundTruth, expected_degree


@dataclass(frozen=True)
class PopulationSpectrum:
    sigma_bar: float
    xi_bar: float
    alpha: float
    gamma: float
    lambda_param: float
    snr: float
    phi_bar: np.ndarray
    psi_bar: np.ndarray
    d_bar: np.ndarray

    @property
    def x_bar_unnorm(self) -> np.ndarray:
        return self.phi_bar.real

    @property
    def x_bar_norm(self) -> np.ndarray:
        return self.psi_bar.real

    @property
    def normalized_reference(self) -> np.ndarray:
        """``Dbar * Re(psi_bar)``, which is parallel to ``r - gamma``."""
        return self.d_bar * self.psi_bar.real

    @property
    def phi_bar_minus(self) -> np.ndarray:
        return np.conj(self.phi_bar)

    def to_dict(self) -> dict:
        return {
            "sigma_bar": self.sigma_bar,
            "xi_bar": self.xi_bar,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "lambda": self.lambda_param,
            "snr": self.snr,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def snr(gt: GroundTruth, params: EroParams) -> float:
    n = gt.n
    r = gt.scores
    spread = np.linalg.norm(r - r.mean())
    return float(math.sqrt(params.eta**2 * params.p * n / math.log(n)) * spread / (math.sqrt(n) * gt.bound))


def eta_for_snr(gt: GroundTruth, p: float, target: float) -> float:
    """The corruption level that puts ``(eta, p)`` on the iso-SNR curve ``target``."""
    n = gt.n
    r = gt.scores
    spread = np.linalg.norm(r - r.mean())
    return float(target / (math.sqrt(p * n / math.log(n)) * spread / (math.sqrt(n) * gt.bound)))


def lambda_param(gt: GroundTruth, params: EroParams, d_bar=None) -> float:
    if d_bar is None:
        d_bar = expected_degree(gt, params)
    return float(d_bar.min() / (params.p * gt.n * gt.bound))


def population_spectrum(gt: GroundTruth, params: EroParams) -> PopulationSpectrum:
    r = gt.scores
    n = r.size
    ones = np.ones(n)
    alpha = float(r.mean())
    centred = r - alpha
    spread = float(np.linalg.norm(centred))
    if spread == 0.0 or spread <= 1e-14 * max(1.0, float(np.abs(r).max())) * math.sqrt(n):
        raise ConstantScores("scores are constant; the expected matrix is zero")

    ep = params.eta * params.p
    sigma_bar = ep * math.sqrt(n) * spread
    phi_bar = (centred / spread - 1j * ones / math.sqrt(n)) / math.sqrt(2)

    d_bar = expected_degree(gt, params)
    if np.any(d_bar <= 0):
        i = int(np.argmin(d_bar))
        raise ZeroExpectedDegree(f"expected degree of item {i} is zero")
    inv_d = 1.0 / d_bar
    gamma = float((r * inv_d).sum() / inv_d.sum())
    s = 1.0 / np.sqrt(d_bar)
    a = s * (r - gamma)     # Dbar^{-1/2}(r - gamma 1)
    b = s * ones            # Dbar^{-1/2} 1
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    xi_bar = float(ep * na * nb)
    # top eigenvector of i Dbar^{-1/2} Hbar Dbar^{-1/2}, mapped back by Dbar^{-1/2}
    phi_sym = (a / na - 1j * b / nb) / math.sqrt(2)
    psi = s * phi_sym
    psi_bar = psi / np.linalg.norm(psi)

    return PopulationSpectrum(
        sigma_bar=float(sigma_bar),
        xi_bar=xi_bar,
        alpha=alpha,
        gamma=gamma,
        lambda_param=lambda_param(gt, params, d_bar),
        snr=snr(gt, params),
        phi_bar=phi_bar,
        psi_bar=psi_bar,
        d_bar=d_bar,
    )


def expected_matrix(gt: GroundTruth, params: EroParams) -> np.ndarray:
    r = gt.scores
    return params.eta * params.p * (r[:, None] - r[None, :])


def verify_population_eigenpair(spec: PopulationSpectrum, gt: GroundTruth, params: EroParams) -> dict:
    """Residuals of the closed-form eigenpairs against explicitly assembled operators."""
    Hbar = expected_matrix(gt, params)
    res_u = np.linalg.norm(1j * (Hbar @ spec.phi_bar) - spec.sigma_bar * spec.phi_bar)
    HL = Hbar / spec.d_bar[:, None]
    res_n = np.linalg.norm(1j * (HL @ spec.psi_bar) - spec.xi_bar * spec.psi_bar)
    return {
        "unnormalized": float(res_u),
        "normalized": float(res_n),
        "unnormalized_ok": bool(res_u < 1e-8 * spec.sigma_bar),
        "normalized_ok": bool(res_n < 1e-8 * spec.xi_bar),
    }
