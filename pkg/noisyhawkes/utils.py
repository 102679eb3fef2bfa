from typing import List, Optional

import numpy as np

from .logger import logger


def check_random_state(random_state):
    """
    Turn a seed into a np.random.Generator instance.

    Parameters:
        random_state (None, int, SeedSequence or Generator): If None, return a
            freshly seeded Generator. If int or SeedSequence, return a new PCG64
            Generator built from it. If Generator, return it unchanged.

    Returns:
        Generator: NumPy Generator object
    """
    if random_state is None:
        return np.random.default_rng()
    elif isinstance(random_state, (int, np.integer)) and not isinstance(random_state, bool):
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(random_state))))
    elif isinstance(random_state, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(random_state))
    elif isinstance(random_state, np.random.Generator):
        return random_state
    raise ValueError(
        f"random_state must be None, int, SeedSequence or Generator, got {type(random_state)}"
    )


def derive_seeds(seed, n: int, *key: int) -> List[int]:
    """
    Derive ``n`` independent 64-bit child seeds from a master seed.

    Extra integers in ``key`` (cell index, trial index, ...) are mixed into the
    entropy so any single trial can be replayed from its coordinates. A seed
    of None draws fresh entropy.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if seed is None:
        root = np.random.SeedSequence()
    else:
        root = np.random.SeedSequence([int(seed), *[int(k) for k in key]])
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in root.spawn(n)]


def spectral_radius(alpha) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    if alpha.shape[0] != alpha.shape[1]:
        raise ValueError(f"alpha must be square, got shape {alpha.shape}")
    if alpha.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(alpha))))


def _validate_simulation_params(horizon, burn_in):
    """
    Validates simulation window parameters.

    Raises:
        ValueError: If any parameter is outside its valid range
    """
    if not np.isfinite(horizon) or horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if not np.isfinite(burn_in) or burn_in < 0:
        raise ValueError(f"burn_in must be non-negative, got {burn_in}")


def _validate_hawkes_params(mu, alpha, beta, lambda0, strict: bool = False):
    """
    Validates a parameter tuple of a noisy Hawkes process.

    Parameters:
        mu (ndarray): Baselines, shape (d,)
        alpha (ndarray): Interaction weights, shape (d, d)
        beta (ndarray): Decay rates, shape (d,)
        lambda0 (float): Poisson noise intensity
        strict (bool): Require mu > 0 (estimation setting) instead of mu >= 0.

    Raises:
        ValueError: If shapes disagree or a constraint is violated
    """
    d = mu.shape[0]
    if d < 1:
        raise ValueError("mu must contain at least one component")
    if alpha.shape != (d, d):
        raise ValueError(f"alpha must have shape ({d}, {d}), got {alpha.shape}")
    if beta.shape != (d,):
        raise ValueError(f"beta must have shape ({d},), got {beta.shape}")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
        raise ValueError("parameters must be finite")
    if strict and np.any(mu <= 0):
        raise ValueError(f"mu must be positive, got {mu.tolist()}")
    if np.any(mu < 0):
        raise ValueError(f"mu must be non-negative, got {mu.tolist()}")
    if np.any(alpha < 0):
        raise ValueError(f"alpha must be non-negative, got {alpha.tolist()}")
    if np.any(beta <= 0):
        raise ValueError(f"beta must be positive, got {beta.tolist()}")
    if not np.isfinite(lambda0) or lambda0 < 0:
        raise ValueError(f"lambda0 must be non-negative, got {lambda0}")


def _validate_stationary(alpha, margin: float = 0.0):
    rho = spectral_radius(alpha)
    if rho >= 1.0 - margin:
        logger.error(f"Non-stationary interaction matrix, spectral radius {rho:.6g}")
        raise ValueError(f"spectral radius of alpha must be < 1, got {rho:.6g}")
    return rho


def _validate_quantile_params(quantile_level, null_threshold, correction: Optional[str]):
    """
    Validates support-detection parameters.

    Raises:
        ValueError: If any parameter is outside its valid range
    """
    if not 0 < quantile_level < 1:
        raise ValueError(f"quantile_level must be between 0 and 1, got {quantile_level}")
    if null_threshold < 0:
        raise ValueError(f"null_threshold must be non-negative, got {null_threshold}")
    if correction not in (None, "bonferroni", "bh"):
        raise ValueError(f"correction must be None, 'bonferroni' or 'bh', got {correction}")
