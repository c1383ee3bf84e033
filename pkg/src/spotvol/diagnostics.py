"""Chain convergence diagnostics: split R-hat and effective sample size."""

from __future__ import annotations

import numpy as np

from .errors import TooFewDraws


def _split_chains(chains: np.ndarray) -> np.ndarray:
    """(m, n, ...) -> (2m, n // 2, ...), dropping one draw when n is odd."""
    m, n = chains.shape[0], chains.shape[1]
    half = n // 2
    first = chains[:, :half]
    second = chains[:, n - half:]
    return np.concatenate([first, second], axis=0)


def split_rhat(chains: np.ndarray):
    """Split R-hat per parameter.

    Parameters
    ----------
    chains : ndarray, shape (n_chains, n_draws) or (n_chains, n_draws, n_params)

    Returns
    -------
    rhat : ndarray
        One value per parameter, >= 1 up to floating error. Chains with
        zero total variance report 1.0.
    zero_variance : ndarray of bool
        Flags parameters where every split sequence was constant.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim == 2:
        chains = chains[..., None]
    if chains.shape[0] < 2:
        raise TooFewDraws("need at least 2 chains")
    if chains.shape[1] < 4:
        raise TooFewDraws("need at least 4 draws per chain")

    seqs = _split_chains(chains)           # (2m, n', p)
    n = seqs.shape[1]
    means = seqs.mean(axis=1)              # (2m, p)
    variances = seqs.var(axis=1, ddof=1)   # (2m, p)
    w = variances.mean(axis=0)             # (p,)
    b_over_n = means.var(axis=0, ddof=1)   # B / n'
    var_plus = (n - 1) / n * w + b_over_n

    zero = w <= 0
    rhat = np.ones(chains.shape[2])
    ok = ~zero
    rhat[ok] = np.sqrt(var_plus[ok] / w[ok])
    return rhat, zero


def ess(chains: np.ndarray) -> np.ndarray:
    """Effective sample size per parameter (Geyer initial monotone sequence).

    Autocorrelations are estimated per chain by FFT, combined across chains
    with the usual between/within variance weighting, then paired sums are
    truncated at the first negative pair and forced monotone.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim == 2:
        chains = chains[..., None]
    m, n, p = chains.shape
    if m < 2 or n < 4:
        raise TooFewDraws("need >= 2 chains and >= 4 draws for ess")

    out = np.empty(p)
    for j in range(p):
        x = chains[:, :, j]
        chain_var = x.var(axis=1, ddof=1)
        w = chain_var.mean()
        if w <= 0:
            out[j] = float(m * n)
            continue
        var_plus = (n - 1) / n * w + x.mean(axis=1).var(ddof=1)

        centered = x - x.mean(axis=1, keepdims=True)
        nfft = 1 << int(np.ceil(np.log2(2 * n)))
        f = np.fft.rfft(centered, nfft, axis=1)
        acov = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n].real / n

        rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
        rho[0] = 1.0

        tau = 1.0
        prev_pair = None
        t = 1
        while t + 1 < n:
            pair = rho[t] + rho[t + 1]
            if pair < 0:
                break
            if prev_pair is not None:
                pair = min(pair, prev_pair)
            tau += 2.0 * pair
            prev_pair = pair
            t += 2
        out[j] = min(float(m * n), m * n / tau)
    return out
