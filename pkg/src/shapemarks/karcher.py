"""Karcher means, joint multiple alignment, and the dispersion normalizer.

The mean of a sample of SRV curves under a symmetry group is computed by the
usual alternation: align every curve to the current mean estimate, then update
the mean as the pointwise average of the aligned curves (renormalized to the
unit sphere when scale is a symmetry, where the renormalized average is the
exact constrained minimizer).  The aligned sample doubles as the set of
template-registered representatives used by the mark-weighted statistics, and
the mean squared residual to the mean is the dispersion normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import TWO_PI, SrvCurve, require_common_grid
from .errors import InvalidInputError
from .registration import (
    Alignment,
    SymmetryGroup,
    align,
    align_near_seed,
    aligned_representative,
)

_MAX_ITER = 15
_REL_TOL = 1e-4


@dataclass
class KarcherResult:
    mean: SrvCurve
    alignments: list[Alignment]
    aligned: list[SrvCurve]
    objective_trace: list[float]
    dispersion: float
    group: SymmetryGroup


def _mean_values(aligned: np.ndarray, group: SymmetryGroup, n: int) -> np.ndarray:
    avg = aligned.mean(axis=0)
    if group.removes_scale:
        nrm = np.sqrt((TWO_PI / n) * np.sum(avg**2))
        if nrm == 0.0:
            raise InvalidInputError("aligned curves average to zero; mean undefined")
        avg = avg / nrm
    return avg


def dispersion(result: KarcherResult) -> float:
    """Mean squared SRV distance of the aligned sample to the mean."""
    n = result.mean.grid_size
    stack = np.stack([q.values for q in result.aligned])
    resid = stack - result.mean.values[None, :, :]
    return float((TWO_PI / n) * np.sum(resid**2) / stack.shape[0])


def karcher_mean(curves: list[SrvCurve], group: SymmetryGroup,
                 max_iter: int = _MAX_ITER, rel_tol: float = _REL_TOL) -> KarcherResult:
    """Karcher mean and joint alignment of a sample of SRV curves.

    Iterates (align all curves to the current mean; update the mean from the
    aligned curves) until the summed squared alignment distance decreases by
    less than ``rel_tol`` relative, or ``max_iter`` iterations.
    """
    if not curves:
        raise InvalidInputError("cannot average an empty set of curves")
    group = SymmetryGroup(group)
    n = require_common_grid(*curves)

    if group.removes_scale:
        prepped = [q.values / np.sqrt((TWO_PI / n) * np.sum(q.values**2)) for q in curves]
    else:
        prepped = [q.values for q in curves]
    stack = np.stack(prepped)

    # deterministic initialization: the input closest to the coordinatewise average
    avg = stack.mean(axis=0)
    start = int(np.argmin(np.sum((stack - avg[None]) ** 2, axis=(1, 2))))
    mean = SrvCurve(stack[start].copy())

    srvs = [SrvCurve(v) for v in prepped]
    trace: list[float] = []
    alignments: list[Alignment] = []
    aligned: list[SrvCurve] = []
    h = TWO_PI / n
    for it in range(max_iter):
        new_alignments: list[Alignment] = []
        new_aligned: list[SrvCurve] = []
        objective = 0.0
        for i, q in enumerate(srvs):
            if it == 0:
                a, dist = align(mean, q, group)
            else:
                a, dist = align_near_seed(mean, q, group, alignments[i].seed)
            energy = dist * dist
            if it > 0:
                # never regress on a curve: the previous alignment re-evaluated
                # against the current mean is always a valid competitor, which
                # makes the objective trace non-increasing by construction
                prev_energy = h * float(np.sum((mean.values - aligned[i].values) ** 2))
                if prev_energy < energy:
                    a = alignments[i]
                    energy = prev_energy
                    new_alignments.append(a)
                    new_aligned.append(aligned[i])
                    objective += energy
                    continue
            new_alignments.append(a)
            new_aligned.append(aligned_representative(q, a, group))
            objective += energy
        alignments = new_alignments
        aligned = new_aligned
        trace.append(objective)
        mean = SrvCurve(_mean_values(np.stack([q.values for q in aligned]), group, n))
        if len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if prev - cur <= rel_tol * max(prev, np.finfo(float).tiny):
                break
        if objective <= 1e-14:
            break

    result = KarcherResult(mean=mean, alignments=alignments, aligned=aligned,
                           objective_trace=trace, dispersion=0.0, group=group)
    result.dispersion = dispersion(result)
    return result
