"""Reference pole table for the unit-constant beam (N = 4, S_y = 1/2, Q = I, R = I).

Values are the upper-half-plane members of each conjugate pair, already
multiplied by the table's common factor of 100.  The table is known to
contain printing defects (a doubled ``i``, a missing ``i`` and an
out-of-order entry), so comparisons against it are diagnostic only.

The open-loop entries agree to table precision with computed frequencies
divided by ``sqrt(mu I_y - S_y^2)``; the diagnostics report that rescaled
comparison alongside the direct one.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

_SCALE = 1e2

REFERENCE_OPEN_LOOP = _SCALE * np.array(
    [0.0361j, 0.2067j, 0.0724j, 0.1087j, 0.1450j, 0.0665j, 1.3914j, 2.3784j]
)
REFERENCE_CLOSED_LOOP = _SCALE * np.array(
    [
        -0.0114 + 0.0350j,
        -0.0165 + 0.2051j,
        -0.0185 + 0.0724j,
        -0.0278 + 0.1087j,
        -0.0296 + 0.1325j,
        -0.0429 + 0.6672j,
        -0.0652 + 1.3911j,
        -0.0874 + 2.3700j,
    ]
)


def _match(computed, reference):
    upper = np.asarray(computed, dtype=complex)
    upper = upper[upper.imag > 0]
    # concave cost on the frequency log-ratio: one misprinted entry absorbs a
    # single large mismatch instead of shifting the whole pairing
    cost = np.sqrt(np.abs(np.log(upper.imag[:, None] / reference.imag[None, :])))
    r, c = linear_sum_assignment(cost)
    pairs = sorted(zip(c, r))
    return [(reference[ci], upper[ri]) for ci, ri in pairs]


def compare_pole_table(open_loop, closed_loop, inertia_det: float = 0.75) -> list[dict]:
    """Pair computed poles with the reference table by minimum total distance.

    Returns one row per reference entry with absolute and relative deviations,
    plus the relative imaginary-part deviation after dividing computed values
    by ``sqrt(inertia_det)``.
    """
    rows = []
    scale = 1.0 / np.sqrt(inertia_det)
    for loop, comp, ref in (("open", open_loop, REFERENCE_OPEN_LOOP), ("closed", closed_loop, REFERENCE_CLOSED_LOOP)):
        scaled = dict(_match(np.asarray(comp) * scale, ref))
        for k, (r, c) in enumerate(_match(comp, ref)):
            cs = scaled[r]
            rows.append(
                dict(
                    loop=loop,
                    row=k + 1,
                    reference_re=r.real,
                    reference_im=r.imag,
                    computed_re=c.real,
                    computed_im=c.imag,
                    abs_diff=abs(c - r),
                    rel_diff_im=abs(c.imag - r.imag) / abs(r.imag),
                    scaled_im=cs.imag,
                    scaled_rel_diff_im=abs(cs.imag - r.imag) / abs(r.imag),
                )
            )
    return rows
