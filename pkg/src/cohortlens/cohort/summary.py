"""Per-attribute summaries: moments for scalars, frequencies otherwise.

Missing values never enter a moment; they are excluded and counted, so
n_used + n_missing always equals the subject count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .records import MISSING, Cohort


@dataclass
class SummaryStats:
    attribute: str
    kind: str
    n_used: int
    n_missing: int
    mean: float | None = None
    sd: float | None = None
    skewness: float | None = None
    kurtosis: float | None = None
    quartiles: tuple[float, float, float] | None = None
    minimum: float | None = None
    maximum: float | None = None
    moments_defined: bool = True
    frequencies: dict[str, int] = field(default_factory=dict)


def _scalar_summary(attr: str, values: np.ndarray, n_missing: int) -> SummaryStats:
    n = len(values)
    if n == 0:
        return SummaryStats(attribute=attr, kind="scalar", n_used=0,
                            n_missing=n_missing, moments_defined=False)
    mean = float(np.mean(values))
    if n > 1:
        sd = float(np.std(values, ddof=1))
    else:
        sd = 0.0
    q1, q2, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
    out = SummaryStats(
        attribute=attr, kind="scalar", n_used=n, n_missing=n_missing,
        mean=mean, sd=sd, quartiles=(q1, q2, q3),
        minimum=float(np.min(values)), maximum=float(np.max(values)),
    )
    # Standardized central moments; undefined for (numerically) constant data.
    centered = values - mean
    m2 = float(np.mean(centered ** 2))
    if n > 2 and m2 > 0 and np.isfinite(m2 ** 2) and m2 ** 2 > 0:
        m3 = float(np.mean(centered ** 3))
        m4 = float(np.mean(centered ** 4))
        out.skewness = m3 / m2 ** 1.5
        out.kurtosis = m4 / m2 ** 2 - 3.0
    else:
        out.moments_defined = False
    return out


def attribute_summary(cohort: Cohort, attr: str) -> SummaryStats:
    """Summary statistics for one attribute.

    Scalars get (n_used, n_missing, mean, sample sd, skewness, excess
    kurtosis, quartiles); nominal/ordinal get a frequency table keyed by
    category label.
    """
    definition = cohort.dictionary[attr]  # KeyError for unknown attribute
    column = cohort.column(attr)
    present = [v for v in column if v is not MISSING]
    n_missing = len(column) - len(present)

    if definition.kind == "scalar":
        return _scalar_summary(attr, np.asarray(present, dtype=float), n_missing)

    freq = {label: 0 for label in definition.categories}
    for v in present:
        freq[definition.categories[int(v)]] += 1
    return SummaryStats(attribute=attr, kind=definition.kind,
                        n_used=len(present), n_missing=n_missing,
                        moments_defined=False, frequencies=freq)
