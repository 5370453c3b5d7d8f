"""Design matrices with explicit dummy encoding and rank hygiene.

Categorical blocks expand to indicator columns named "block=category"
with a recorded reference category dropped. After building, degenerate
columns are handled in two tiers: dummy (or caller-marked prunable)
columns that are all-zero or linearly dependent on earlier columns are
pruned with a warning; dependent substantive columns are a hard error
naming the offenders, because silently dropping a regressor the caller
asked for would change the model.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import EstimationError, ValidationError

INTERCEPT = "const"


@dataclass
class DesignMatrix:
    matrix: np.ndarray
    columns: list[str]
    row_index: np.ndarray
    dropped_reference: dict[str, str] = field(default_factory=dict)
    pruned: list[str] = field(default_factory=list)

    @property
    def nobs(self) -> int:
        return self.matrix.shape[0]

    @property
    def nparams(self) -> int:
        return self.matrix.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.columns.index(name)]


def _independent_columns(matrix: np.ndarray, tol: float = 1e-9) -> list[bool]:
    """Left-to-right Gram-Schmidt rank screen; earlier columns win ties."""
    n, k = matrix.shape
    basis = np.empty((n, 0))
    keep = []
    for j in range(k):
        col = matrix[:, j].astype(float)
        scale = np.linalg.norm(col)
        if scale == 0.0:
            keep.append(False)
            continue
        residual = col - basis @ (basis.T @ col)
        # One re-orthogonalization pass keeps the screen honest for
        # nearly dependent columns.
        residual -= basis @ (basis.T @ residual)
        norm = np.linalg.norm(residual)
        if norm > tol * scale:
            basis = np.hstack([basis, (residual / norm)[:, None]])
            keep.append(True)
        else:
            keep.append(False)
    return keep


def build_design(
    frame,
    terms,
    dummies=(),
    *,
    add_intercept: bool = True,
    drop_reference: dict | None = None,
    prunable=(),
) -> DesignMatrix:
    """Assemble [intercept | terms... | dummy blocks...] from a DataFrame.

    `terms` are numeric columns taken as-is; `dummies` are column names
    expanded to indicators with the first (or requested) category
    dropped. `prunable` marks numeric terms that may be silently pruned
    when degenerate (dosage indicators use this).
    """
    n = len(frame)
    if n == 0:
        raise ValidationError("design matrix needs at least one row")
    drop_reference = drop_reference or {}
    names: list[str] = []
    cols: list[np.ndarray] = []
    dummy_names: set[str] = set()
    if add_intercept:
        names.append(INTERCEPT)
        cols.append(np.ones(n))
    for term in terms:
        if term not in frame.columns:
            raise ValidationError(f"design term {term!r} missing from the panel")
        values = frame[term].to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"design term {term!r} has missing values")
        names.append(term)
        cols.append(values)
    dropped: dict[str, str] = {}
    for block in dummies:
        if block not in frame.columns:
            raise ValidationError(f"dummy block {block!r} missing from the panel")
        raw = frame[block].astype(str).to_numpy()
        categories = sorted(set(raw))
        if len(categories) < 2:
            # A single-category block carries no information beyond the
            # intercept; record the reference and move on.
            dropped[block] = categories[0]
            continue
        reference = drop_reference.get(block, categories[0])
        if reference not in categories:
            raise ValidationError(
                f"reference category {reference!r} not present in block {block!r}"
            )
        dropped[block] = reference
        for cat in categories:
            if cat == reference:
                continue
            names.append(f"{block}={cat}")
            dummy_names.add(f"{block}={cat}")
            cols.append((raw == cat).astype(float))

    matrix = np.column_stack(cols)
    prunable = set(prunable) | dummy_names
    keep = _independent_columns(matrix)
    pruned, offenders = [], []
    for name, kept in zip(names, keep):
        if kept:
            continue
        if name in prunable:
            pruned.append(name)
        else:
            offenders.append(name)
    if offenders:
        raise EstimationError(
            "design matrix is rank deficient; collinear terms: "
            + ", ".join(offenders)
        )
    if pruned:
        warnings.warn(f"pruned degenerate design columns: {', '.join(pruned)}")
        mask = np.array(keep)
        matrix = matrix[:, mask]
        names = [name for name, kept in zip(names, keep) if kept]
    index = (
        frame.index.to_numpy() if hasattr(frame, "index") else np.arange(n)
    )
    return DesignMatrix(
        matrix=matrix,
        columns=names,
        row_index=index,
        dropped_reference=dropped,
        pruned=pruned,
    )
