"""Plain-text regression tables and flat records for serialization."""
from __future__ import annotations

from .heckman import HeckmanResult
from .linear import FitResult

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def stars(pvalue: float) -> str:
    """Significance marker from a two-sided p-value."""
    for cutoff, marker in STAR_LEVELS:
        if pvalue < cutoff:
            return marker
    return ""


def _outcome_fit(result):
    return result.outcome if isinstance(result, HeckmanResult) else result


def _cell(fit: FitResult, name: str) -> tuple[str, str]:
    if name not in fit.columns:
        return "", ""
    coef = fit.coef(name)
    se = fit.se_of(name)
    marker = stars(fit.pvalue_of(name))
    return f"{coef:.4f}{marker}", f"({se:.4f})"


def render_table(results: dict, *, title: str = "", max_fe_note: bool = True) -> str:
    """Side-by-side coefficient table over named result columns.

    results maps column label -> FitResult or HeckmanResult. Fixed-effect
    dummy columns are collapsed into Yes/No footer rows.
    """
    fits = {label: _outcome_fit(res) for label, res in results.items()}
    term_order: list[str] = []
    fe_blocks: set[str] = set()
    for fit in fits.values():
        for name in fit.columns:
            if "=" in name:
                fe_blocks.add(name.partition("=")[0])
            elif name not in term_order:
                term_order.append(name)
    if "const" in term_order:
        term_order.remove("const")
        term_order.append("const")

    labels = list(fits)
    width = max(18, *(len(label) + 2 for label in labels))
    name_width = max(len(t) for t in term_order) + 2
    lines = []
    if title:
        lines.append(title)
    lines.append("=" * (name_width + width * len(labels)))
    lines.append(
        "".join([" " * name_width] + [label.rjust(width) for label in labels])
    )
    lines.append("-" * (name_width + width * len(labels)))
    for term in term_order:
        coefs, ses = [], []
        for fit in fits.values():
            c, s = _cell(fit, term)
            coefs.append(c.rjust(width))
            ses.append(s.rjust(width))
        lines.append(term.ljust(name_width) + "".join(coefs))
        lines.append(" " * name_width + "".join(ses))
    if max_fe_note and fe_blocks:
        for block in sorted(fe_blocks):
            row = [f"{block} FE".ljust(name_width)]
            for fit in fits.values():
                has = any(n.startswith(f"{block}=") for n in fit.columns)
                row.append(("Yes" if has else "No").rjust(width))
            lines.append("".join(row))
    lines.append("-" * (name_width + width * len(labels)))
    nobs_row = ["N".ljust(name_width)]
    ll_row = ["log-likelihood".ljust(name_width)]
    for label, res in results.items():
        fit = fits[label]
        nobs_row.append(str(fit.nobs).rjust(width))
        ll = res.loglik if isinstance(res, HeckmanResult) else fit.loglik
        ll_row.append(f"{ll:.2f}".rjust(width))
    lines.append("".join(nobs_row))
    lines.append("".join(ll_row))
    lines.append("=" * (name_width + width * len(labels)))
    lines.append("standard errors in parentheses; * p<0.05 ** p<0.01 *** p<0.001")
    return "\n".join(lines) + "\n"


def results_records(results: dict) -> list[dict]:
    """Flatten named results into one record per coefficient."""
    records = []
    for label, res in results.items():
        fit = _outcome_fit(res)
        for name in fit.columns:
            records.append(
                {
                    "model": label,
                    "method": fit.method,
                    "term": name,
                    "coef": fit.coef(name),
                    "se": fit.se_of(name),
                    "pvalue": fit.pvalue_of(name),
                    "nobs": fit.nobs,
                }
            )
        if isinstance(res, HeckmanResult):
            records.append(
                {
                    "model": label,
                    "method": "heckman_two_step",
                    "term": "rho",
                    "coef": res.rho,
                    "se": float("nan"),
                    "pvalue": float("nan"),
                    "nobs": res.nobs_total,
                }
            )
            records.append(
                {
                    "model": label,
                    "method": "heckman_two_step",
                    "term": "sigma",
                    "coef": res.sigma,
                    "se": float("nan"),
                    "pvalue": float("nan"),
                    "nobs": res.nobs_total,
                }
            )
    return records
