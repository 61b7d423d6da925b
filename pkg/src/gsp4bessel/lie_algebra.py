"""Bases of sp(4), its complexification, brackets and the structure table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotInAlgebra

REAL_TAGS = ("H1", "H2", "F", "G", "R", "Rp", "P", "Pp", "Q", "Qp")
COMPLEX_TAGS = (
    "Z", "Zp", "Nplus", "Nminus", "Xplus", "Xminus",
    "P1plus", "P1minus", "P0plus", "P0minus",
)
K_TAGS = ("Z", "Zp", "Nplus", "Nminus")
P_PLUS_TAGS = ("Xplus", "P1plus", "P0plus")
P_MINUS_TAGS = ("Xminus", "P1minus", "P0minus")


def _unit(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[i - 1, j - 1] = 1.0
    return m


def _build() -> dict[str, np.ndarray]:
    E = _unit
    i = 1j
    mats = {
        "H1": E(1, 1) - E(3, 3),
        "H2": E(2, 2) - E(4, 4),
        "F": E(1, 3),
        "G": E(3, 1),
        "R": E(2, 4),
        "Rp": E(4, 2),
        "P": E(2, 1) - E(3, 4),
        "Pp": E(1, 2) - E(4, 3),
        "Q": E(1, 4) + E(2, 3),
        "Qp": E(3, 2) + E(4, 1),
        "Z": -i * (E(1, 3) - E(3, 1)),
        "Zp": -i * (E(2, 4) - E(4, 2)),
    }
    for sign, suffix in ((1, "plus"), (-1, "minus")):
        si = sign * i
        mats["N" + suffix] = 0.5 * np.array(
            [[0, 1, 0, -si], [-1, 0, -si, 0], [0, si, 0, 1], [si, 0, -1, 0]], dtype=complex
        )
        mats["X" + suffix] = 0.5 * np.array(
            [[1, 0, si, 0], [0, 0, 0, 0], [si, 0, -1, 0], [0, 0, 0, 0]], dtype=complex
        )
        mats["P1" + suffix] = 0.5 * np.array(
            [[0, 1, 0, si], [1, 0, si, 0], [0, si, 0, -1], [si, 0, -1, 0]], dtype=complex
        )
        mats["P0" + suffix] = 0.5 * np.array(
            [[0, 0, 0, 0], [0, 1, 0, si], [0, 0, 0, 0], [0, si, 0, -1]], dtype=complex
        )
    for m in mats.values():
        m.setflags(write=False)
    return mats


_MATRICES = _build()

# Bracket [row, column] as a formal combination of complex basis tags.
_T = COMPLEX_TAGS
_TABLE_ROWS: dict[str, list[dict[str, float]]] = {
    "Z": [{}, {}, {"Nplus": 1}, {"Nminus": -1}, {"Xplus": 2}, {"Xminus": -2},
          {"P1plus": 1}, {"P1minus": -1}, {}, {}],
    "Zp": [{}, {}, {"Nplus": -1}, {"Nminus": 1}, {}, {},
           {"P1plus": 1}, {"P1minus": -1}, {"P0plus": 2}, {"P0minus": -2}],
    "Nplus": [{"Nplus": -1}, {"Nplus": 1}, {}, {"Zp": 1, "Z": -1}, {}, {"P1minus": -1},
              {"Xplus": 2}, {"P0minus": -2}, {"P1plus": 1}, {}],
    "Nminus": [{"Nminus": 1}, {"Nminus": -1}, {"Z": 1, "Zp": -1}, {}, {"P1plus": -1}, {},
               {"P0plus": -2}, {"Xminus": 2}, {}, {"P1minus": 1}],
    "Xplus": [{"Xplus": -2}, {}, {}, {"P1plus": 1}, {}, {"Z": 1},
              {}, {"Nplus": 1}, {}, {}],
    "Xminus": [{"Xminus": 2}, {}, {"P1minus": 1}, {}, {"Z": -1}, {},
               {"Nminus": 1}, {}, {}, {}],
    "P1plus": [{"P1plus": -1}, {"P1plus": -1}, {"Xplus": -2}, {"P0plus": 2}, {}, {"Nminus": -1},
               {}, {"Z": 1, "Zp": 1}, {}, {"Nplus": 1}],
    "P1minus": [{"P1minus": 1}, {"P1minus": 1}, {"P0minus": 2}, {"Xminus": -2}, {"Nplus": -1}, {},
                {"Z": -1, "Zp": -1}, {}, {"Nminus": 1}, {}],
    "P0plus": [{}, {"P0plus": -2}, {"P1plus": -1}, {}, {}, {},
               {}, {"Nminus": -1}, {}, {"Zp": 1}],
    "P0minus": [{}, {"P0minus": 2}, {}, {"P1minus": -1}, {}, {},
                {"Nplus": -1}, {}, {"Zp": -1}, {}],
}

MULT_TABLE: dict[tuple[str, str], dict[str, float]] = {
    (row, col): combo
    for row, cells in _TABLE_ROWS.items()
    for col, combo in zip(_T, cells)
}


def basis_matrix(tag: str) -> np.ndarray:
    """Matrix of a real or complex basis element (read-only)."""
    try:
        return _MATRICES[tag]
    except KeyError:
        raise KeyError(f"unknown basis tag {tag!r}") from None


def combination(coeffs: dict[str, complex]) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for tag, c in coeffs.items():
        out = out + c * _MATRICES[tag]
    return out


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def in_algebra(x: np.ndarray, tol: float = 1e-12) -> bool:
    """Block conditions A = -D^T, B = B^T, C = C^T."""
    x = np.asarray(x)
    a, b, c, d = x[:2, :2], x[:2, 2:], x[2:, :2], x[2:, 2:]
    return bool(
        np.abs(a + d.T).max() <= tol
        and np.abs(b - b.T).max() <= tol
        and np.abs(c - c.T).max() <= tol
    )


@dataclass(frozen=True)
class TableReport:
    cells: dict[tuple[str, str], bool]
    max_deviation: float

    @property
    def passed(self) -> int:
        return sum(self.cells.values())

    @property
    def failed(self) -> int:
        return len(self.cells) - self.passed


def verify_mult_table(tol: float = 1e-14) -> TableReport:
    cells = {}
    worst = 0.0
    for (row, col), combo in MULT_TABLE.items():
        dev = float(np.abs(bracket(_MATRICES[row], _MATRICES[col]) - combination(combo)).max())
        worst = max(worst, dev)
        cells[(row, col)] = dev < tol
    return TableReport(cells, worst)


def _coords(x: np.ndarray, tags) -> tuple[np.ndarray, float]:
    basis = np.stack([_MATRICES[t].ravel() for t in tags], axis=1)
    coef, *_ = np.linalg.lstsq(basis, np.asarray(x, dtype=complex).ravel(), rcond=None)
    resid = float(np.abs(basis @ coef - np.ravel(x)).max())
    return coef, resid


def complex_coordinates(x: np.ndarray, tol: float = 1e-10) -> dict[str, complex]:
    """Coefficients of ``x`` in the complex basis."""
    coef, resid = _coords(x, COMPLEX_TAGS)
    if resid > tol:
        raise NotInAlgebra(f"residual {resid:.3g} outside sp(4,C)")
    return dict(zip(COMPLEX_TAGS, coef))


def real_coordinates(x: np.ndarray, tol: float = 1e-10) -> dict[str, complex]:
    """Coefficients of ``x`` in the real basis (complex coefficients allowed)."""
    coef, resid = _coords(x, REAL_TAGS)
    if resid > tol:
        raise NotInAlgebra(f"residual {resid:.3g} outside sp(4,C)")
    return dict(zip(REAL_TAGS, coef))


def cartan_split(x: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Components of ``x`` in k_C, p_+ and p_-."""
    coords = complex_coordinates(x, tol)
    parts = []
    for tags in (K_TAGS, P_PLUS_TAGS, P_MINUS_TAGS):
        parts.append(combination({t: coords[t] for t in tags}))
    return tuple(parts)


def cartan_involution(x: np.ndarray) -> np.ndarray:
    return -np.asarray(x).T
