"""Dataset container, CSV loading, and design-matrix construction.

A Dataset holds one binary exposure z, one binary mediator m, one binary
outcome y and a (possibly empty) block of numeric covariates x. The three
design builders fix the coefficient layouts used everywhere else:

    exposure design: [1, x]                                -> alpha
    mediator design: [1, z, x, z*x]                        -> beta
    outcome  design: [1, z, m, z*m, x, z*x, m*x, z*m*x]    -> theta

Optional blocks are controlled by ModelSpec flags; a disabled block is
simply absent from the matrix (and from the packed coefficient vector),
never a column of zeros.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, RankError

MISSING_TOKENS = {"", "NA"}

# listing caps for error messages
_MAX_LISTED_ROWS = 10


@dataclass(frozen=True)
class ColumnRoles:
    """Mapping from analysis roles to CSV column names."""

    exposure: str
    mediator: str
    outcome: str
    covariates: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        names = [self.exposure, self.mediator, self.outcome, *self.covariates]
        if len(set(names)) != len(names):
            raise ConfigError(f"column roles must name distinct columns, got {names}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable complete-case analysis dataset.

    z, m, y are integer 0/1 vectors of common length n; x is an (n, p)
    float matrix (p may be zero) and covariate_names labels its columns.
    """

    z: np.ndarray
    m: np.ndarray
    y: np.ndarray
    x: np.ndarray
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        z = np.asarray(self.z)
        m = np.asarray(self.m)
        y = np.asarray(self.y)
        x = np.asarray(self.x, dtype=float)
        if z.ndim != 1 or m.ndim != 1 or y.ndim != 1:
            raise DataError("z, m, y must be one-dimensional")
        n = z.shape[0]
        if n < 1:
            raise DataError("dataset must contain at least one row")
        if m.shape[0] != n or y.shape[0] != n:
            raise DataError("z, m, y must have equal length")
        if x.ndim == 1 and x.size == 0:
            x = x.reshape(n, 0)
        if x.ndim != 2 or x.shape[0] != n:
            raise DataError(f"x must be an ({n}, p) matrix")
        for name, col in (("z", z), ("m", m), ("y", y)):
            vals = np.unique(col)
            if not np.isin(vals, (0, 1)).all():
                bad = [v for v in vals if v not in (0, 1)]
                raise DataError(f"column {name} must be binary 0/1, found values {bad}")
        if not np.isfinite(x).all():
            raise DataError("covariates must be finite")
        names = tuple(str(s) for s in self.covariate_names)
        if len(names) != x.shape[1]:
            raise DataError(
                f"{x.shape[1]} covariate columns but {len(names)} names given")
        if len(set(names)) != len(names):
            raise DataError(f"covariate names must be distinct, got {names}")
        for arr, attr in ((z.astype(np.int64), "z"), (m.astype(np.int64), "m"),
                          (y.astype(np.int64), "y"), (x, "x")):
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def take(self, indices) -> "Dataset":
        """Row-subset (or resample) view as a new Dataset."""
        idx = np.asarray(indices)
        return Dataset(self.z[idx], self.m[idx], self.y[idx], self.x[idx],
                       self.covariate_names)

    def equals(self, other: "Dataset") -> bool:
        return (self.covariate_names == other.covariate_names
                and np.array_equal(self.z, other.z)
                and np.array_equal(self.m, other.m)
                and np.array_equal(self.y, other.y)
                and np.array_equal(self.x, other.x))


@dataclass(frozen=True)
class LoadResult:
    """A loaded Dataset plus how many incomplete rows were dropped."""

    dataset: Dataset
    dropped: int


def load_csv(path, roles: ColumnRoles, delimiter: str = ",") -> LoadResult:
    """Read a delimited text file into a complete-case Dataset.

    Rows with a missing value (empty cell or "NA") in any mapped column
    are dropped and counted. Non-binary exposure/mediator/outcome values
    and non-numeric covariates are data errors naming the offending rows.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        wanted = [roles.exposure, roles.mediator, roles.outcome, *roles.covariates]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ConfigError(f"{path}: mapped columns not in header: {missing}")
        pos = {c: header.index(c) for c in wanted}
        rows = list(reader)

    z_vals, m_vals, y_vals, x_rows = [], [], [], []
    dropped = 0
    bad_binary: list[tuple[int, str, str]] = []
    bad_numeric: list[tuple[int, str, str]] = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(
                f"{path}: data row {i} has {len(row)} fields, header has {len(header)}")
        cells = {c: row[pos[c]].strip() for c in wanted}
        if any(cells[c] in MISSING_TOKENS for c in wanted):
            dropped += 1
            continue
        rec = {}
        for c in (roles.exposure, roles.mediator, roles.outcome):
            cell = cells[c]
            if cell in ("0", "1"):
                rec[c] = int(cell)
                continue
            try:
                val = float(cell)
            except ValueError:
                bad_binary.append((i, c, cell))
                continue
            if val in (0.0, 1.0):
                rec[c] = int(val)
            else:
                bad_binary.append((i, c, cell))
        xs = []
        for c in roles.covariates:
            try:
                xs.append(float(cells[c]))
            except ValueError:
                bad_numeric.append((i, c, cells[c]))
        if len(rec) == 3 and len(xs) == len(roles.covariates):
            z_vals.append(rec[roles.exposure])
            m_vals.append(rec[roles.mediator])
            y_vals.append(rec[roles.outcome])
            x_rows.append(xs)

    if bad_binary:
        listed = ", ".join(f"row {i} {c}={v!r}" for i, c, v in bad_binary[:_MAX_LISTED_ROWS])
        more = "" if len(bad_binary) <= _MAX_LISTED_ROWS else f" (+{len(bad_binary) - _MAX_LISTED_ROWS} more)"
        raise DataError(f"{path}: non-binary exposure/mediator/outcome values: {listed}{more}")
    if bad_numeric:
        listed = ", ".join(f"row {i} {c}={v!r}" for i, c, v in bad_numeric[:_MAX_LISTED_ROWS])
        more = "" if len(bad_numeric) <= _MAX_LISTED_ROWS else f" (+{len(bad_numeric) - _MAX_LISTED_ROWS} more)"
        raise DataError(f"{path}: non-numeric covariate values: {listed}{more}")
    if not z_vals:
        raise DataError(f"{path}: no complete rows after dropping {dropped} incomplete rows")

    x = np.array(x_rows, dtype=float) if roles.covariates else np.empty((len(z_vals), 0))
    ds = Dataset(np.array(z_vals), np.array(m_vals), np.array(y_vals), x,
                 tuple(roles.covariates))
    return LoadResult(dataset=ds, dropped=dropped)


def write_csv(ds: Dataset, path, delimiter: str = ",") -> None:
    """Write a Dataset so that load_csv reads back an identical Dataset.

    Covariates are written with repr, which round-trips doubles exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["z", "m", "y", *ds.covariate_names])
        for i in range(ds.n):
            writer.writerow([int(ds.z[i]), int(ds.m[i]), int(ds.y[i]),
                             *[repr(float(v)) for v in ds.x[i]]])


@dataclass(frozen=True)
class ModelSpec:
    """Term flags for the three probit models.

    Intercepts, the exposure main effect in the mediator model and the
    exposure and mediator main effects in the outcome model are always
    present and have no flags. Every interaction flag requires its
    main-effect flags; the default is the full model.
    """

    exposure_x: bool = True
    mediator_x: bool = True
    mediator_zx: bool = True
    outcome_zm: bool = True
    outcome_x: bool = True
    outcome_zx: bool = True
    outcome_mx: bool = True
    outcome_zmx: bool = True

    def __post_init__(self):
        if self.mediator_zx and not self.mediator_x:
            raise ConfigError("mediator z*x interaction requires the mediator x block")
        for flag, name in ((self.outcome_zx, "z*x"), (self.outcome_mx, "m*x")):
            if flag and not self.outcome_x:
                raise ConfigError(f"outcome {name} interaction requires the outcome x block")
        if self.outcome_zmx and not (self.outcome_zm and self.outcome_zx and self.outcome_mx):
            raise ConfigError(
                "outcome z*m*x interaction requires the z*m, z*x and m*x blocks")


def exposure_design(x: np.ndarray, spec: ModelSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    cols = [np.ones((n, 1))]
    if spec.exposure_x:
        cols.append(x)
    return np.hstack(cols)


def mediator_design(z: np.ndarray, x: np.ndarray, spec: ModelSpec) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1, 1)
    x = np.asarray(x, dtype=float)
    cols = [np.ones_like(z), z]
    if spec.mediator_x:
        cols.append(x)
    if spec.mediator_zx:
        cols.append(z * x)
    return np.hstack(cols)


def outcome_design(z: np.ndarray, m: np.ndarray, x: np.ndarray,
                   spec: ModelSpec) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1, 1)
    m = np.asarray(m, dtype=float).reshape(-1, 1)
    x = np.asarray(x, dtype=float)
    cols = [np.ones_like(z), z, m]
    if spec.outcome_zm:
        cols.append(z * m)
    if spec.outcome_x:
        cols.append(x)
    if spec.outcome_zx:
        cols.append(z * x)
    if spec.outcome_mx:
        cols.append(m * x)
    if spec.outcome_zmx:
        cols.append(z * m * x)
    return np.hstack(cols)


def build_exposure_design(ds: Dataset, spec: ModelSpec) -> np.ndarray:
    return exposure_design(ds.x, spec)


def build_mediator_design(ds: Dataset, spec: ModelSpec) -> np.ndarray:
    return mediator_design(ds.z, ds.x, spec)


def build_outcome_design(ds: Dataset, spec: ModelSpec) -> np.ndarray:
    return outcome_design(ds.z, ds.m, ds.x, spec)


def exposure_terms(spec: ModelSpec, names: tuple[str, ...]) -> list[str]:
    out = ["intercept"]
    if spec.exposure_x:
        out.extend(names)
    return out


def mediator_terms(spec: ModelSpec, names: tuple[str, ...]) -> list[str]:
    out = ["intercept", "z"]
    if spec.mediator_x:
        out.extend(names)
    if spec.mediator_zx:
        out.extend(f"z:{s}" for s in names)
    return out


def outcome_terms(spec: ModelSpec, names: tuple[str, ...]) -> list[str]:
    out = ["intercept", "z", "m"]
    if spec.outcome_zm:
        out.append("z:m")
    if spec.outcome_x:
        out.extend(names)
    if spec.outcome_zx:
        out.extend(f"z:{s}" for s in names)
    if spec.outcome_mx:
        out.extend(f"m:{s}" for s in names)
    if spec.outcome_zmx:
        out.extend(f"z:m:{s}" for s in names)
    return out


@dataclass(frozen=True)
class CovariateProfile:
    """A single covariate row at which conditional effects are evaluated."""

    values: np.ndarray
    name: str = "profile"

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float))
        if vals.ndim != 1:
            raise DataError("profile values must be a flat vector")
        if not np.isfinite(vals).all():
            raise DataError(f"profile {self.name!r} has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def covariate_stats(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-column means and (population) standard deviations of x."""
    if ds.p == 0:
        return np.empty(0), np.empty(0)
    return ds.x.mean(axis=0), ds.x.std(axis=0)


def validate_for_fit(ds: Dataset, spec: ModelSpec) -> None:
    """Checks run at every fit boundary: size, variance, design rank."""
    if ds.n <= ds.p + 10:
        raise DataError(
            f"dataset too small to fit: n = {ds.n} rows with p = {ds.p} "
            f"covariates (need n > p + 10)")
    if ds.p:
        sd = ds.x.std(axis=0)
        flat = [name for name, s in zip(ds.covariate_names, sd) if s == 0.0]
        if flat:
            raise DataError(f"covariate columns with zero variance: {flat}")
    for label, design in (("exposure", build_exposure_design(ds, spec)),
                          ("mediator", build_mediator_design(ds, spec)),
                          ("outcome", build_outcome_design(ds, spec))):
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise RankError(f"{label} design matrix is rank deficient")
