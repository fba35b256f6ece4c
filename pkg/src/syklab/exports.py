"""Plain-text data exports and their exact-round-trip readers.

Every numeric field is written with 17 significant digits so that
reading a file back reproduces the in-memory doubles bit for bit.
All tables carry a one-line header naming their columns.
"""

import hashlib
import json
from math import comb

import numpy as np

from .correlators import CorrelatorSeries
from .decompose import FermionExpansion
from .ensemble import CouplingTensor, coupling_subsets
from .metropolis import TrajectoryRow
from .poissonize import EigenvaluePool


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_table(path, header: str, rows) -> None:
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _read_table(path, header: str) -> list[list[str]]:
    with open(path) as f:
        first = f.readline().rstrip("\n")
        if first != header:
            raise ValueError(f"{path}: expected header {header!r}, got {first!r}")
        return [line.rstrip("\n").split(",") for line in f if line.strip()]


def write_coefficients(path, couplings: CouplingTensor) -> None:
    """One row per 4-subset in lexicographic order."""
    subsets = coupling_subsets(couplings.n)
    rows = (
        (str(a), str(b), str(c), str(d), _fmt(v))
        for (a, b, c, d), v in zip(subsets, couplings.values)
    )
    _write_table(path, "i1,i2,i3,i4,value", rows)


def read_coefficients(path) -> CouplingTensor:
    """Rows may come in any order; n is inferred from the index range."""
    rows = _read_table(path, "i1,i2,i3,i4,value")
    if not rows:
        raise ValueError(f"{path}: no coefficient rows")
    entries = {}
    top = 0
    for row in rows:
        if len(row) != 5:
            raise ValueError(f"{path}: bad row {row!r}")
        subset = tuple(int(i) for i in row[:4])
        entries[subset] = float(row[4])
        top = max(top, subset[3])
    n = top + 1
    if len(entries) != comb(n, 4):
        raise ValueError(f"{path}: {len(entries)} distinct subsets, want C({n},4)")
    values = np.array([entries[s] for s in coupling_subsets(n)])
    return CouplingTensor(n, values)


def write_spectrum(path, spectra) -> None:
    rows = (
        (s.sector, str(i), _fmt(e))
        for s in spectra
        for i, e in enumerate(s.eigenvalues)
    )
    _write_table(path, "sector,index,eigenvalue", rows)


def read_spectrum(path) -> dict[str, np.ndarray]:
    """Sector tag -> eigenvalue array, in file order."""
    out: dict[str, list[float]] = {}
    for sector, _, value in _read_table(path, "sector,index,eigenvalue"):
        out.setdefault(sector, []).append(float(value))
    return {tag: np.array(vals) for tag, vals in out.items()}


def write_sff(path, beta: float, times, values) -> None:
    rows = ((_fmt(beta), _fmt(t), _fmt(v)) for t, v in zip(times, values))
    _write_table(path, "beta,t,value", rows)


def read_sff(path):
    """Column arrays (beta, t, value)."""
    rows = _read_table(path, "beta,t,value")
    cols = np.array([[float(x) for x in row] for row in rows])
    return cols[:, 0], cols[:, 1], cols[:, 2]


def write_series(path, series) -> None:
    """One file holds any number of series; rows group by beta."""
    if isinstance(series, CorrelatorSeries):
        series = (series,)
    rows = (
        (_fmt(s.beta), _fmt(t), _fmt(v.real), _fmt(v.imag))
        for s in series
        for t, v in zip(s.times, s.values)
    )
    _write_table(path, "beta,t,re,im", rows)


def read_series(path) -> tuple[CorrelatorSeries, ...]:
    groups: dict[float, list[tuple[float, complex]]] = {}
    for b, t, re, im in _read_table(path, "beta,t,re,im"):
        groups.setdefault(float(b), []).append((float(t), complex(float(re), float(im))))
    out = []
    for beta, pts in groups.items():
        times = np.array([t for t, _ in pts])
        values = np.array([v for _, v in pts])
        out.append(CorrelatorSeries(beta=beta, times=times, values=values))
    return tuple(out)


def write_gram(path, matrix) -> None:
    matrix = np.asarray(matrix)
    rows = (
        (str(j), str(k), _fmt(matrix[j, k].real), _fmt(matrix[j, k].imag))
        for j in range(matrix.shape[0])
        for k in range(matrix.shape[1])
    )
    _write_table(path, "j,k,re,im", rows)


def read_gram(path) -> np.ndarray:
    rows = _read_table(path, "j,k,re,im")
    dim = int(np.sqrt(len(rows)))
    if dim * dim != len(rows):
        raise ValueError(f"{path}: {len(rows)} rows is not a square matrix")
    out = np.zeros((dim, dim), dtype=np.complex128)
    for j, k, re, im in rows:
        out[int(j), int(k)] = complex(float(re), float(im))
    return out


def write_pool(path, pool: EigenvaluePool) -> None:
    rows = (
        (tag, _fmt(e))
        for tag in ("even", "odd")
        for e in pool.sector(tag)
    )
    _write_table(path, "sector,eigenvalue", rows)


def read_pool(path) -> dict[str, np.ndarray]:
    out: dict[str, list[float]] = {}
    for sector, value in _read_table(path, "sector,eigenvalue"):
        out.setdefault(sector, []).append(float(value))
    return {tag: np.array(vals) for tag, vals in out.items()}


def write_expansion(path, expansion: FermionExpansion) -> None:
    """Dash-separated ascending indices; the identity row has empty indices."""
    items = sorted(expansion.coefficients.items(), key=lambda kv: (len(kv[0]), kv[0]))
    rows = (("-".join(str(i) for i in idx), _fmt(v)) for idx, v in items)
    _write_table(path, "indices,value", rows)


def read_expansion(path, n: int) -> FermionExpansion:
    coefficients = {}
    for idx, value in _read_table(path, "indices,value"):
        indices = tuple(int(i) for i in idx.split("-")) if idx else ()
        coefficients[indices] = float(value)
    return FermionExpansion(n=n, coefficients=coefficients)


def write_trajectory(path, rows) -> None:
    out = (
        (str(r.step), _fmt(r.beta_d), _fmt(r.objective), _fmt(r.sigma), _fmt(r.accept_rate))
        for r in rows
    )
    _write_table(path, "step,beta_D,f,sigma,accept_rate", out)


def read_trajectory(path) -> tuple[TrajectoryRow, ...]:
    return tuple(
        TrajectoryRow(
            step=int(step), beta_d=float(b), objective=float(f),
            sigma=float(s), accept_rate=float(a),
        )
        for step, b, f, s, a in _read_table(path, "step,beta_D,f,sigma,accept_rate")
    )


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_checkpoint(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, default=_json_default, indent=1)
        f.write("\n")


def read_checkpoint(path) -> dict:
    with open(path) as f:
        return json.load(f)


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, params: dict, file_paths) -> None:
    """Run manifest: parameters plus checksums, deliberately no timestamps."""
    import os

    files = {}
    for p in sorted(file_paths, key=lambda q: os.path.basename(str(q))):
        files[os.path.basename(str(p))] = {
            "sha256": sha256_of(p),
            "bytes": os.path.getsize(p),
        }
    payload = {"params": params, "files": files}
    with open(path, "w") as f:
        json.dump(payload, f, default=_json_default, indent=1, sort_keys=True)
        f.write("\n")


def read_manifest(path) -> dict:
    with open(path) as f:
        return json.load(f)


def read_config(path) -> dict[str, str]:
    """key=value lines; blank lines and # comments are skipped."""
    out = {}
    with open(path) as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def write_config(path, mapping: dict) -> None:
    with open(path, "w") as f:
        for key, value in mapping.items():
            f.write(f"{key}={value}\n")
