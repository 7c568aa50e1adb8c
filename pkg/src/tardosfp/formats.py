"""On-disk formats: annotated CSV tables, the code-matrix container and strategy descriptors.

See docs/formats.md for the byte layout and the descriptor schema.
"""

from __future__ import annotations

import csv
import io
import json
import struct
import subprocess
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from tardosfp import __version__
from tardosfp.attacks import BUILTINS, Class3Strategy, Strategy, StrategyError, builtin
from tardosfp.model import CodeParams

HEADER_PREFIX = "# "


# ---------------------------------------------------------------- CSV tables

def version_string() -> str:
    """Package version, with ``+g<hash>`` appended when run from a git checkout."""
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path_or_file, header: dict, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """CSV whose first line is ``# {json header}``; ``None`` cells are written empty."""
    header = {**header, "columns": list(columns)}
    header.setdefault("version", version_string())
    own = not hasattr(path_or_file, "write")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(HEADER_PREFIX + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    finally:
        if own:
            fh.close()


def read_csv(path_or_file) -> tuple[dict, list[str], list[list[float | None]]]:
    """Inverse of :func:`write_csv`; numeric cells become floats, empty ones None."""
    text = path_or_file.read() if hasattr(path_or_file, "read") else Path(path_or_file).read_text()
    first, _, rest = text.partition("\n")
    if not first.startswith(HEADER_PREFIX.strip()):
        raise ValueError("missing JSON header line")
    header = json.loads(first[1:])
    reader = csv.reader(io.StringIO(rest))
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            if cell == "":
                row.append(None)
            else:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(row)
    return header, columns, rows


def params_header(params: CodeParams, strategy: Strategy | str | None = None, **extra) -> dict:
    out = {"q": params.q, "c": params.c, "kappa": params.kappa}
    if strategy is not None:
        out["strategy"] = strategy if isinstance(strategy, str) else strategy.name
    out.update(extra)
    return out


def write_kb_table(path, K, params: CodeParams, strategy=None, **extra) -> None:
    write_csv(path, params_header(params, strategy, **extra), ["b", "value"],
              [(b, float(v)) for b, v in enumerate(K)])


def write_t_table(path, t_values, params: CodeParams, **extra) -> None:
    write_csv(path, params_header(params, **extra), ["b", "value"],
              [(b, float(v)) for b, v in enumerate(t_values)])


def write_fp_curve(path, rows, params: CodeParams, m: int, strategy, nu_max: float, **extra) -> None:
    write_csv(path, params_header(params, strategy, m=m, nu_max=nu_max, **extra),
              ["Z_tilde", "R_m", "Omega"], rows)


def write_expansion(path, coeffs, params: CodeParams | None = None, **extra) -> None:
    """Expansion coefficients as rows (ν_t, ω_t, α_t)."""
    header = params_header(params, **extra) if params is not None else dict(extra)
    header.update(m=coeffs.m, nu_max=coeffs.nu_max)
    write_csv(path, header, ["nu_t", "omega_t", "alpha_t"],
              [(float(n), float(o), float(a)) for n, o, a in zip(coeffs.nu, coeffs.omega, coeffs.alpha)])


# ---------------------------------------------------------- code-matrix file

CODE_MAGIC = b"TFPCODE\0"
CODE_FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sHI")


def _symbol_dtype(q: int) -> np.dtype:
    return np.dtype("<u1") if q <= 256 else np.dtype("<u2")


def write_code(path, code: np.ndarray, biases: np.ndarray, params: CodeParams, seed: int | None = None) -> None:
    """Write X (n × m) and the bias sequence (m × q) in the versioned columnar layout."""
    code = np.asarray(code)
    biases = np.asarray(biases, dtype="<f8")
    n, m = code.shape
    if biases.shape != (m, params.q):
        raise ValueError(f"biases must have shape {(m, params.q)}")
    if code.size and (code.min() < 0 or code.max() >= params.q):
        raise ValueError("code contains symbols outside the alphabet")
    dtype = _symbol_dtype(params.q)
    header = {"q": params.q, "c": params.c, "kappa": params.kappa, "m": m, "n": n, "seed": seed,
              "symbol_dtype": dtype.str, "format_version": CODE_FORMAT_VERSION}
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(CODE_MAGIC, CODE_FORMAT_VERSION, len(blob)))
        fh.write(blob)
        # column i of X, i.e. segment i for all users, is contiguous
        fh.write(np.asfortranarray(code.astype(dtype)).tobytes(order="F"))
        fh.write(biases.tobytes(order="C"))


def read_code(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Returns (header, code of shape (n, m), biases of shape (m, q))."""
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size:
        raise ValueError("truncated code file")
    magic, version, hlen = _PREAMBLE.unpack_from(data)
    if magic != CODE_MAGIC:
        raise ValueError("not a code-matrix file")
    if version != CODE_FORMAT_VERSION:
        raise ValueError(f"unsupported code-matrix format version {version}")
    off = _PREAMBLE.size
    header = json.loads(data[off:off + hlen])
    off += hlen
    n, m, q = header["n"], header["m"], header["q"]
    dtype = np.dtype(header["symbol_dtype"])
    nbytes = n * m * dtype.itemsize
    if len(data) != off + nbytes + m * q * 8:
        raise ValueError("code file size disagrees with its header")
    code = np.frombuffer(data, dtype=dtype, count=n * m, offset=off).reshape((n, m), order="F").astype(np.int64)
    biases = np.frombuffer(data, dtype="<f8", count=m * q, offset=off + nbytes).reshape(m, q).copy()
    return header, code, biases


# ------------------------------------------------------ strategy descriptors

STRATEGY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "class3"},
                "name": {"type": "string"},
                "table": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "integer", "minimum": 1},
                                        {"type": "integer", "minimum": 1},
                                        {"enum": [0, 1]}],
                        "minItems": 3, "maxItems": 3,
                    },
                },
            },
            "required": ["kind", "table"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "builtin"},
                "name": {"enum": list(BUILTINS)},
                "tie_break": {"enum": ["majority", "minority"]},
            },
            "required": ["kind", "name"],
            "additionalProperties": False,
        },
    ],
}


class DescriptorError(StrategyError):
    """Strategy descriptor is not valid JSON or violates the schema."""


def _element_offset(text: str, path: Sequence) -> int:
    """Character offset of the JSON element at ``path`` (keys and indices)."""
    dec = json.JSONDecoder()
    pos = 0

    def skip(p):
        while p < len(text) and text[p] in " \t\r\n":
            p += 1
        return p

    pos = skip(pos)
    for step in path:
        if text[pos] == "{":
            pos = skip(pos + 1)
            while text[pos] != "}":
                key, pos = dec.raw_decode(text, pos)
                pos = skip(skip(pos) + 1)  # past ':'
                if key == step:
                    break
                _, pos = dec.raw_decode(text, pos)
                pos = skip(pos)
                if text[pos] == ",":
                    pos = skip(pos + 1)
            else:
                return pos
        elif text[pos] == "[":
            pos = skip(pos + 1)
            for _ in range(int(step)):
                _, pos = dec.raw_decode(text, pos)
                pos = skip(skip(pos) + 1)  # past ','
        else:
            return pos
    return pos


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse_descriptor(text: str) -> dict:
    """Parse and schema-check a strategy descriptor; errors carry line and column."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptorError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    schema = STRATEGY_SCHEMA
    if isinstance(obj, dict):
        # validate against the branch named by "kind" so messages stay specific
        for branch in STRATEGY_SCHEMA["oneOf"]:
            if branch["properties"]["kind"]["const"] == obj.get("kind"):
                schema = branch
    validator = jsonschema.Draft202012Validator(schema)
    errors = list(validator.iter_errors(obj))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = list(err.absolute_path)
        try:
            line, col = _line_col(text, _element_offset(text, path))
        except (IndexError, json.JSONDecodeError, ValueError):
            line, col = 1, 1
        where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path) or "<root>"
        raise DescriptorError(f"line {line} column {col}: {where}: {err.message}")
    return obj


def strategy_from_descriptor(desc: dict, params: CodeParams) -> Strategy:
    if desc["kind"] == "builtin":
        kw = {"tie_break": desc["tie_break"]} if "tie_break" in desc else {}
        return builtin(desc["name"], params, **kw)
    strat = Class3Strategy.from_table(desc["table"], name=desc.get("name", "class3"), c=params.c)
    strat.check(params.c)
    return strat


def load_strategy(source: str, params: CodeParams) -> Strategy:
    """Resolve a built-in name, a path to a descriptor file, or inline descriptor JSON."""
    if source in BUILTINS:
        return builtin(source, params)
    text = source if source.lstrip().startswith("{") else Path(source).read_text()
    return strategy_from_descriptor(parse_descriptor(text), params)


def strategy_descriptor(strategy: Strategy, c: int | None = None) -> dict:
    """Descriptor for a built-in or class-3 strategy (table over counts 1..c)."""
    if strategy.name in BUILTINS:
        return {"kind": "builtin", "name": strategy.name}
    if isinstance(strategy, Class3Strategy):
        c = strategy.c if c is None else c
        if c is None:
            raise ValueError("coalition size needed to tabulate the comparator")
        return {"kind": "class3", "name": strategy.name, "table": strategy.table(c)}
    raise ValueError("only built-in and class-3 strategies have descriptors")
