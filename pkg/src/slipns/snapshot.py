"""Field snapshot files.

Layout: one line of UTF-8 JSON (the header) terminated by ``\\n``, followed
by raw little-endian float64 collocation values, one block per field in
header order.  Each block is the ``(Nz, Ny, Nx)`` array in C order, so x
varies fastest, then y, then z.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DomainError
from .spectral import Domain, Parity, ScalarField, VectorField, transform_forward
from .state import FlowState

FORMAT = "slipns-snapshot"
VERSION = 1
STATE_FIELDS = ("rho", "u1", "u2", "u3")


def write_fields(path: str | Path, fields: Mapping[str, ScalarField], t: float = 0.0) -> None:
    items = list(fields.items())
    if not items:
        raise ValueError("nothing to write")
    domain = items[0][1].domain
    if any(f.domain != domain for _, f in items):
        raise DomainError("all fields in a snapshot must share one domain")
    header = {
        "format": FORMAT,
        "version": VERSION,
        "domain": domain.to_dict(),
        "time": float(t),
        "endianness": "little",
        "dtype": "float64",
        "layout": "C order (z, y, x); x fastest",
        "fields": [{"name": name, "parity": f.parity.value} for name, f in items],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for _, f in items:
            fh.write(np.ascontiguousarray(f.values(), dtype="<f8").tobytes())


def read_fields(path: str | Path) -> tuple[dict, dict[str, ScalarField]]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    if header.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if header.get("endianness") != "little" or header.get("dtype") != "float64":
        raise ValueError(f"{path}: unsupported encoding")
    domain = Domain.from_dict(header["domain"])
    n = int(np.prod(domain.shape))
    specs = header["fields"]
    if len(payload) != 8 * n * len(specs):
        raise ValueError(f"{path}: payload size does not match header")
    data = np.frombuffer(payload, dtype="<f8").reshape(len(specs), *domain.shape)
    fields = {}
    for i, s in enumerate(specs):
        values = data[i].astype(float)
        f = transform_forward(values, Parity(s["parity"]), domain)
        # the stored samples are authoritative; keep them bit-exact
        values.flags.writeable = False
        f.__dict__["_physical"] = values
        fields[s["name"]] = f
    return header, fields


def write_state(path: str | Path, state: FlowState) -> None:
    u = state.u
    write_fields(path, dict(zip(STATE_FIELDS, (state.rho, u.u1, u.u2, u.u3))), state.t)


def read_state(path: str | Path) -> FlowState:
    header, fields = read_fields(path)
    missing = [k for k in STATE_FIELDS if k not in fields]
    if missing:
        raise ValueError(f"{path}: missing fields {missing}")
    u = VectorField(fields["u1"], fields["u2"], fields["u3"])
    return FlowState(float(header["time"]), fields["rho"], u)
