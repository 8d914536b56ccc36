"""Sensitive-attribute distribution vectors and the KL-based divergence score.

Every node carries one row ``s_u`` of a nonnegative ``N x M`` matrix, laid
out as one contiguous column block per attribute. At the finest level each
block is one-hot; a supernode's row is the element-wise sum over the original
nodes merged into it, i.e. the value distribution of its children.

The divergence ``phi(u, v) = 1 - 1/(1 + KL(p || q))`` compares the two rows
after normalizing each whole row to a probability vector (L1 over the full
concatenation). ``phi`` is 0 for identical distributions, exactly 1 when
``p`` has support where ``q`` has none (the KL -> infinity limit), and lies
in ``[0, 1]`` otherwise. Natural log is used. Note ``phi`` is not symmetric:
the first argument is the node whose distribution is being matched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingNode, UnknownValue, ZeroMassRow

__all__ = [
    "AttributeMatrix",
    "encode_one_hot",
    "merge_rows",
    "divergence",
    "pairwise_divergence",
    "row_normalize",
    "read_attribute_table",
    "write_attribute_table",
]

Schema = Sequence[tuple[str, Sequence[str]]]


@dataclass(frozen=True)
class AttributeMatrix:
    """Per-node attribute distribution rows plus the block layout.

    Attributes:
        S: ``N x M`` nonnegative float matrix, one row per node.
        schema: ``(attribute name, value names)`` per block, in column order.
    """

    S: np.ndarray
    schema: tuple = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def m(self) -> int:
        return self.S.shape[1]

    def block_slices(self) -> list[tuple[str, slice]]:
        out = []
        start = 0
        for name, values in self.schema:
            out.append((name, slice(start, start + len(values))))
            start += len(values)
        return out

    def block(self, attr: str) -> slice:
        for name, sl in self.block_slices():
            if name == attr:
                return sl
        raise KeyError(attr)

    def attribute_names(self) -> list[str]:
        return [name for name, _ in self.schema]

    def dominant_value(self, attr: str) -> np.ndarray:
        """Per-node index of the heaviest value within one attribute block.

        At the finest (one-hot) level this is the node's attribute value.
        """
        sl = self.block(attr)
        return np.argmax(self.S[:, sl], axis=1)

    def value_names(self, attr: str) -> list[str]:
        for name, values in self.schema:
            if name == attr:
                return list(values)
        raise KeyError(attr)


def encode_one_hot(
    table: Mapping[Hashable, Mapping[str, str]],
    schema: Schema,
    node_order: Sequence[Hashable],
) -> AttributeMatrix:
    """One-hot encode per-node attribute assignments.

    ``table`` maps node id -> {attribute: value}; rows are emitted in
    ``node_order`` so the matrix aligns with a graph's dense indices.

    Raises:
        MissingNode: a node in ``node_order`` has no assignment, or lacks an
            attribute named in the schema.
        UnknownValue: an assigned value is not in the schema.
    """
    m = sum(len(values) for _, values in schema)
    offsets: dict[str, tuple[int, dict[str, int]]] = {}
    start = 0
    for name, values in schema:
        offsets[name] = (start, {v: i for i, v in enumerate(values)})
        start += len(values)

    S = np.zeros((len(node_order), m))
    for row, node in enumerate(node_order):
        if node not in table:
            raise MissingNode(f"no attribute row for node {node!r}")
        assigned = table[node]
        for name, (base, value_index) in offsets.items():
            if name not in assigned:
                raise MissingNode(f"node {node!r} missing attribute {name!r}")
            value = assigned[name]
            if value not in value_index:
                raise UnknownValue(f"attribute {name!r} has no value {value!r}")
            S[row, base + value_index[value]] = 1.0
    return AttributeMatrix(S, tuple((name, tuple(values)) for name, values in schema))


def merge_rows(s_u: np.ndarray, s_v: np.ndarray) -> np.ndarray:
    """Element-wise sum; the distribution of a merged supernode."""
    s_u = np.asarray(s_u, dtype=float)
    s_v = np.asarray(s_v, dtype=float)
    if s_u.shape != s_v.shape:
        raise DimensionMismatch(f"cannot merge rows of shapes {s_u.shape} and {s_v.shape}")
    return s_u + s_v


def divergence(s_u: np.ndarray, s_v: np.ndarray) -> float:
    """KL-based attribute divergence ``phi`` in [0, 1]; asymmetric in (u, v)."""
    s_u = np.asarray(s_u, dtype=float)
    s_v = np.asarray(s_v, dtype=float)
    if s_u.shape != s_v.shape:
        raise DimensionMismatch(f"rows of shapes {s_u.shape} and {s_v.shape}")
    mu, mv = s_u.sum(), s_v.sum()
    if mu <= 0.0 or mv <= 0.0:
        raise ZeroMassRow("divergence needs rows with positive mass")
    p = s_u / mu
    q = s_v / mv
    support = p > 0.0
    if np.any(q[support] <= 0.0):
        return 1.0
    kl = float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support]))))
    kl = max(kl, 0.0)  # guard float round-off on near-identical rows
    return 1.0 - 1.0 / (1.0 + kl)


def pairwise_divergence(S: np.ndarray, u_idx: np.ndarray, v_idx: np.ndarray) -> np.ndarray:
    """Vectorized ``phi(S[u], S[v])`` over index arrays (same orientation rule)."""
    S = np.asarray(S, dtype=float)
    mass = S.sum(axis=1)
    if np.any(mass[u_idx] <= 0.0) or np.any(mass[v_idx] <= 0.0):
        raise ZeroMassRow("divergence needs rows with positive mass")
    P = S[u_idx] / mass[u_idx, None]
    Q = S[v_idx] / mass[v_idx, None]
    sup = P > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(sup, P * (np.log(np.where(sup, P, 1.0)) - np.log(Q)), 0.0)
    kl = terms.sum(axis=1)
    phi = np.where(np.isfinite(kl), 1.0 - 1.0 / (1.0 + np.maximum(kl, 0.0)), 1.0)
    return phi


def row_normalize(S: np.ndarray) -> np.ndarray:
    """Divide each row by its L1 sum so rows sum to one."""
    S = np.asarray(S, dtype=float)
    mass = S.sum(axis=1)
    if np.any(mass <= 0.0):
        raise ZeroMassRow(f"row {int(np.argmin(mass))} has no mass")
    return S / mass[:, None]


# -- attribute table format ------------------------------------------------
# CSV with header `node,attr1,attr2,...`. Unless an explicit schema is given,
# it is inferred from the distinct values of each column in first-appearance
# order.

def read_attribute_table(path, schema: Schema | None = None):
    """Read a node attribute CSV.

    Returns ``(table, schema)`` where ``table`` maps node id to its
    ``{attribute: value}`` dict.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "node":
            raise MissingNode(f"{path}: first CSV column must be 'node'")
        attrs = header[1:]
        table: dict[str, dict[str, str]] = {}
        seen: dict[str, list[str]] = {a: [] for a in attrs}
        for parts in reader:
            if not parts:
                continue
            if len(parts) != len(header):
                raise UnknownValue(f"{path}: row {parts!r} does not match header")
            node = parts[0]
            table[node] = dict(zip(attrs, parts[1:]))
            for a, v in table[node].items():
                if v not in seen[a]:
                    seen[a].append(v)
    if schema is None:
        schema = [(a, tuple(seen[a])) for a in attrs]
    return table, schema


def write_attribute_table(path, node_order: Sequence, table: Mapping) -> None:
    attrs = sorted({a for row in table.values() for a in row}) if table else []
    # preserve attribute order of the first row when available
    for row in table.values():
        attrs = list(row.keys())
        break
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node"] + attrs)
        for node in node_order:
            row = table[node]
            writer.writerow([node] + [row[a] for a in attrs])


def write_attribute_matrix(path, attrs: AttributeMatrix, node_names: Sequence | None = None) -> None:
    """Persist a distribution matrix; columns are `attr=value` counts.

    Coarse-level rows are count distributions, so this keeps the numeric
    content instead of single values. Floats use repr for lossless reload.
    """
    header = ["node"]
    for name, values in attrs.schema:
        header += [f"{name}={v}" for v in values]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(attrs.n):
            node = node_names[i] if node_names is not None else i
            writer.writerow([node] + [repr(float(x)) for x in attrs.S[i]])


def read_attribute_matrix(path):
    """Load a matrix written by :func:`write_attribute_matrix`.

    Returns ``(AttributeMatrix, node names in row order)``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        schema: list[tuple[str, list[str]]] = []
        for col in header[1:]:
            name, _, value = col.partition("=")
            if not schema or schema[-1][0] != name:
                schema.append((name, []))
            schema[-1][1].append(value)
        names = []
        rows = []
        for parts in reader:
            if not parts:
                continue
            names.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    S = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(header) - 1))
    return AttributeMatrix(S, tuple((n, tuple(v)) for n, v in schema)), names
