"""JSON loaders for set functions."""

from __future__ import annotations

from .submodular import SetFunction, coverage, directed_cut, explicit_table, modular


def function_from_json(spec: dict, n: int | None = None) -> SetFunction:
    """Build a set function from {"kind": coverage|cut|table|modular, ...}."""
    kind = spec["kind"]
    if kind == "coverage":
        f = coverage(spec["sets"], spec.get("weights"))
    elif kind in ("cut", "directed-cut"):
        f = directed_cut(spec["arcs"], spec.get("n", n))
    elif kind in ("table", "explicit-table"):
        size = spec.get("n", n)
        if size is None:
            size = 1 + max((int(t) for k in spec["values"] for t in str(k).split(",") if t.strip()), default=0)
        f = explicit_table(spec["values"], size)
    elif kind == "modular":
        f = modular(spec["weights"])
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    if n is not None and f.n != n:
        raise ValueError(f"function has {f.n} elements, expected {n}")
    return f
