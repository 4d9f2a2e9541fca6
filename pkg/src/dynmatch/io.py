"""Line-oriented instance files.

Grammar (one record per line, fields separated by whitespace)::

    # comment                       ignored, as are blank lines
    T <T> <deadline-spec>           header, must come first
    knowledge known|revealed        optional, default known
    meta <key> <value...>           optional, repeatable
    <i> <j> <v>                     one edge, 1 <= i < j <= T

    deadline-spec := const <d> | pervertex <d_1> ... <d_T>
                   | geom <delta> | exp <mean> | empirical <d> <d> ...

Values are written with ``repr`` so a file read back gives bit-identical
floats.
"""
from __future__ import annotations

from .exceptions import InstanceError
from .market import KNOWN, DepartureModel, DynamicInstance, build_instance

_DEADLINE_ARITY = {"const": 1, "geom": 1, "exp": 1}


def format_departure(dep: DepartureModel) -> str:
    return " ".join([dep.kind, *(repr(p) for p in dep.params)])


def parse_departure(tokens: list[str], knowledge: str = KNOWN) -> DepartureModel:
    if not tokens:
        raise InstanceError("missing deadline spec")
    kind, args = tokens[0], tokens[1:]
    if kind in _DEADLINE_ARITY and len(args) != _DEADLINE_ARITY[kind]:
        raise InstanceError(f"deadline spec {kind!r} takes {_DEADLINE_ARITY[kind]} argument")
    try:
        if kind == "const":
            return DepartureModel.constant(int(args[0]), knowledge)
        if kind == "pervertex":
            return DepartureModel.per_vertex((int(a) for a in args), knowledge)
        if kind == "geom":
            return DepartureModel.geometric(float(args[0]), knowledge)
        if kind == "exp":
            return DepartureModel.exponential(float(args[0]), knowledge)
        if kind == "empirical":
            return DepartureModel.empirical((int(a) for a in args), knowledge)
    except ValueError as exc:
        raise InstanceError(f"bad deadline spec {' '.join(tokens)!r}: {exc}") from None
    raise InstanceError(f"unknown deadline kind {kind!r}")


def dumps(instance: DynamicInstance) -> str:
    lines = [f"T {instance.T} {format_departure(instance.departure)}"]
    if instance.departure.knowledge != KNOWN:
        lines.append(f"knowledge {instance.departure.knowledge}")
    for key in sorted(instance.metadata):
        lines.append(f"meta {key} {instance.metadata[key]}")
    lines.extend(f"{i} {j} {v!r}" for i, j, v in instance.edges())
    return "\n".join(lines) + "\n"


def loads(text: str) -> DynamicInstance:
    header = None
    knowledge = KNOWN
    metadata: dict[str, str] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            if header is None:
                if tokens[0] != "T" or len(tokens) < 3:
                    raise InstanceError("expected header 'T <T> <deadline-spec>'")
                header = (int(tokens[1]), tokens[2:])
            elif tokens[0] == "knowledge":
                knowledge = tokens[1]
            elif tokens[0] == "meta":
                _, key, *rest = line.split(None, 2) + [""]
                metadata[key] = rest[0]
            else:
                if len(tokens) != 3:
                    raise InstanceError("edge line needs exactly 'i j v'")
                edges.append((int(tokens[0]), int(tokens[1]), float(tokens[2])))
        except (InstanceError, ValueError, IndexError) as exc:
            raise InstanceError(f"line {lineno}: {exc}") from None
    if header is None:
        raise InstanceError("empty instance file")
    T, spec = header
    return build_instance(T, edges, parse_departure(spec, knowledge), metadata=metadata)


def write_instance(instance: DynamicInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(instance))


def read_instance(path) -> DynamicInstance:
    with open(path) as fh:
        return loads(fh.read())
