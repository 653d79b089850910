"""The metric catalog.

Every entry is a closed-form metric on a single chart whose complement in
the underlying compact manifold has measure zero (sphere poles, torus cut
lines).  Composite builders (product, scaled, sign_flip, cylinder) assemble
new certified entries from existing ones.

Catalog names accept a small call syntax, e.g.

    sphere2
    flat_torus(3)
    perturbed_torus(2, amp=0.3)
    product(sphere2, sign_flip(sphere2))
    scaled(sphere2, lam=2)
    cylinder(sphere2)

Product charts rename coordinates and parameters of the two factors with
"_1"/"_2" suffixes so they never collide.
"""

import math
import re

import numpy as np

from . import exprlang
from .errors import ConfigError
from .geometry import Chart, MetricField, cylinder_extend


def _parse_components(entries, chart, parameters):
    """Parse a dict {(i, j): source} into a symmetric AST matrix."""
    n = chart.dim
    zero = exprlang.const(0.0)
    rows = [[zero] * n for _ in range(n)]
    for (i, j), src in entries.items():
        node = exprlang.parse(src)
        rows[i][j] = node
        rows[j][i] = node
    allowed = set(chart.coords) | {p for p, _ in parameters}
    for row in rows:
        for entry in row:
            exprlang.validate_names(entry, allowed)
    return tuple(tuple(row) for row in rows)


def sphere2():
    """Unit round 2-sphere with an optional conformal family parameter t.

    g_t = (1 + t sin(theta)^2 cos(phi)) (dtheta^2 + sin(theta)^2 dphi^2);
    t = 0 is the round metric.  Poles are the measure-zero chart boundary.
    """
    chart = Chart("sphere2", ("theta", "phi"),
                  ((0.0, math.pi), (0.0, 2.0 * math.pi)),
                  (False, True),
                  measure_note="poles theta in {0, pi} excluded (measure zero)")
    params = (("t", 0.0),)
    conf = "(1 + t*sin(theta)^2*cos(phi))"
    comps = _parse_components({
        (0, 0): conf,
        (1, 1): f"{conf}*sin(theta)^2",
    }, chart, params)
    return MetricField("sphere2", chart, comps, (2, 0), params,
                       expected_chi=2, family_params=("t",),
                       default_resolution=(32, 64))


def sphere3():
    """Unit round 3-sphere in nested polar coordinates."""
    chart = Chart("sphere3", ("psi", "theta", "phi"),
                  ((0.0, math.pi), (0.0, math.pi), (0.0, 2.0 * math.pi)),
                  (False, False, True),
                  measure_note="polar axes excluded (measure zero)")
    comps = _parse_components({
        (0, 0): "1",
        (1, 1): "sin(psi)^2",
        (2, 2): "sin(psi)^2*sin(theta)^2",
    }, chart, ())
    # det g = sin^4(psi) sin^2(theta): Gauss nodes must stay far enough
    # from the poles that the certified bound |det g| > 1e-10 holds
    return MetricField("sphere3", chart, comps, (3, 0),
                       expected_chi=0, default_resolution=(12, 12, 24))


def sphere4():
    """Unit round 4-sphere in nested polar coordinates."""
    chart = Chart("sphere4", ("t1", "t2", "t3", "phi"),
                  ((0.0, math.pi), (0.0, math.pi), (0.0, math.pi),
                   (0.0, 2.0 * math.pi)),
                  (False, False, False, True),
                  measure_note="polar axes excluded (measure zero)")
    comps = _parse_components({
        (0, 0): "1",
        (1, 1): "sin(t1)^2",
        (2, 2): "sin(t1)^2*sin(t2)^2",
        (3, 3): "sin(t1)^2*sin(t2)^2*sin(t3)^2",
    }, chart, ())
    # det g = sin^6 sin^4 sin^2 decays 12th-order at the corner of the
    # chart, so the default polar resolutions are deliberately coarse to
    # honor |det g| > 1e-10 at the nodes; the round P_2 integrand is a low
    # degree polynomial in the cosines, which Gauss(4) already integrates
    # exactly.  Override the resolution for deformed metrics.
    return MetricField("sphere4", chart, comps, (4, 0),
                       expected_chi=2, default_resolution=(4, 4, 4, 8))


def flat_torus(n):
    """Flat n-torus: identity metric on periodic coordinates."""
    n = int(n)
    if not 1 <= n <= 8:
        raise ConfigError("flat_torus dimension must be between 1 and 8")
    chart = Chart(f"torus{n}", tuple(f"x{i + 1}" for i in range(n)),
                  ((0.0, 2.0 * math.pi),) * n, (True,) * n)
    comps = _parse_components({(i, i): "1" for i in range(n)}, chart, ())
    return MetricField(f"flat_torus({n})", chart, comps, (n, 0),
                       expected_chi=0, default_resolution=(16,) * n)


def perturbed_torus(n):
    """Flat n-torus plus an amp-scaled trigonometric perturbation.

    Positive definite for amp below roughly 1 / (1 + (n-1)/2); catalog
    defaults keep a wide margin.
    """
    n = int(n)
    if not 2 <= n <= 6:
        raise ConfigError("perturbed_torus dimension must be between 2 and 6")
    chart = Chart(f"torus{n}", tuple(f"x{i + 1}" for i in range(n)),
                  ((0.0, 2.0 * math.pi),) * n, (True,) * n)
    params = (("amp", 0.2),)
    entries = {}
    for i in range(n):
        partner = chart.coords[(i + 1) % n]
        entries[(i, i)] = f"1 + amp*cos({chart.coords[i]} + 2*{partner})"
    for i in range(n):
        for j in range(i + 1, n):
            phase = 0.3 * (i + j + 1)
            entries[(i, j)] = (f"amp*0.5*sin({chart.coords[i]} + "
                               f"{chart.coords[j]} + {phase:.1f})")
    comps = _parse_components(entries, chart, params)
    res = {2: (32, 32), 3: (16, 16, 16), 4: (12, 12, 12, 12)}.get(n, (8,) * n)
    return MetricField(f"perturbed_torus({n})", chart, comps, (n, 0), params,
                       expected_chi=0, family_params=("amp",),
                       default_resolution=res)


def _rename_field(m, suffix):
    """Suffix every coordinate and parameter name of a field."""
    coord_map = {c: f"{c}{suffix}" for c in m.chart.coords}
    param_map = {p: f"{p}{suffix}" for p, _ in m.parameters}
    mapping = {**coord_map, **param_map}
    chart = Chart(f"{m.chart.name}{suffix}",
                  tuple(coord_map[c] for c in m.chart.coords),
                  m.chart.domain, m.chart.periodic, m.chart.measure_note)
    seen = {}

    def rename(node):
        key = id(node)
        if key not in seen:
            seen[key] = exprlang.rename_variables(node, mapping)
        return seen[key]

    comps = tuple(tuple(rename(e) for e in row) for row in m.components)
    params = tuple((param_map[p], v) for p, v in m.parameters)
    family = tuple(param_map[p] for p in m.family_params)
    return MetricField(m.name, chart, comps, m.signature, params,
                       m.expected_chi, family, m.default_resolution)


def product(a, b):
    """Block-diagonal product metric on the product chart.

    chi multiplies, signatures add; coordinates and parameters of the two
    factors get "_1"/"_2" suffixes.
    """
    fa = _rename_field(a, "_1")
    fb = _rename_field(b, "_2")
    chart = Chart(
        name=f"{fa.chart.name}x{fb.chart.name}",
        coords=fa.chart.coords + fb.chart.coords,
        domain=fa.chart.domain + fb.chart.domain,
        periodic=fa.chart.periodic + fb.chart.periodic,
        measure_note="; ".join(filter(None, [fa.chart.measure_note,
                                             fb.chart.measure_note])),
    )
    na, nb = fa.dim, fb.dim
    zero = exprlang.const(0.0)
    rows = []
    for i in range(na):
        rows.append(tuple(fa.components[i]) + (zero,) * nb)
    for i in range(nb):
        rows.append((zero,) * na + tuple(fb.components[i]))
    chi = None
    if a.expected_chi is not None and b.expected_chi is not None:
        chi = a.expected_chi * b.expected_chi
    return MetricField(
        name=f"product({a.name},{b.name})",
        chart=chart,
        components=tuple(rows),
        signature=(fa.signature[0] + fb.signature[0],
                   fa.signature[1] + fb.signature[1]),
        parameters=fa.parameters + fb.parameters,
        expected_chi=chi,
        family_params=fa.family_params + fb.family_params,
        default_resolution=fa.default_resolution + fb.default_resolution,
    )


def scaled(m, lam):
    """Componentwise scaling g -> lam^2 g (homogeneity probe)."""
    lam = float(lam)
    if not lam > 0:
        raise ConfigError("scaling factor lam must be positive")
    factor = exprlang.const(lam * lam)
    seen = {}

    def scale(node):
        key = id(node)
        if key not in seen:
            seen[key] = exprlang.ExprNode("binary", "*", (factor, node))
        return seen[key]

    comps = tuple(tuple(scale(e) for e in row) for row in m.components)
    return MetricField(f"scaled({m.name},{lam:g})", m.chart, comps,
                       m.signature, m.parameters, m.expected_chi,
                       m.family_params, m.default_resolution)


def sign_flip(m):
    """Negate all components, turning signature (p, q) into (q, p)."""
    seen = {}

    def neg(node):
        key = id(node)
        if key not in seen:
            seen[key] = exprlang.ExprNode("unary", "-", (node,))
        return seen[key]

    comps = tuple(tuple(neg(e) for e in row) for row in m.components)
    return MetricField(f"sign_flip({m.name})", m.chart, comps,
                       (m.signature[1], m.signature[0]), m.parameters,
                       m.expected_chi, m.family_params, m.default_resolution)


_BUILDERS = {
    "sphere2": (sphere2, 0, 0),
    "sphere3": (sphere3, 0, 0),
    "sphere4": (sphere4, 0, 0),
    "flat_torus": (flat_torus, 1, 0),
    "perturbed_torus": (perturbed_torus, 1, 0),
    "product": (product, 0, 2),
    "scaled": (None, 0, 1),        # needs the lam kwarg, handled below
    "sign_flip": (sign_flip, 0, 1),
    "cylinder": (cylinder_extend, 0, 1),
}

_SPEC_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                         r"|(?P<num>-?(?:\d+\.?\d*|\.\d+))"
                         r"|(?P<punct>[(),=]))")


def _tokenize_spec(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _SPEC_TOKEN.match(src, pos)
        if m is None:
            raise ConfigError(f"bad catalog name near offset {pos} in {src!r}")
        if m.lastgroup == "name":
            tokens.append(("name", m.group("name")))
        elif m.lastgroup == "num":
            tokens.append(("num", float(m.group("num"))))
        else:
            tokens.append(("punct", m.group("punct")))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _SpecParser:
    def __init__(self, tokens, src):
        self.tokens = tokens
        self.src = src
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        field = self.spec()
        if self.peek()[0] != "end":
            raise ConfigError(f"trailing input in catalog name {self.src!r}")
        return field

    def spec(self):
        kind, name = self.next()
        if kind != "name":
            raise ConfigError(f"expected a catalog name in {self.src!r}")
        if name not in _BUILDERS:
            raise ConfigError(f"unknown catalog entry {name!r}")
        args, kwargs = [], {}
        if self.peek() == ("punct", "("):
            self.next()
            while True:
                kind, val = self.peek()
                if kind == "name" and self.tokens[self.i + 1] == ("punct", "="):
                    key = self.next()[1]
                    self.next()
                    nkind, nval = self.next()
                    if nkind != "num":
                        raise ConfigError(f"parameter {key!r} needs a numeric value")
                    kwargs[key] = nval
                elif kind == "num":
                    args.append(self.next()[1])
                elif kind == "name":
                    args.append(self.spec())
                else:
                    raise ConfigError(f"unexpected token in catalog name {self.src!r}")
                if self.peek() == ("punct", ","):
                    self.next()
                    continue
                if self.peek() == ("punct", ")"):
                    self.next()
                    break
                raise ConfigError(f"expected ',' or ')' in catalog name {self.src!r}")
        return _build(name, args, kwargs)


def _build(name, args, kwargs):
    builder, n_num, n_fields = _BUILDERS[name]
    fields = [a for a in args if isinstance(a, MetricField)]
    numbers = [a for a in args if not isinstance(a, MetricField)]
    if len(fields) != n_fields or len(numbers) != n_num:
        raise ConfigError(
            f"{name} takes {n_fields} metric argument(s) and "
            f"{n_num} numeric argument(s)")
    if name == "scaled":
        if set(kwargs) != {"lam"}:
            raise ConfigError("scaled(...) requires exactly the lam=... argument")
        return scaled(fields[0], kwargs["lam"])
    result = builder(*numbers, *fields)
    if kwargs:
        result = with_parameter_defaults(result, kwargs)
    return result


def with_parameter_defaults(m, values):
    """Copy of a field with some parameter defaults overridden."""
    known = dict(m.parameters)
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"unknown parameters for {m.name!r}: {sorted(unknown)}")
    known.update({k: float(v) for k, v in values.items()})
    params = tuple((name, known[name]) for name, _ in m.parameters)
    return MetricField(m.name, m.chart, m.components, m.signature, params,
                       m.expected_chi, m.family_params, m.default_resolution)


def catalog(name, params=None):
    """Build a catalog metric from its (possibly nested) name.

    params overrides parameter defaults, e.g. catalog("sphere2", {"t": 0.2}).
    """
    field = _SpecParser(_tokenize_spec(name), name).parse()
    if params:
        field = with_parameter_defaults(field, params)
    return field


def catalog_names():
    return sorted(_BUILDERS)


def gbc_expected_value(m, k):
    """Expected value of the top Pfaffian integral for a catalog metric.

    Requires dim = 2k and a known Euler characteristic; the signature
    factor is (-1)^(n_minus/2) for even n_minus and 0 for odd n_minus.
    """
    if m.dim != 2 * k:
        raise ConfigError(f"dim {m.dim} != 2k for k={k}; no integral theorem applies")
    if m.expected_chi is None:
        raise ConfigError(f"no recorded Euler characteristic for {m.name!r}")
    n_minus = m.signature[1]
    if n_minus % 2 == 1:
        return 0.0
    return float((-1) ** (n_minus // 2) * m.expected_chi)
