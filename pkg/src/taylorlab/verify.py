"""Direct evaluation of the universality membership predicates.

Everything a constructed stream claims can be re-asked of an explicit
polynomial: does the partial sum at rank n imitate the j-th catalog
polynomial on the m-th outer compact (check_E), and does it return to the
candidate itself on the inner exhaustion (check_F)?  Both predicates work
on sampled grids and always report the achieved sup next to the boolean,
so the rigor gap of sampling stays visible.  The catalog realizes "every
polynomial with rational coefficients" through one documented pairing,
slice_AD_residual gives a cheap non-holomorphy indicator for function
tables on product compacts, and verify_certificate replays a finished
certificate against its coefficient stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    DomainProduct,
    ProductCompact,
    center_grid,
    enumerate_Tm,
    exhaustion_M,
    sup_norm,
)
from .multiindex import Enumeration, cantor_unpair, family_Fl, tuple_unpair
from .poly import CoefficientStream, Poly, partial_sum

VARIANTS = ("plain", "strong", "infty")

# default per-factor sample counts; a positive density argument overrides
_Z_DENSITY = {1: 128, 2: 16, 3: 8}
_W_DENSITY = {1: 16, 2: 8}


# ------------------------------------------------------------ the catalog


def _rational(code: int) -> float:
    """code -> num / den with num zigzagging through 0, -1, 1, -2, 2, .."""
    a, b = cantor_unpair(code)
    num = ((a + 1) // 2) * (-1 if a % 2 else 1)
    return num / (b + 1)


def catalog_poly(j: int, r: int = 0, d: int = 1) -> Poly:
    """The j-th polynomial with rational-coordinate coefficients.

    Pairing, fixed once and documented here: j - 1 unpairs into (L, c);
    c unfolds into L + 1 coefficient codes, one per monomial, attached to
    the first L + 1 graded-lex exponents over the joint (w, z) coordinates;
    each coefficient code unpairs into real/imaginary rational codes, and a
    rational code unpairs into a zigzag integer numerator (0, -1, 1, -2,
    2, ..) and a denominator b + 1.  Every finite polynomial with rational
    coordinates appears: pad its coefficient list with zeros to any longer
    graded-lex prefix and each padding gives another index mapping to it.
    j = 1 is the zero polynomial.
    """
    if j < 1:
        raise ValueError("catalog index starts at 1")
    if r < 0 or d < 0 or r + d == 0:
        raise ValueError("catalog needs at least one coordinate")
    L, c = cantor_unpair(j - 1)
    codes = tuple_unpair(c, L + 1)
    joint = Enumeration(r + d, "graded-lex")
    out = Poly.zero(r, d)
    for t, code in enumerate(codes):
        u, v = cantor_unpair(code)
        coeff = complex(_rational(u), _rational(v))
        if coeff == 0:
            continue
        m = joint.unrank(t)
        out = out + Poly.monomial(r, d, m[:r], m[r:], coeff)
    return out


# -------------------------------------------------------------- predicates


@dataclass(frozen=True)
class PredicateSpec:
    """Index bundle for one membership predicate.

    tau picks the parameter exhaustion compact, p the inner exhaustion
    (expansion centers), m the outer compact, j the catalog target, s the
    tolerance 1/s, n the partial-sum rank.  variant selects plain sups,
    derivative sups over the order-l family (strong), or derivative sups
    with closure-truncation grids (infty).  A fixed_center collapses the
    center set to one point.
    """

    tau: int = 1
    p: int = 1
    m: int = 1
    j: int = 1
    s: int = 1
    n: int = 0
    variant: str = "plain"
    l: int | None = None
    fixed_center: tuple | None = None

    def __post_init__(self):
        for name in ("tau", "p", "m", "j", "s"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a natural number, got {self.n!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant != "plain":
            if self.l is None or self.l < 1:
                raise ValueError("derivative variants need l >= 1")
        elif self.l is not None:
            raise ValueError("l only applies to the strong/infty variants")
        if self.fixed_center is not None:
            object.__setattr__(self, "fixed_center",
                               tuple(complex(v) for v in self.fixed_center))

    def to_json(self) -> dict:
        out = {"tau": self.tau, "p": self.p, "m": self.m, "j": self.j,
               "s": self.s, "n": self.n, "variant": self.variant}
        if self.l is not None:
            out["l"] = self.l
        if self.fixed_center is not None:
            out["fixed_center"] = [[v.real, v.imag] for v in self.fixed_center]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PredicateSpec":
        fc = data.get("fixed_center")
        if fc is not None:
            fc = tuple(complex(re, im) for re, im in fc)
        return cls(tau=int(data.get("tau", 1)), p=int(data.get("p", 1)),
                   m=int(data.get("m", 1)), j=int(data.get("j", 1)),
                   s=int(data.get("s", 1)), n=int(data.get("n", 0)),
                   variant=data.get("variant", "plain"),
                   l=data.get("l"), fixed_center=fc)


def predicate_grids(kind: str, spec: PredicateSpec, domain: DomainProduct,
                    w_domain: DomainProduct | None = None, density: int = 0):
    """Sample sets for one predicate: (centers, w-grid, z-grid, info).

    E-kind z-grid is the m-th outer compact (built off the closures for the
    infty variant); F-kind is the p-th inner exhaustion, or the closure
    truncated at radius l for the infty variant.  The w-grid is the tau-th
    exhaustion of the parameter domain (same truncation rule), absent
    without parameters.  Centers sample the p-th inner exhaustion, or
    collapse to the spec's fixed center.
    """
    if kind not in ("E", "F"):
        raise ValueError(f"predicate kind must be 'E' or 'F', got {kind!r}")
    closed = spec.variant == "infty"
    nz = density or _Z_DENSITY.get(domain.dim, 8)
    if kind == "E":
        zK = enumerate_Tm(domain, spec.m, closure_variant=closed)
    elif closed:
        zK = exhaustion_M(domain, spec.l, closure_variant=True)
    else:
        zK = exhaustion_M(domain, spec.p)
    zg = zK.sample(n_per_factor=nz)

    wg = None
    nw = 0
    if w_domain is not None and w_domain.dim > 0:
        nw = density or _W_DENSITY.get(w_domain.dim, 6)
        if closed and kind == "F":
            wK = exhaustion_M(w_domain, spec.l, closure_variant=True)
        else:
            wK = exhaustion_M(w_domain, spec.tau)
        wg = wK.sample(n_per_factor=nw)

    if spec.fixed_center is not None:
        centers = [spec.fixed_center]
    else:
        centers = center_grid(exhaustion_M(domain, spec.p))
    info = {"nz_per_factor": nz, "nw_per_factor": nw,
            "nz_points": len(zg), "nw_points": len(wg) if wg else 0,
            "n_centers": len(centers)}
    return centers, wg, zg, info


def _ops_for(kind: str, spec: PredicateSpec, r: int, d: int):
    if spec.variant == "plain":
        return []
    if spec.variant == "strong" or kind == "F":
        return family_Fl(r, d, spec.l)
    return []


def _sup_ops(delta: Poly, zg, wg, ops) -> float:
    worst = sup_norm(delta, zg, wg)
    for op in ops:
        if op.is_identity:
            continue
        worst = max(worst, sup_norm(delta.diff(op), zg, wg))
    return worst


def _run_predicate(kind, f, spec, domain, w_domain, density, enum,
                   catalog, centers):
    if enum is None:
        enum = Enumeration(f.d, "graded-lex")
    if kind == "E":
        resolve = catalog or (lambda i: catalog_poly(i, f.r, f.d))
        target = resolve(spec.j)
        if target.r != f.r or target.d != f.d:
            raise ValueError("catalog target has mismatched coordinates")
    else:
        target = f
    grid_centers, wg, zg, info = predicate_grids(
        kind, spec, domain, w_domain, density)
    if centers is None:
        centers = grid_centers
    else:
        info = dict(info, n_centers=len(centers))
    ops = _ops_for(kind, spec, f.r, f.d)
    worst = 0.0
    for zeta in centers:
        S = partial_sum(f, zeta, spec.n, enum)
        worst = max(worst, _sup_ops(S - target, zg, wg, ops))
    return worst < 1.0 / spec.s, worst, info


def check_E(f: Poly, spec: PredicateSpec, domain: DomainProduct,
            w_domain: DomainProduct | None = None, density: int = 0,
            enum: Enumeration | None = None, catalog=None,
            centers=None) -> tuple[bool, float]:
    """Does the rank-n partial sum imitate the j-th catalog polynomial?

    Samples sup |D(S_n(f, w, zeta)(z) - f_j(w, z))| over centers zeta in
    the p-th inner compact, parameters w in the tau-th exhaustion of
    w_domain, points z in the m-th outer compact, and (strong variant)
    the derivative family of order l.  Returns (sup < 1/s, sup).  A
    `catalog` callable overrides the built-in index -> Poly resolution;
    an explicit `centers` list overrides the sampled center set.
    """
    passed, sup, _ = _run_predicate("E", f, spec, domain, w_domain,
                                    density, enum, catalog, centers)
    return passed, sup


def check_F(f: Poly, spec: PredicateSpec, domain: DomainProduct,
            w_domain: DomainProduct | None = None, density: int = 0,
            enum: Enumeration | None = None,
            centers=None) -> tuple[bool, float]:
    """Does the rank-n partial sum return to the candidate itself?

    Same sampling as check_E with f in place of the catalog target and the
    inner exhaustion as the z-grid; the infty variant instead sups the
    order-l derivative family over the closure truncated at radius l.
    Returns (sup < 1/s, sup).
    """
    passed, sup, _ = _run_predicate("F", f, spec, domain, w_domain,
                                    density, enum, None, centers)
    return passed, sup


def predicate_record(kind: str, f: Poly, spec: PredicateSpec,
                     domain: DomainProduct,
                     w_domain: DomainProduct | None = None,
                     density: int = 0, enum: Enumeration | None = None,
                     catalog=None) -> dict:
    """One JSON-ready result row: {spec, achieved, pass, grid_density}."""
    passed, sup, info = _run_predicate(
        kind, f, spec, domain, w_domain, density, enum,
        catalog if kind == "E" else None, None)
    return {"spec": dict(spec.to_json(), predicate=kind),
            "achieved": sup, "pass": passed, "grid_density": info}


# ----------------------------------------------------------- slice residual


def slice_AD_residual(fn, K: ProductCompact, axis: int,
                      density: int = 256, others_per_factor: int = 4) -> float:
    """Worst discrete Cauchy residual over slices along one coordinate.

    For each fixed choice of the other coordinates, values of the slice at
    interior probe points are predicted by trapezoid quadrature of the
    Cauchy integral over a concentric circle at 0.8 of the factor
    inradius; probes sit at the circle center and at half its radius.  The
    result is max |predicted - sampled|.  Holomorphic slices come back at
    quadrature accuracy; conj(z) leaves the probe offset itself, since its
    prediction is constant at conj(center).  Factors without interior
    along the axis are rejected.
    """
    if not 0 <= axis < K.dim:
        raise ValueError("axis out of range")
    if density < 8:
        raise ValueError("need at least 8 quadrature nodes")
    c, rho = K.factors[axis].interior_circle(0.8)
    theta = 2.0 * np.pi * np.arange(density) / density
    nodes = c + rho * np.exp(1j * theta)
    probes = np.concatenate(
        [[c], c + 0.5 * rho * np.exp(2j * np.pi * np.arange(8) / 8)])

    others = []
    for i, f in enumerate(K.factors):
        if i != axis:
            others.append([complex(z)
                           for z in f.sample_boundary(n=others_per_factor)])
    combos = [()]
    for col in others:
        combos = [pre + (z,) for pre in combos for z in col]

    worst = 0.0
    for combo in combos:
        def at(z, combo=combo):
            return complex(fn(combo[:axis] + (complex(z),) + combo[axis:]))

        vals = np.array([at(z) for z in nodes])
        for z0 in probes:
            pred = np.mean(vals * (nodes - c) / (nodes - z0))
            worst = max(worst, abs(pred - at(z0)))
    return float(worst)


# ------------------------------------------------------- certificate replay


def verify_certificate(stream: CoefficientStream, cert) -> bool:
    """Recompute every stage predicate of a certificate from its stream.

    Grids are rebuilt from the recorded compacts and densities; each
    recomputed sup must land within 1e-12 of the recorded value and under
    the stage tolerance.  A certificate whose enumeration or center does
    not match the stream is refused (raised, not False); a stored whole-
    body hash that no longer matches fails immediately.  A certificate
    with no stages verifies vacuously.
    """
    h = cert.header
    if h.get("enumeration") != stream.enum.tag:
        raise ValueError(
            "verification refused: certificate enumeration "
            f"{h.get('enumeration')!r} does not match the stream's "
            f"{stream.enum.tag!r}")
    center = tuple(complex(re, im) for re, im in h.get("center", []))
    if center != stream.center:
        raise ValueError("verification refused: certificate center does not "
                         "match the stream's expansion center")

    stored = getattr(cert, "stored_hash", None)
    if stored is not None and stored != cert.sha256:
        return False
    if not cert.stages:
        return True

    r, d = int(h["r"]), int(h["d"])
    variant = h.get("variant", "plain")
    l = int(h.get("l", 0) or 0)
    ops = family_Fl(r, d, l) if variant != "plain" and l > 0 else []
    e_ops = ops if variant == "strong" else []
    f_ops = ops if variant in ("strong", "infty") else []
    wj = h.get("w_compact")
    w_compact = ProductCompact.from_json(wj) if wj else None
    final = stream.poly()

    for rec in cert.stages:
        outer = ProductCompact.from_json(rec["outer"])
        inner = ProductCompact.from_json(rec["inner"])
        target = Poly.from_json(rec["target"])
        nz = int(rec["density"]["nz_per_factor"])
        nw = int(rec["density"]["nw_per_factor"])
        zT = outer.sample(n_per_factor=nz)
        zM = inner.sample(n_per_factor=nz)
        wg = w_compact.sample(n_per_factor=nw) if w_compact else None
        P = stream.partial_sum(int(rec["lambda"]))
        e = _sup_ops(P - target, zT, wg, e_ops)
        fv = _sup_ops(P - final, zM, wg, f_ops)
        tol = float(rec["tolerance"])
        if abs(e - rec["e_side_error"]) > 1e-12 or e > tol:
            return False
        if abs(fv - rec["f_side_error"]) > 1e-12 or fv > tol:
            return False
        vc = rec.get("varying_center")
        if vc is not None:
            ve = vf = 0.0
            for zeta in center_grid(inner):
                S = partial_sum(final, zeta, int(rec["lambda"]), stream.enum)
                ve = max(ve, _sup_ops(S - target, zT, wg, e_ops))
                vf = max(vf, _sup_ops(S - final, zM, wg, f_ops))
            if abs(ve - vc["e_side_error"]) > 1e-12 or ve > tol:
                return False
            if abs(vf - vc["f_side_error"]) > 1e-12 or vf > tol:
                return False
    return True
