"""Stagewise construction of universal coefficient streams.

Each stage appends one block of Taylor coefficients to an append-only
stream so that the partial sum at a prescribed rank looks like the stage's
target on a compact outside the domain while staying small on an inner
compact that exhausts the domain.  Blocks are multiples of (z_i0 - c_i0)^e
with e past the degree box of everything already frozen, which keeps every
earlier partial sum bit-identical and makes the stage cut an exact index
filter.

Certificate semantics: each stage's errors are re-measured on the finished
stream, so the E-side numbers double as a frozen-prefix check and the
F-side numbers quantify how much the later corrections disturb the earlier
truncations on their inner compacts.  Re-expanding a multi-stage stream
about a different interior point mixes astronomically large cross-terms
into low ranks, so varying-center sups are only offered for single-stage
runs; there the final rank captures the whole polynomial and the inner-side
error vanishes identically at every center.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass

from .geometry import (
    DomainProduct,
    ProductCompact,
    center_grid,
    compact_from_json,
    enumerate_Tm,
    exhaustion_M,
    sup_norm,
)
from .mergelyan import fit, glue_target
from .multiindex import Enumeration, IndexSet, SparseIndexError, family_Fl
from .poly import CoefficientStream, Poly, partial_sum

CERT_FORMAT = "taylorlab-certificate-v1"

VARIANTS = ("plain", "strong", "infty")

_Z_DENSITY = {1: 400, 2: 80, 3: 24}
_W_DENSITY = {1: 32, 2: 10}


@dataclass
class StageRequest:
    """One stage: look like `target` on `outer` (a compact with one factor
    kept away from the domain) while the finished stream stays close to the
    truncation on `inner`, both within the same tolerance."""

    target: Poly
    outer: ProductCompact
    inner: ProductCompact
    tolerance: float
    budgets: list

    def validate(self, domain: DomainProduct, r: int, variant: str):
        d = domain.dim
        if (self.target.r, self.target.d) != (r, d):
            raise ValueError("stage target arity does not match the plan")
        if self.outer.dim != d or self.inner.dim != d:
            raise ValueError("stage compacts must match the domain dimension")
        i0 = self.outer.disjoint_factor
        if i0 is None:
            raise ValueError("the outer compact needs a flagged factor that "
                             "stays off the domain")
        if not self.tolerance > 0:
            raise ValueError("stage tolerance must be positive")
        if not self.budgets or sorted(self.budgets) != list(self.budgets):
            raise ValueError("stage budgets must be a nonempty ascending list")

        # sampled separation checks; the fit would quietly produce garbage
        # on geometry that violates them
        dom = domain.factors[i0]
        K = self.outer.factors[i0]
        # strict for the closure variant, open-set disjointness otherwise
        slack = -1e-9 if variant == "infty" else 0.0
        for z in K.sample_boundary(n=128):
            if dom.contains(z, tol=slack):
                raise ValueError(
                    f"outer factor {i0} reaches into the domain near "
                    f"{complex(z):.4g}")
        probes = [dom.center_point()]
        for p in (1, 3, 6):
            probes.extend(dom.exhaustion_factor(p).sample_boundary(n=64))
        if any(K.contains(z) for z in probes):
            raise ValueError(
                f"outer factor {i0} overlaps the domain factor interior")
        # the closure variant works with seminorms on closure truncations,
        # so its inner compacts may touch the boundary
        inner_slack = -1e-9 if variant == "infty" else 0.0
        for i, f in enumerate(self.inner.factors):
            for z in f.sample_boundary(n=128):
                if not domain.factors[i].contains(z, tol=inner_slack):
                    raise ValueError(
                        f"inner factor {i} leaves the open domain near "
                        f"{complex(z):.4g}")


@dataclass
class StagePlan:
    domain: DomainProduct
    enum: Enumeration
    mu: IndexSet
    center: tuple
    requests: list
    r: int = 0
    w_compact: ProductCompact | None = None
    variant: str = "plain"
    l: int = 0
    fixed_center: bool = True
    name: str = "construction"
    seed: int = 0
    cert_density: int = 0

    def ops(self):
        if self.variant == "plain" or self.l == 0:
            return []
        return [op for op in family_Fl(self.r, self.domain.dim, self.l)
                if not op.is_identity]


def plan_stages(domain, requests, enum=None, mu=None, center=None, r=0,
                w_compact=None, variant="plain", l=0, fixed_center=True,
                name="construction", seed=0, cert_density=0) -> StagePlan:
    """Validate a construction request and freeze it as a plan.

    Only graded enumerations are accepted: the frozen-prefix argument rests
    on total degree deciding rank order, and nothing downstream re-checks
    it.  Stages run in schedule order; the divisor exponents that keep each
    block past the previous capture index depend on fitted degrees and are
    assigned as the stages run (recorded per stage).  The inner-side error
    bookkeeping assumes the inner compacts are nested along the schedule,
    as an exhaustion is; the certificate measures the true sups either way.
    """
    d = domain.dim
    if d < 1:
        raise ValueError("the construction needs at least one z coordinate")
    enum = enum or Enumeration(d, "graded-lex")
    if enum.d != d:
        raise ValueError("enumeration dimension does not match the domain")
    if not enum.is_graded:
        raise ValueError(
            f"enumeration '{enum.scheme}' is not graded; stage blocks could "
            "land below the frontier")
    mu = mu or IndexSet("all")
    center = tuple(complex(v) for v in (center or (0.0,) * d))
    if len(center) != d:
        raise ValueError("center must have one entry per z coordinate")
    if not domain.contains(center):
        raise ValueError("the reference center must lie inside the domain")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if l < 0:
        raise ValueError("derivative order bound must be a natural number")
    if r < 0:
        raise ValueError("parameter count must be a natural number")
    if r > 0 and (w_compact is None or w_compact.dim != r):
        raise ValueError("parameterized plans need a w compact of arity r")
    if not requests:
        raise ValueError("a plan needs at least one stage")
    if not fixed_center and len(requests) > 1:
        raise ValueError(
            "varying-center sups are only supported for single-stage plans; "
            "later truncations explode away from the reference center")
    for req in requests:
        req.validate(domain, r, variant)
    return StagePlan(domain, enum, mu, center, list(requests), r, w_compact,
                     variant, int(l), bool(fixed_center), str(name),
                     int(seed), int(cert_density))


# ------------------------------------------------------------------ stages


def _stream_degrees(stream: CoefficientStream):
    degs = [0] * stream.d
    found = False
    for b in stream.blocks:
        for k in b.coeffs:
            m = stream.enum.unrank(k)
            degs = [max(a, v) for a, v in zip(degs, m)]
            found = True
    return degs if found else None


def _stage_tolerances(requests):
    """Per-stage [inner, outer] fit tolerances.

    Half of each stage's tolerance goes to the outer fit (the other half is
    headroom for the denser certificate grid).  The inner piece of stage s
    perturbs the F-side of every stage before it (never its own, which only
    sees later corrections), so stages after the first get a geometric
    split of the earlier tolerances: the tail sum then stays under each of
    them.  The first stage's inner piece constrains nothing downstream and
    just keeps the start of the series tame.
    """
    T = len(requests)
    out = []
    for s, req in enumerate(requests, start=1):
        outer = 0.5 * req.tolerance
        earlier = [r.tolerance for r in requests[:s - 1]]
        inner = min(earlier) * 0.5 ** (T - s + 1) if earlier else outer
        out.append([min(inner, outer), outer])
    return out


def build_stage(stream: CoefficientStream, plan: StagePlan, req: StageRequest,
                stage_id: int, piece_tols: list | None = None) -> dict:
    """Fit one correction block, append it, and return the stage record.

    The divisor exponent clears both the degree box of the frozen prefix
    and the total degree at the current frontier rank, so the new block's
    ranks land strictly beyond the frontier for any graded enumeration.
    """
    enum, center, r = stream.enum, stream.center, stream.r
    frontier = stream.frontier
    if frontier >= 0:
        degs = _stream_degrees(stream) or [0] * stream.d
        e = sum(degs) + 1
        e = max(e, sum(enum.unrank(frontier)) + 1)
    else:
        e = 0

    i0 = req.outer.disjoint_factor
    c0 = center[i0]
    clearance = min(abs(complex(z) - c0)
                    for z in req.outer.factors[i0].sample_boundary(n=128))
    if clearance <= 1e-9:
        raise ValueError(
            f"stage {stage_id}: the divisor center {c0:.4g} touches the "
            "outer compact; its zero set would poison the fit")

    P = stream.poly()
    pieces = [(req.inner, Poly.zero(r, stream.d)), (req.outer, req.target - P)]
    if piece_tols is None:
        piece_tols = [req.tolerance, req.tolerance]
    task = glue_target(
        pieces, i0, req.budgets, max(piece_tols),
        r=r, w_compact=plan.w_compact, derivative_orders=tuple(plan.ops()),
        prefactor=(i0, c0, e), piece_tolerances=list(piece_tols))
    res = fit(task)

    Q = res.poly
    shifted = Q.shift_center(center) if any(v != 0 for v in center) else Q
    grouped: dict = {}
    for (we, ze), c in shifted.terms.items():
        grouped.setdefault(ze, {})[(we, ())] = c
    coeffs = {}
    for ze, terms in grouped.items():
        cp = Poly(r, 0)
        cp.terms = terms
        coeffs[enum.rank(ze)] = cp

    degs = [0] * stream.d
    prev = _stream_degrees(stream)
    if prev is not None:
        degs = prev
    q_degs = shifted.z_degrees()
    if q_degs is not None:
        degs = [max(a, v) for a, v in zip(degs, q_degs)]
    capture = enum.capture_index(tuple(degs))
    try:
        lam = plan.mu.next_at_or_after(capture)
    except SparseIndexError as exc:
        raise SparseIndexError(
            f"stage {stage_id}: the admissible index set has no member at or "
            f"after the capture rank {capture}") from exc

    stream.append_block(f"stage-{stage_id}", coeffs, lam)

    # the rank-lambda truncation must reproduce the stream exactly; this is
    # the F-side of the stage predicate at the reference center, and by the
    # capture property it holds coefficient for coefficient
    cap_delta = stream.partial_sum(lam) - stream.poly()
    capture_residual = max((abs(v) for v in cap_delta.terms.values()),
                           default=0.0)

    return {
        "stage": stage_id,
        "lambda": lam,
        "capture_index": capture,
        "capture_residual": capture_residual,
        "divisor_exponent": e,
        "budget": res.budget,
        "n_columns": res.n_columns,
        "cond": res.cond,
        "converged": res.converged,
        "fit_residual_inner": res.piece_residuals[0],
        "fit_residual_outer": res.piece_residuals[1],
        "fit_tolerance_inner": piece_tols[0],
        "fit_tolerance_outer": piece_tols[1],
        "tolerance": req.tolerance,
        "target": req.target.to_json(),
        "outer": req.outer.to_json(),
        "inner": req.inner.to_json(),
        "max_degree": max(sum(enum.unrank(k)) for b in stream.blocks
                          for k in b.coeffs) if any(
                              b.coeffs for b in stream.blocks) else 0,
    }


# -------------------------------------------------------------- certificate


class Certificate:
    """Self-describing record of a finished construction.

    Carries the domain, enumeration, center, admissible index set and every
    stage's target, compacts and measured errors, so an independent checker
    can recompute the sups from the stream alone.  The hash covers the
    whole body; there are no timestamps, so a rerun of the same scenario is
    byte-identical.
    """

    def __init__(self, header: dict, stages: list, summary: dict):
        self.header = header
        self.stages = stages
        self.summary = summary

    def body(self) -> dict:
        return {"header": self.header, "stages": self.stages,
                "summary": self.summary}

    @property
    def sha256(self) -> str:
        blob = json.dumps(self.body(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> dict:
        out = self.body()
        out["sha256"] = self.sha256
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Certificate":
        cert = cls(data["header"], data["stages"], data["summary"])
        cert.stored_hash = data.get("sha256")
        return cert

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "lambda", "e_side_error", "f_side_error",
                        "max_degree"])
            for s in self.stages:
                w.writerow([s["stage"], s["lambda"], repr(s["e_side_error"]),
                            repr(s["f_side_error"]), s["max_degree"]])


def _cert_grids(plan: StagePlan, K: ProductCompact):
    nz = plan.cert_density or _Z_DENSITY.get(K.dim, 12)
    zg = K.sample(n_per_factor=nz)
    wg = None
    nw = 0
    if plan.r > 0:
        nw = _W_DENSITY.get(plan.r, 6)
        wg = plan.w_compact.sample(n_per_factor=nw)
    return zg, wg, nz, nw


def _sup_with_ops(delta: Poly, zg, wg, ops) -> float:
    worst = sup_norm(delta, zg, wg)
    for op in ops:
        worst = max(worst, sup_norm(delta.diff(op), zg, wg))
    return worst


def run_construction(plan: StagePlan):
    """Run every stage, then measure and certify the finished stream.

    A stage the admissible index set cannot serve aborts the remaining
    schedule but still yields a partial certificate for what was built;
    a fit that misses its tolerance is recorded and construction goes on.
    """
    stream = CoefficientStream(plan.enum, plan.center, plan.r)
    tols = _stage_tolerances(plan.requests)
    records = []
    aborted = None
    for idx, (req, tol) in enumerate(zip(plan.requests, tols), start=1):
        try:
            records.append(build_stage(stream, plan, req, idx,
                                       piece_tols=tol))
        except SparseIndexError as exc:
            aborted = {"stage": idx, "reason": str(exc)}
            break

    final = stream.poly()
    ops = plan.ops()
    e_ops = ops if plan.variant == "strong" else []
    f_ops = ops if plan.variant in ("strong", "infty") else []

    for req, rec in zip(plan.requests, records):
        zT, wg, nz, nw = _cert_grids(plan, req.outer)
        zM, _, _, _ = _cert_grids(plan, req.inner)
        P_t = stream.partial_sum(rec["lambda"])
        rec["e_side_error"] = _sup_with_ops(P_t - req.target, zT, wg, e_ops)
        rec["f_side_error"] = _sup_with_ops(P_t - final, zM, wg, f_ops)
        rec["pass_e"] = rec["e_side_error"] <= req.tolerance
        rec["pass_f"] = rec["f_side_error"] <= req.tolerance
        rec["density"] = {"nz_per_factor": nz, "nw_per_factor": nw,
                          "nz_points": len(zT.points),
                          "nw_points": len(wg.points) if wg else 0}
        if not plan.fixed_center:
            centers = center_grid(req.inner)
            ve = vf = 0.0
            for zeta in centers:
                S = partial_sum(final, zeta, rec["lambda"], plan.enum)
                ve = max(ve, _sup_with_ops(S - req.target, zT, wg, e_ops))
                vf = max(vf, _sup_with_ops(S - final, zM, wg, f_ops))
            rec["varying_center"] = {
                "n_centers": len(centers),
                "e_side_error": ve,
                "f_side_error": vf,
            }

    header = {
        "format": CERT_FORMAT,
        "name": plan.name,
        "enumeration": plan.enum.tag,
        "d": plan.domain.dim,
        "r": plan.r,
        "center": [[v.real, v.imag] for v in plan.center],
        "mu": plan.mu.tag,
        "variant": plan.variant,
        "l": plan.l,
        "fixed_center": plan.fixed_center,
        "domain": plan.domain.to_json(),
        "w_compact": plan.w_compact.to_json() if plan.w_compact else None,
        "seed": plan.seed,
        "cert_density": plan.cert_density,
    }
    summary = {
        "stages": len(records),
        "frontier": stream.frontier,
        "final_degree": final.total_z_degree(),
        "final_term_count": len(final.terms),
        "final_capture": plan.enum.capture_index(final.z_degrees())
        if not final.is_zero else 0,
        "e_side_max": max((r["e_side_error"] for r in records), default=0.0),
        "f_side_max": max((r["f_side_error"] for r in records), default=0.0),
        "all_pass": aborted is None and all(
            r["pass_e"] and r["pass_f"] for r in records),
        "aborted": aborted,
    }
    return stream, Certificate(header, records, summary)


# ---------------------------------------------------------------- scenarios


def _scenario_compact(spec, domain: DomainProduct, variant: str,
                      outer: bool) -> ProductCompact:
    """Resolve a scenario compact: canonical-family shorthand, a product
    record, or a bare planar compact for one-dimensional domains."""
    closure = variant == "infty"
    if isinstance(spec, dict) and spec.get("family") == "tm":
        return enumerate_Tm(domain, int(spec["m"]), closure)
    if isinstance(spec, dict) and spec.get("family") == "mp":
        return exhaustion_M(domain, int(spec["p"]), closure)
    if isinstance(spec, dict) and "factors" in spec:
        K = ProductCompact.from_json(spec)
    else:
        K = ProductCompact([compact_from_json(spec)])
    if outer and K.disjoint_factor is None:
        if K.dim == 1:
            K.disjoint_factor = 0
        else:
            raise ValueError("an outer compact on a multi-factor domain "
                             "must flag its disjoint factor")
    return K


def _scenario_target(spec, r: int, d: int, resolver=None) -> Poly:
    if isinstance(spec, str):
        if spec.startswith("catalog:") and resolver is not None:
            return resolver(int(spec.split(":", 1)[1]))
        raise ValueError(f"cannot resolve target {spec!r} here")
    if isinstance(spec, dict) and "constant" in spec:
        re, im = spec["constant"]
        return Poly.constant(complex(re, im), r, d)
    return Poly.from_json(spec)


def plan_from_scenario(data: dict, target_resolver=None) -> StagePlan:
    """Build a plan from a parsed scenario file.

    `target_resolver` maps a catalog index to a Poly when stages name their
    targets as "catalog:j"."""
    domain = DomainProduct.from_json(data["domain"])
    d = domain.dim
    enum = Enumeration.from_tag(data.get("enumeration", "graded-lex"), d)
    mu = IndexSet.from_tag(data.get("mu", "mu:all"))
    center = [complex(re, im) for re, im in
              data.get("center", [[0.0, 0.0]] * d)]
    r = int(data.get("r", 0))
    variant = data.get("variant", "plain")
    w_compact = (ProductCompact.from_json(data["w_compact"])
                 if data.get("w_compact") else None)
    requests = []
    for s in data["stages"]:
        requests.append(StageRequest(
            target=_scenario_target(s["target"], r, d, target_resolver),
            outer=_scenario_compact(s["outer"], domain, variant, outer=True),
            inner=_scenario_compact(s["inner"], domain, variant, outer=False),
            tolerance=float(s["tolerance"]),
            budgets=list(s["budgets"])))
    return plan_stages(
        domain, requests, enum=enum, mu=mu, center=center, r=r,
        w_compact=w_compact, variant=variant,
        l=int(data.get("l", 0)),
        fixed_center=bool(data.get("fixed_center", True)),
        name=data.get("name", "construction"),
        seed=int(data.get("seed", 0)),
        cert_density=int(data.get("cert_density", 0)))
