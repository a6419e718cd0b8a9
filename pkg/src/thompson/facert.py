"""Machine-checkable fixed-point certificates for T and V.

Serre's criterion reduces the fixed-point property for a group acting on
a simplicial tree to finitely many group-side facts: a finite generating
set whose generators and pairwise products are all elliptic forces a
global fixed point.  Ellipticity itself is certified by one of a few
computable routes:

* small      -- the element is the identity on a standard dyadic interval;
                elements supported in a proper subinterval conjugate into
                arbitrarily small supports, which pins down any would-be
                axis, so small elements are elliptic in every action.
* finite order
* conjugate-small -- a conjugate is small (fixed sets translate).
* commuting factors with disjoint supports -- each factor is elliptic and
                stabilizes the other's fixed subtree, so they share a
                fixed point and the product is elliptic.
* conjugation chain -- for a product b*k: if k^-1 b k b is small and b has
                finite order, then Fix(k^-1 b k) meets Fix(b), i.e.
                k^-1 Fix(b) meets Fix(b), which in a tree forces
                Fix(k^-1) to meet Fix(b); hence b*k is elliptic.

A certificate stores the full cell maps, so re-verification is hermetic:
every claim is recomputed from the raw maps, never trusted from the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dyadic import StdInterval, UNIT, LEFT_HALF
from .elements import (
    CellMap,
    arc_subgroup_generators,
    standard_generator,
)

__all__ = [
    "EllipticEvidence",
    "FACertificate",
    "CertificateFailure",
    "NoEvidence",
    "elliptic_evidence",
    "verify_evidence",
    "t_certificate",
    "v_certificate",
    "verify_certificate",
    "certificate_to_text",
    "certificate_from_text",
    "audit_lines",
    "FINAL_STEP",
    "ORDER_BOUND",
]


class CertificateFailure(RuntimeError):
    """A certificate check failed; the message names the check."""


class NoEvidence(RuntimeError):
    """No automatic ellipticity route applies to this element."""


ORDER_BOUND = 200

FINAL_STEP = (
    "every generator and every pairwise product certified elliptic; "
    "a finite generating set with this property has a global fixed point "
    "in any simplicial tree action (Serre, Trees, I.6.5, Cor. 2)"
)


@dataclass(frozen=True)
class EllipticEvidence:
    """One re-checkable reason why ``subject`` is elliptic."""

    subject: CellMap
    kind: str  # small | finite-order | conjugate-small |
    #            commuting-disjoint-support | conjugation-chain | subgroup-fa
    witness: StdInterval | None = None
    order: int | None = None
    conjugator: CellMap | None = None
    factors: tuple[CellMap, ...] = ()
    note: str = ""


def _supports_disjoint(g: CellMap, h: CellMap) -> bool:
    return all(
        a.relate(b).name == "DISJOINT" for a in g.support() for b in h.support()
    )


def verify_evidence(ev: EllipticEvidence, where: str = "") -> None:
    """Recompute the claim from the raw cell maps; raise on any mismatch."""
    tag = f"{where or ev.kind}"
    if ev.kind == "small":
        if ev.witness is None:
            raise CertificateFailure(f"{tag}: small evidence without witness")
        if not ev.subject.is_identity_on(ev.witness):
            raise CertificateFailure(f"{tag}: subject is not the identity on {ev.witness}")
    elif ev.kind == "finite-order":
        if not ev.order or ev.order > ORDER_BOUND:
            raise CertificateFailure(f"{tag}: order missing or above bound {ORDER_BOUND}")
        if ev.subject.order_up_to(ev.order) != ev.order:
            raise CertificateFailure(f"{tag}: order of subject is not {ev.order}")
    elif ev.kind == "conjugate-small":
        if ev.witness is None or ev.conjugator is None:
            raise CertificateFailure(f"{tag}: conjugate-small needs conjugator and witness")
        conj = ev.subject.conjugate(ev.conjugator)
        if not conj.is_identity_on(ev.witness):
            raise CertificateFailure(f"{tag}: conjugate is not the identity on {ev.witness}")
    elif ev.kind == "commuting-disjoint-support":
        if len(ev.factors) != 2:
            raise CertificateFailure(f"{tag}: need the two factors")
        g, h = ev.factors
        if g.compose(h) != ev.subject:
            raise CertificateFailure(f"{tag}: subject is not the product of the factors")
        if g.compose(h) != h.compose(g):
            raise CertificateFailure(f"{tag}: factors do not commute")
        if not _supports_disjoint(g, h):
            raise CertificateFailure(f"{tag}: supports are not disjoint")
        if g.is_small() is None or h.is_small() is None:
            raise CertificateFailure(f"{tag}: a factor is not small")
    elif ev.kind == "conjugation-chain":
        if len(ev.factors) != 1 or ev.conjugator is None:
            raise CertificateFailure(f"{tag}: chain needs base element and conjugator")
        base = ev.factors[0]
        k = ev.conjugator
        if base.compose(k) != ev.subject:
            raise CertificateFailure(f"{tag}: subject is not base * conjugator")
        if ev.order is None or base.order_up_to(ev.order) != ev.order:
            raise CertificateFailure(f"{tag}: base order claim fails")
        w = k.inverse().compose(base).compose(k).compose(base)
        if ev.witness is None or not w.is_identity_on(ev.witness):
            raise CertificateFailure(
                f"{tag}: k^-1 b k b is not the identity on the stated witness"
            )
    elif ev.kind == "subgroup-fa":
        if ev.subject.group_class not in ("F", "T"):
            raise CertificateFailure(f"{tag}: subject does not lie in T")
    else:
        raise CertificateFailure(f"{tag}: unknown evidence kind {ev.kind!r}")


def elliptic_evidence(
    g: CellMap,
    *,
    conjugator_hint: CellMap | None = None,
    factorization_hint: tuple[CellMap, CellMap] | None = None,
    order_bound: int = ORDER_BOUND,
) -> EllipticEvidence:
    """First applicable route: small, finite order, conjugate-small
    (hinted), commuting factors with disjoint supports (hinted
    factorization g = u * v)."""
    w = g.is_small()
    if w is not None:
        return EllipticEvidence(g, "small", witness=w)
    n = g.order_up_to(order_bound)
    if n is not None:
        return EllipticEvidence(g, "finite-order", order=n)
    if conjugator_hint is not None:
        w = g.conjugate(conjugator_hint).is_small()
        if w is not None:
            return EllipticEvidence(g, "conjugate-small", witness=w,
                                    conjugator=conjugator_hint)
    if factorization_hint is not None:
        u, v = factorization_hint
        if (
            u.compose(v) == g
            and u.compose(v) == v.compose(u)
            and _supports_disjoint(u, v)
            and u.is_small() is not None
            and v.is_small() is not None
        ):
            return EllipticEvidence(g, "commuting-disjoint-support", factors=(u, v))
    raise NoEvidence(f"no automatic ellipticity route for {g!r}")


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FACertificate:
    group: str
    generator_names: tuple[str, ...]
    generators: tuple[CellMap, ...]
    gen_evidence: tuple[tuple[str, EllipticEvidence], ...]
    pair_evidence: tuple[tuple[str, str, EllipticEvidence], ...]
    final_step: str
    sub_certificate: "FACertificate | None" = None

    def generator(self, name: str) -> CellMap:
        return self.generators[self.generator_names.index(name)]


ARC_PAIR_FAMILIES = frozenset({frozenset({"U", "D"}), frozenset({"L", "R"})})


def t_certificate(conjugated_by: CellMap | None = None) -> FACertificate:
    """Certificate that T, generated by the eight arc-subgroup generators,
    has the global-fixed-point property.

    One wrinkle: for the opposite-arc families (U, D) and (L, R) the two
    supports cover the circle up to two points, so the product fixes no
    interval and is *not* small; those pairs are certified through the
    commuting-disjoint-support route instead, which is equally conclusive.

    ``conjugated_by`` rebuilds the certificate on a conjugated generating
    set (smallness and the pair structure are conjugation-stable, with
    witnesses recomputed at the cell level).
    """
    names = []
    gens = []
    arcs = {}
    for arc in ("U", "D", "L", "R"):
        g0, g1 = arc_subgroup_generators(arc)
        for i, g in enumerate((g0, g1)):
            if conjugated_by is not None:
                g = g.conjugate(conjugated_by)
            name = f"{arc.lower()}{i}"
            names.append(name)
            gens.append(g)
            arcs[name] = arc
    gen_ev = []
    for name, g in zip(names, gens):
        w = g.is_small()
        if w is None:
            raise CertificateFailure(f"generator {name} is not small")
        gen_ev.append((name, EllipticEvidence(g, "small", witness=w)))
    pair_ev = []
    for i, ni in enumerate(names):
        for j in range(i, len(names)):
            nj = names[j]
            gi, gj = gens[i], gens[j]
            prod = gi.compose(gj)
            w = prod.is_small()
            if w is not None:
                pair_ev.append((ni, nj, EllipticEvidence(prod, "small", witness=w)))
                continue
            if frozenset({arcs[ni], arcs[nj]}) not in ARC_PAIR_FAMILIES:
                raise CertificateFailure(
                    f"pair ({ni},{nj}): product not small outside the opposite-arc families"
                )
            ev = EllipticEvidence(
                prod,
                "commuting-disjoint-support",
                factors=(gi, gj),
                note="opposite arcs: supports disjoint, factors commute and are "
                "each small, so they share a fixed point",
            )
            verify_evidence(ev, f"pair ({ni},{nj})")
            pair_ev.append((ni, nj, ev))
    cert = FACertificate(
        group="T",
        generator_names=tuple(names),
        generators=tuple(gens),
        gen_evidence=tuple(gen_ev),
        pair_evidence=tuple(pair_ev),
        final_step=FINAL_STEP,
    )
    verify_certificate(cert)
    return cert


def v_certificate() -> FACertificate:
    """Certificate for V on the generators x0, x1, pi0, pi1.

    The T part is inherited: x0, x1, pi0 and their pairwise products lie
    in T, which the attached sub-certificate covers.  The new checks are
    exactly: pi1 has finite order; pi1*pi0 has finite order; pi1*x1 is
    small; and pi1*x0 goes through the conjugation chain, whose computable
    premises are that x0^-1 pi1 x0 pi1 is small and pi1 has finite order.
    """
    x0 = standard_generator("x0")
    x1 = standard_generator("x1")
    pi0 = standard_generator("pi0")
    pi1 = standard_generator("pi1")
    names = ("x0", "x1", "pi0", "pi1")
    gens = (x0, x1, pi0, pi1)
    tcert = t_certificate()

    in_t = "element of the subgroup T; the attached T certificate gives a global fixed point"
    gen_ev = [
        ("x0", EllipticEvidence(x0, "subgroup-fa", note=in_t)),
        ("x1", EllipticEvidence(x1, "subgroup-fa", note=in_t)),
        ("pi0", EllipticEvidence(pi0, "subgroup-fa", note=in_t)),
        ("pi1", EllipticEvidence(pi1, "finite-order", order=pi1.order_up_to(ORDER_BOUND))),
    ]
    pair_ev = []
    t_names = ("x0", "x1", "pi0")
    for i, ni in enumerate(t_names):
        for nj in t_names[i:]:
            prod = gens[names.index(ni)].compose(gens[names.index(nj)])
            pair_ev.append((ni, nj, EllipticEvidence(prod, "subgroup-fa", note=in_t)))
    pi1pi0 = pi1.compose(pi0)
    pair_ev.append(
        ("pi1", "pi0",
         EllipticEvidence(pi1pi0, "finite-order", order=pi1pi0.order_up_to(ORDER_BOUND)))
    )
    pi1x1 = pi1.compose(x1)
    pair_ev.append(
        ("pi1", "x1", EllipticEvidence(pi1x1, "small", witness=pi1x1.is_small()))
    )
    chain_w = x0.inverse().compose(pi1).compose(x0).compose(pi1).is_small()
    pair_ev.append(
        ("pi1", "x0",
         EllipticEvidence(
             pi1.compose(x0),
             "conjugation-chain",
             witness=chain_w,
             order=pi1.order_up_to(ORDER_BOUND),
             conjugator=x0,
             factors=(pi1,),
             note="x0^-1 pi1 x0 pi1 small and pi1 of finite order force "
             "Fix(x0^-1 pi1 x0) to meet Fix(pi1), hence pi1*x0 is elliptic",
         ))
    )
    pi1sq = pi1.compose(pi1)
    pair_ev.append(
        ("pi1", "pi1",
         EllipticEvidence(pi1sq, "finite-order", order=pi1sq.order_up_to(ORDER_BOUND)))
    )
    cert = FACertificate(
        group="V",
        generator_names=names,
        generators=gens,
        gen_evidence=tuple(gen_ev),
        pair_evidence=tuple(pair_ev),
        final_step=FINAL_STEP,
        sub_certificate=tcert,
    )
    verify_certificate(cert)
    return cert


def verify_certificate(cert: FACertificate) -> int:
    """Re-verify every evidence item from the raw cell maps.  Returns the
    number of checks performed; raises CertificateFailure on the first
    failing check, naming it."""
    checks = 0
    if cert.sub_certificate is not None:
        checks += verify_certificate(cert.sub_certificate)
    covered = {name: False for name in cert.generator_names}
    for name, ev in cert.gen_evidence:
        if name not in covered:
            raise CertificateFailure(f"evidence for unknown generator {name}")
        if ev.subject != cert.generator(name):
            raise CertificateFailure(f"generator {name}: stored subject differs")
        if ev.kind == "subgroup-fa" and cert.sub_certificate is None:
            raise CertificateFailure(f"generator {name}: subgroup route without sub-certificate")
        verify_evidence(ev, f"generator {name}")
        covered[name] = True
        checks += 1
    if not all(covered.values()):
        missing = [n for n, c in covered.items() if not c]
        raise CertificateFailure(f"generators without evidence: {missing}")
    need = {
        frozenset({a, b}) if a != b else frozenset({a})
        for i, a in enumerate(cert.generator_names)
        for b in cert.generator_names[i:]
    }
    seen = set()
    for ni, nj, ev in cert.pair_evidence:
        prod = cert.generator(ni).compose(cert.generator(nj))
        if ev.subject != prod:
            raise CertificateFailure(f"pair ({ni},{nj}): stored subject is not the product")
        if ev.kind == "subgroup-fa" and cert.sub_certificate is None:
            raise CertificateFailure(f"pair ({ni},{nj}): subgroup route without sub-certificate")
        verify_evidence(ev, f"pair ({ni},{nj})")
        seen.add(frozenset({ni, nj}))
        checks += 1
    if need - seen:
        raise CertificateFailure(f"pairs without evidence: {sorted(map(sorted, need - seen))}")
    return checks


def audit_lines(cert: FACertificate) -> list[str]:
    """Human-readable audit trail (also covers the sub-certificate)."""
    out = []
    if cert.sub_certificate is not None:
        out.extend(audit_lines(cert.sub_certificate))
        out.append("")
    out.append(f"=== fixed-point certificate for {cert.group} "
               f"({len(cert.generator_names)} generators) ===")
    for name, ev in cert.gen_evidence:
        out.append(f"  generator {name:>4}: {_describe(ev)}")
    for ni, nj, ev in cert.pair_evidence:
        out.append(f"  product {ni}*{nj}: {_describe(ev)}")
    out.append(f"  final step: {cert.final_step}")
    return out


def _describe(ev: EllipticEvidence) -> str:
    if ev.kind == "small":
        return f"small, identity on {ev.witness}"
    if ev.kind == "finite-order":
        return f"finite order {ev.order}"
    if ev.kind == "conjugate-small":
        return f"conjugate is small on {ev.witness}"
    if ev.kind == "commuting-disjoint-support":
        return "commuting factors with disjoint supports (both small)"
    if ev.kind == "conjugation-chain":
        return f"conjugation chain: k^-1 b k b identity on {ev.witness}, order(b)={ev.order}"
    if ev.kind == "subgroup-fa":
        return "lies in T (covered by the T certificate)"
    return ev.kind


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

CERT_FORMAT = "thompson-facert/1"


def _ev_to_dict(ev: EllipticEvidence) -> dict:
    return {
        "subject": ev.subject.to_text(),
        "kind": ev.kind,
        "witness": ev.witness.serialize() if ev.witness else None,
        "order": ev.order,
        "conjugator": ev.conjugator.to_text() if ev.conjugator else None,
        "factors": [f.to_text() for f in ev.factors],
        "note": ev.note,
    }


def _ev_from_dict(d: dict) -> EllipticEvidence:
    return EllipticEvidence(
        subject=CellMap.from_text(d["subject"]),
        kind=d["kind"],
        witness=StdInterval.parse(d["witness"]) if d.get("witness") else None,
        order=d.get("order"),
        conjugator=CellMap.from_text(d["conjugator"]) if d.get("conjugator") else None,
        factors=tuple(CellMap.from_text(f) for f in d.get("factors", [])),
        note=d.get("note", ""),
    )


def _cert_to_dict(cert: FACertificate) -> dict:
    return {
        "format": CERT_FORMAT,
        "group": cert.group,
        "generators": [
            {"name": n, "map": g.to_text()}
            for n, g in zip(cert.generator_names, cert.generators)
        ],
        "generator_evidence": [
            {"name": n, "evidence": _ev_to_dict(ev)} for n, ev in cert.gen_evidence
        ],
        "pair_evidence": [
            {"left": a, "right": b, "evidence": _ev_to_dict(ev)}
            for a, b, ev in cert.pair_evidence
        ],
        "final_step": cert.final_step,
        "sub_certificate": _cert_to_dict(cert.sub_certificate)
        if cert.sub_certificate
        else None,
    }


def _cert_from_dict(d: dict) -> FACertificate:
    if d.get("format") != CERT_FORMAT:
        raise CertificateFailure(f"unknown certificate format {d.get('format')!r}")
    return FACertificate(
        group=d["group"],
        generator_names=tuple(g["name"] for g in d["generators"]),
        generators=tuple(CellMap.from_text(g["map"]) for g in d["generators"]),
        gen_evidence=tuple(
            (e["name"], _ev_from_dict(e["evidence"])) for e in d["generator_evidence"]
        ),
        pair_evidence=tuple(
            (e["left"], e["right"], _ev_from_dict(e["evidence"]))
            for e in d["pair_evidence"]
        ),
        final_step=d["final_step"],
        sub_certificate=_cert_from_dict(d["sub_certificate"])
        if d.get("sub_certificate")
        else None,
    )


def certificate_to_text(cert: FACertificate) -> str:
    return json.dumps(_cert_to_dict(cert), indent=1, sort_keys=True)


def certificate_from_text(text: str) -> FACertificate:
    try:
        return _cert_from_dict(json.loads(text))
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, CertificateFailure):
            raise
        raise CertificateFailure(f"malformed certificate: {exc}") from exc
