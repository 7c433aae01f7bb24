"""Finite probability distributions with exact entropy accounting.

Atoms are bit-string labels: a flat tuple of 0/1 ints, or a tuple of such
tuples for structured records. Probabilities are floats by default; Fractions
are accepted and survive untouched through the operations that stay rational
(statistical distance in particular), which is the exact-rational mode.

All entropies are base 2. Max-entropy here is the largest sample entropy of
the support, not the log of the support size.
"""

import json
import math
from fractions import Fraction

MASS_TOL = 1e-12
PRODUCT_ATOM_LIMIT = 2 ** 24
MATERIALIZE_ATOM_LIMIT = 2 ** 18
EXACT_SUPPORT_LIMIT = 2 ** 16


def _is_bits(x):
    return isinstance(x, tuple) and all(isinstance(b, int) and b in (0, 1) for b in x)


def _normalize_atom(atom):
    """Canonical field view: a flat bit tuple is one field, else a tuple of fields."""
    if _is_bits(atom):
        return atom
    if isinstance(atom, tuple) and all(_is_bits(f) for f in atom):
        return atom
    raise TypeError(f"atom is not a bit-string label: {atom!r}")


def _atom_key(atom):
    # total order across the label shapes we allow, ints first
    if isinstance(atom, int):
        return (0, (atom,))
    if isinstance(atom, tuple):
        return (1, tuple(_atom_key(a) for a in atom))
    if isinstance(atom, str):
        return (2, atom)
    raise TypeError(f"unorderable atom: {atom!r}")


class Pmf:
    """A finite probability mass function.

    Args:
        atoms: mapping from hashable atom labels to probabilities. Zero-mass
            atoms are dropped on construction.
        subnormal: when True the total mass may be anything in [0, 1]; the
            entropy operations refuse such objects.

    Raises:
        ValueError: on negative probabilities, or total mass outside
            1 +- 1e-12 without the subnormal flag.
    """

    __slots__ = ("_p", "subnormal")

    def __init__(self, atoms, subnormal=False):
        cleaned = {}
        for atom, p in atoms.items():
            if p < 0:
                raise ValueError(f"negative probability {p!r} for atom {atom!r}")
            if p == 0:
                continue
            cleaned[atom] = p
        total = sum(cleaned.values())
        if subnormal:
            if total > 1 + MASS_TOL:
                raise ValueError(f"subnormal mass exceeds 1: {total!r}")
        elif abs(total - 1) > MASS_TOL:
            raise ValueError(f"total mass {total!r} not within {MASS_TOL} of 1")
        self._p = cleaned
        self.subnormal = bool(subnormal)

    def prob(self, atom):
        return self._p.get(atom, 0)

    def probs(self):
        """Probabilities in atom-sorted order."""
        return tuple(p for _, p in self.items_sorted())

    def support(self):
        return tuple(sorted(self._p, key=_atom_key))

    def items_sorted(self):
        return sorted(self._p.items(), key=lambda kv: _atom_key(kv[0]))

    def as_dict(self):
        return dict(self._p)

    def total(self):
        return sum(self._p.values())

    def __len__(self):
        return len(self._p)

    def __contains__(self, atom):
        return atom in self._p

    def __repr__(self):
        body = ", ".join(f"{a!r}: {p!r}" for a, p in self.items_sorted())
        return f"Pmf({{{body}}})"


class JointPmf:
    """Joint distribution over (key, puzzle) pairs."""

    __slots__ = ("_pmf",)

    def __init__(self, atoms):
        for atom in atoms:
            if not (isinstance(atom, tuple) and len(atom) == 2):
                raise ValueError(f"joint atom must be a (key, puzzle) pair: {atom!r}")
        self._pmf = Pmf(atoms)

    def as_pmf(self):
        return self._pmf

    def prob(self, key, puzzle):
        return self._pmf.prob((key, puzzle))

    def support(self):
        return self._pmf.support()

    def marginal_keys(self):
        return push_forward(self._pmf, lambda kv: kv[0])

    def marginal_puzzles(self):
        return push_forward(self._pmf, lambda kv: kv[1])

    def condition_on_puzzle(self, puzzle):
        mass = {}
        for (k, s), p in self._pmf.as_dict().items():
            if s == puzzle:
                mass[k] = mass.get(k, 0) + p
        total = sum(mass.values())
        if total == 0:
            raise ValueError(f"puzzle {puzzle!r} has zero mass")
        return Pmf({k: p / total for k, p in mass.items()})

    def condition_on_key(self, key):
        mass = {}
        for (k, s), p in self._pmf.as_dict().items():
            if k == key:
                mass[s] = mass.get(s, 0) + p
        total = sum(mass.values())
        if total == 0:
            raise ValueError(f"key {key!r} has zero mass")
        return Pmf({s: p / total for s, p in mass.items()})


def condition(joint, puzzle):
    """Key distribution of a JointPmf given the puzzle value."""
    return joint.condition_on_puzzle(puzzle)


def _require_normalized(p):
    if p.subnormal:
        raise ValueError("entropy of a subnormalized distribution is undefined here")


def shannon_entropy(p):
    _require_normalized(p)
    return -sum(q * math.log2(q) for q in p.as_dict().values())


def sample_entropy(p, atom):
    q = p.prob(atom)
    if q == 0:
        raise ValueError(f"atom {atom!r} outside the support")
    return -math.log2(q)


def min_entropy(p):
    _require_normalized(p)
    return -math.log2(max(p.as_dict().values()))


def max_entropy(p):
    _require_normalized(p)
    return -math.log2(min(p.as_dict().values()))


def _check_eps(eps):
    if not 0 <= eps < 1:
        raise ValueError(f"smoothing parameter must lie in [0, 1): {eps!r}")


def smooth_min_entropy(p, eps):
    """Smoothed min-entropy via the water-filling cap.

    Caps the distribution at the level lambda solving
    sum((p_i - lambda)+) = eps; the trimmed mass can always be relocated onto
    fresh atoms of mass <= lambda, so -log2(lambda) is the best min-entropy
    within statistical distance eps.
    """
    _require_normalized(p)
    _check_eps(eps)
    probs = sorted(p.as_dict().values(), reverse=True)
    if eps == 0:
        return -math.log2(probs[0])
    running = 0.0
    for k, q in enumerate(probs, start=1):
        running += q
        lam = (running - eps) / k
        below = probs[k] if k < len(probs) else 0
        if lam <= q and lam >= below:
            return -math.log2(lam)
    raise AssertionError("water-filling level not bracketed")


def _greedy_removed(items, eps):
    # items ascending by (prob, label); returns the removed prefix length
    removed = 0
    cum = 0
    for _, q in items:
        if cum + q > eps:
            break
        cum += q
        removed += 1
    return removed


def smooth_max_entropy(p, eps):
    """Smoothed max-entropy: greedily delete the lightest atoms, mass <= eps.

    No renormalization; ties on probability break lexicographically on the
    atom label. The result is the max sample entropy of what remains, under
    the original probabilities.
    """
    _require_normalized(p)
    _check_eps(eps)
    items = sorted(p.as_dict().items(), key=lambda kv: (kv[1], _atom_key(kv[0])))
    removed = _greedy_removed(items, eps)
    return -math.log2(items[removed][1])


def smooth_max_support(p, eps):
    """Atoms surviving the smooth_max_entropy deletion, in label order."""
    _require_normalized(p)
    _check_eps(eps)
    items = sorted(p.as_dict().items(), key=lambda kv: (kv[1], _atom_key(kv[0])))
    removed = _greedy_removed(items, eps)
    return tuple(sorted((a for a, _ in items[removed:]), key=_atom_key))


def statistical_distance(p, q):
    """Half the L1 distance. Exact (Fraction) when both inputs are rational."""
    atoms = set(p.as_dict()) | set(q.as_dict())
    exact = all(isinstance(v, Fraction) for v in p.as_dict().values()) and all(
        isinstance(v, Fraction) for v in q.as_dict().values()
    )
    if exact:
        if len(atoms) > EXACT_SUPPORT_LIMIT:
            raise ValueError(f"exact mode supports at most {EXACT_SUPPORT_LIMIT} atoms")
        return Fraction(1, 2) * sum(abs(p.prob(a) - q.prob(a)) for a in atoms)
    return 0.5 * sum(abs(p.prob(a) - q.prob(a)) for a in atoms)


def push_forward(p, f):
    """Image distribution under f, masses merged."""
    out = {}
    for atom, q in p.as_dict().items():
        image = f(atom)
        out[image] = out.get(image, 0) + q
    return Pmf(out, subnormal=p.subnormal)


def mixture(weighted):
    """Convex combination of Pmfs given as (weight, pmf) pairs."""
    total_w = sum(w for w, _ in weighted)
    if abs(total_w - 1) > MASS_TOL:
        raise ValueError(f"mixture weights sum to {total_w!r}, not 1")
    out = {}
    for w, p in weighted:
        if w < 0:
            raise ValueError("negative mixture weight")
        for atom, q in p.as_dict().items():
            out[atom] = out.get(atom, 0) + w * q
    return Pmf(out)


def product_power(p, t):
    """t-fold independent product; atoms become t-tuples of component atoms."""
    if t < 1:
        raise ValueError("power must be >= 1")
    if len(p) ** t > PRODUCT_ATOM_LIMIT:
        raise ValueError(f"product would exceed {PRODUCT_ATOM_LIMIT} atoms")
    atoms = [((a,), q) for a, q in p.as_dict().items()]
    for _ in range(t - 1):
        atoms = [(prefix + (a,), w * q) for prefix, w in atoms for a, q in p.as_dict().items()]
    return Pmf(dict(atoms))


def product_spectrum(p, t):
    """Probability spectrum of the t-fold product as (value, count) pairs.

    Smoothing and entropies depend only on the probability multiset, so this
    stays exact far past the point where materializing atoms is feasible.
    """
    if t < 1:
        raise ValueError("power must be >= 1")
    groups = {}
    for q in p.as_dict().values():
        groups[q] = groups.get(q, 0) + 1
    values = sorted(groups, reverse=True)
    mults = [groups[v] for v in values]
    if len(values) > 64 or t > 4096:
        raise ValueError("spectrum enumeration out of range")

    spectrum = {}
    one = Fraction(1) if all(isinstance(v, Fraction) for v in values) else 1.0

    def walk(idx, left, value, ways):
        # ways telescopes the multinomial coefficient times the label choices
        if idx == len(values) - 1:
            v = value * values[idx] ** left
            w = ways * mults[idx] ** left
            spectrum[v] = spectrum.get(v, 0) + w
            return
        for c in range(left + 1):
            walk(idx + 1, left - c, value * values[idx] ** c, ways * math.comb(left, c) * mults[idx] ** c)

    walk(0, t, one, 1)
    return sorted(spectrum.items(), key=lambda vc: -vc[0])


def entropy_spectrum(spectrum):
    return -sum(c * v * math.log2(v) for v, c in spectrum if v > 0)


def smooth_min_entropy_spectrum(spectrum, eps):
    """Water-filling smoothing straight off a (value, count) spectrum."""
    _check_eps(eps)
    ordered = sorted(spectrum, key=lambda vc: -vc[0])
    if eps == 0:
        return -math.log2(ordered[0][0])
    mass = 0.0
    count = 0
    for idx, (v, c) in enumerate(ordered):
        mass += v * c
        count += c
        lam = (mass - eps) / count
        below = ordered[idx + 1][0] if idx + 1 < len(ordered) else 0
        if lam <= v and lam >= below:
            return -math.log2(lam)
    raise AssertionError("water-filling level not bracketed")


def smooth_max_entropy_spectrum(spectrum, eps):
    """Greedy lightest-first deletion straight off a (value, count) spectrum."""
    _check_eps(eps)
    ordered = sorted(spectrum, key=lambda vc: vc[0])
    cum = 0
    for v, c in ordered:
        can_remove = min(c, int((eps - cum) / v + MASS_TOL)) if v > 0 else c
        cum += can_remove * v
        if can_remove < c:
            return -math.log2(v)
    raise ValueError("smoothing removed the entire support")


def encode_atom(atom):
    """Hex encoding: per field, 4 hex digits of bit length then packed bits."""
    norm = _normalize_atom(atom)
    fields = (norm,) if _is_bits(norm) else norm
    parts = []
    for field in fields:
        if len(field) > 0xFFFF:
            raise ValueError("field too long to encode")
        parts.append(f"{len(field):04x}")
        chunk = 0
        nbytes = (len(field) + 7) // 8
        for i, b in enumerate(field):
            chunk |= b << (nbytes * 8 - 1 - i)
        parts.append(chunk.to_bytes(nbytes, "big").hex())
    return "".join(parts)


def decode_atom(text):
    """Inverse of encode_atom; single-field atoms come back as flat tuples."""
    fields = []
    pos = 0
    while pos < len(text):
        nbits = int(text[pos : pos + 4], 16)
        pos += 4
        nbytes = (nbits + 7) // 8
        raw = bytes.fromhex(text[pos : pos + 2 * nbytes])
        pos += 2 * nbytes
        chunk = int.from_bytes(raw, "big") if nbytes else 0
        fields.append(tuple(chunk >> (nbytes * 8 - 1 - i) & 1 for i in range(nbits)))
    if len(fields) == 1:
        return fields[0]
    return tuple(fields)


def pmf_to_json(p):
    rows = sorted((encode_atom(a), repr(float(q))) for a, q in p.as_dict().items())
    doc = {"format": "pmf-v1", "subnormal": p.subnormal, "atoms": rows}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def pmf_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "pmf-v1":
        raise ValueError("not a pmf-v1 document")
    atoms = {decode_atom(hexa): float(q) for hexa, q in doc["atoms"]}
    return Pmf(atoms, subnormal=doc.get("subnormal", False))


def joint_to_json(j):
    rows = sorted(
        (encode_atom(k), encode_atom(s), repr(float(q))) for (k, s), q in j.as_pmf().as_dict().items()
    )
    doc = {"format": "joint-pmf-v1", "atoms": rows}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def joint_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "joint-pmf-v1":
        raise ValueError("not a joint-pmf-v1 document")
    atoms = {}
    for key_hex, puz_hex, q in doc["atoms"]:
        atoms[(decode_atom(key_hex), decode_atom(puz_hex))] = float(q)
    return JointPmf(atoms)
