"""Hash-truncated distinguishing pairs built on a high-entropy generator.

One branch hashes a draw from the generator and keeps the first s output
bits, the other emits s uniform bits; both publish the hash seed. Short
truncations make the branches statistically close (the extractor regime),
long ones make them nearly disjoint because the generator's support cannot
cover the output space. The crossing point sits half a gap above the
generator's max-entropy, and every distance here is exact per seed.
"""

import math

import numpy as np

from . import dist, gf2
from ._mc import hoeffding_radius


def _flat_bits(atom):
    out = []
    for field in atom:
        if isinstance(field, tuple):
            out.extend(_flat_bits(field))
        else:
            out.append(int(field))
    return tuple(out)


def _flat_width(pmf):
    widths = {len(_flat_bits(atom)) for atom in pmf.support()}
    if len(widths) != 1:
        raise ValueError(f"atoms flatten to mixed widths {sorted(widths)}")
    return widths.pop()


def crossover_truncation(g0, gap_inst):
    """Truncation length where the pair flips from close to far.

    Half the instantiated entropy gap above the generator's max-entropy;
    below it the leftover-hash regime applies, above it support counting
    takes over.
    """
    if gap_inst < 0:
        raise ValueError(f"entropy gap must be nonnegative: {gap_inst!r}")
    return dist.max_entropy(g0) + gap_inst / 2


class EfiParams:
    """Distinguishing-pair settings: truncation, crossover point, smoothing."""

    __slots__ = ("truncation", "crossover", "gap_exponent", "eps")

    def __init__(self, truncation, crossover, gap_exponent, eps):
        if truncation < 0:
            raise ValueError(f"truncation must be nonnegative: {truncation!r}")
        if not 0.0 <= eps < 1.0:
            raise ValueError(f"smoothing must lie in [0, 1): {eps!r}")
        self.truncation = int(truncation)
        self.crossover = crossover
        self.gap_exponent = gap_exponent
        self.eps = eps

    @classmethod
    def from_generator(cls, g0, gap_inst, gap_exponent, eps):
        """Place the truncation at the first integer at or past the crossover."""
        star = crossover_truncation(g0, gap_inst)
        return cls(max(0, math.ceil(star - 1e-9)), star, gap_exponent, eps)

    def __repr__(self):
        return (f"EfiParams(truncation={self.truncation}, "
                f"crossover={self.crossover}, eps={self.eps})")


def efi_sample(source, truncation, b, rng, width=None):
    """Draw one output of branch b of the truncated-hash pair.

    Args:
        source: Pmf over bit-tuple atoms, or a callable rng -> atom; for a
            callable the input width cannot be inferred and must be given.
        truncation: number of hash output bits to keep, at most 3x the width.
        b: 0 for the hashed-generator branch, 1 for the uniform branch.
        rng: numpy Generator; the hash seed is fresh per call.
        width: flat bit width of the atoms, required for callable sources.

    Returns:
        (seed, y) with y a tuple of `truncation` bits.
    """
    if b not in (0, 1):
        raise ValueError(f"branch must be 0 or 1: {b!r}")
    if truncation < 0:
        raise ValueError(f"truncation must be nonnegative: {truncation!r}")
    if isinstance(source, dist.Pmf):
        pmf_width = _flat_width(source)
        if width is not None and width != pmf_width:
            raise ValueError(f"width {width} does not match atoms ({pmf_width})")
        width = pmf_width
    elif width is None:
        raise ValueError("callable sources need an explicit width")
    if truncation > 3 * width:
        raise ValueError(
            f"truncation {truncation} exceeds the {3 * width}-bit hash output")
    seed = gf2.sample_hash_seed(rng, width)
    if b == 1:
        return seed, tuple(int(v) for v in rng.integers(0, 2, size=truncation))
    if isinstance(source, dist.Pmf):
        support = source.support()
        probs = np.array([float(p) for _, p in source.items_sorted()])
        atom = support[rng.choice(len(support), p=probs)]
    else:
        atom = source(rng)
    return seed, gf2.hash_eval(seed, _flat_bits(atom), truncation)


def hash_truncation_sd(g0, seed, truncation):
    """Exact distance between the hashed generator and uniform, one seed.

    Pushes the whole Pmf through the truncated hash and folds the unhit
    part of the output space into a single closed-form term, so the cost is
    the support size rather than 2^truncation.
    """
    if g0.subnormal:
        raise ValueError("generator distribution must be normalized")
    if not 0 <= truncation <= seed.n_out:
        raise ValueError(
            f"truncation {truncation} outside [0, {seed.n_out}]")
    if truncation == 0:
        return 0.0
    masses = {}
    for atom, p in g0.items_sorted():
        y = gf2.hash_eval(seed, _flat_bits(atom), truncation)
        masses[y] = masses.get(y, 0.0) + float(p)
    u = 2.0 ** -truncation
    hit = sum(abs(q - u) for q in masses.values())
    return 0.5 * (hit + (1.0 - len(masses) * u))


def efi_distance(g0, truncation, seed_samples, rng):
    """Mean exact per-seed distance over fresh hash seeds, with 99% radius."""
    if seed_samples < 1:
        raise ValueError("need at least one seed sample")
    width = _flat_width(g0)
    if truncation > 3 * width:
        raise ValueError(
            f"truncation {truncation} exceeds the {3 * width}-bit hash output")
    values = np.empty(seed_samples)
    for t in range(seed_samples):
        seed = gf2.sample_hash_seed(rng, width)
        values[t] = hash_truncation_sd(g0, seed, truncation)
    return float(values.mean()), hoeffding_radius(seed_samples)


def distance_sweep(g0, truncations, seed_samples, rng):
    """CSV of distance estimates across truncation lengths.

    One seed pool is drawn up front and shared by every row, which keeps
    the estimate column exactly nondecreasing (appending hash bits never
    shrinks the per-seed distance) and the whole sweep cheap.
    """
    if seed_samples < 1:
        raise ValueError("need at least one seed sample")
    truncations = [int(s) for s in truncations]
    width = _flat_width(g0)
    for s in truncations:
        if not 0 <= s <= 3 * width:
            raise ValueError(
                f"truncation {s} outside [0, {3 * width}]")
    seeds = [gf2.sample_hash_seed(rng, width) for _ in range(seed_samples)]
    radius = hoeffding_radius(seed_samples)
    lines = ["s,sd_estimate,radius"]
    for s in truncations:
        est = float(np.mean([hash_truncation_sd(g0, seed, s) for seed in seeds]))
        lines.append(f"{s},{est!r},{radius!r}")
    return "\n".join(lines) + "\n"
