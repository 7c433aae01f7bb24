"""Bit commitment schemes as explicit unitaries, with exact experiments.

A scheme commits one message qubit using an ancilla register, then splits
the qubits into a sent half and a kept half.  Hiding is scored by the best
distinguisher on the sent half, binding by an opening game in which the
committer either measures the message qubit before revealing or does not.
Both experiments reduce to trace distances of small density matrices, so
every reported advantage is exact up to floating point.
"""

import hashlib
import json
import math

import numpy as np

from . import qsim

UNITARY_TOL = 1e-10
MEASUREMENT_TOL = 1e-9
ALPHABET_LIMIT = 6


def _embed(u, targets, n):
    # expand a k-qubit gate to the n-qubit register, identity elsewhere
    k = len(targets)
    cols = 2 ** n
    tensor = np.eye(cols, dtype=complex).reshape((2,) * n + (cols,))
    tensor = np.moveaxis(tensor, targets, range(k))
    mixed = np.asarray(u, dtype=complex) @ tensor.reshape(2 ** k, -1)
    tensor = np.moveaxis(mixed.reshape((2,) * n + (cols,)), range(k), targets)
    return tensor.reshape(cols, cols)


class CommitScheme:
    """A commit unitary plus the sent/kept split of its qubits.

    Qubit 0 is the message, qubits 1..n-1 the work register.  `c_qubits`
    go to the receiver at commit time, `d_qubits` stay with the committer
    and are handed over at opening.
    """

    __slots__ = ("name", "com", "n_qubits", "c_qubits", "d_qubits", "flavor")

    def __init__(self, name, com, c_qubits, d_qubits, flavor=""):
        com = np.asarray(com, dtype=complex)
        if com.ndim != 2 or com.shape[0] != com.shape[1]:
            raise ValueError("commit map must be a square matrix")
        dim = com.shape[0]
        n = dim.bit_length() - 1
        if n < 1 or dim != 2 ** n:
            raise ValueError("commit map dimension must be a power of two")
        if np.abs(com @ com.conj().T - np.eye(dim)).max() > UNITARY_TOL:
            raise ValueError("commit map is not unitary within tolerance")
        c = tuple(int(q) for q in c_qubits)
        d = tuple(int(q) for q in d_qubits)
        if not c or not d:
            raise ValueError("sent and kept registers must both be non-empty")
        if sorted(c + d) != list(range(n)):
            raise ValueError("sent and kept registers must partition the qubits")
        self.name = str(name)
        self.com = com
        self.n_qubits = n
        self.c_qubits = c
        self.d_qubits = d
        self.flavor = str(flavor)

    @property
    def ell(self):
        return self.n_qubits - 1


class AdversaryStrategy:
    """Opening-time cheating strategy for the binding experiment.

    Holds the joint state the committer prepared (scheme qubits first, a
    private register of `e_qubits` last) and an optional two-outcome
    measurement on the kept-plus-private qubits.  With no measurement the
    experiment substitutes the optimal one.
    """

    __slots__ = ("state", "e_qubits", "measurement")

    def __init__(self, state, e_qubits=0, measurement=None):
        if not isinstance(state, qsim.PureState):
            state = qsim.PureState(np.asarray(state, dtype=complex))
        e_qubits = int(e_qubits)
        if e_qubits < 0 or e_qubits >= state.n_qubits:
            raise ValueError("private register cannot cover the whole state")
        if measurement is not None:
            e0, e1 = (np.asarray(m, dtype=complex) for m in measurement)
            if e0.shape != e1.shape or e0.ndim != 2 or e0.shape[0] != e0.shape[1]:
                raise ValueError("measurement operators must be square and matched")
            for op in (e0, e1):
                if np.abs(op - op.conj().T).max() > MEASUREMENT_TOL:
                    raise ValueError("measurement operators must be Hermitian")
                if np.linalg.eigvalsh(op).min() < -MEASUREMENT_TOL:
                    raise ValueError("measurement operators must be positive")
            if np.abs(e0 + e1 - np.eye(e0.shape[0])).max() > MEASUREMENT_TOL:
                raise ValueError("measurement operators must resolve the identity")
            measurement = (e0, e1)
        self.state = state
        self.e_qubits = e_qubits
        self.measurement = measurement


def commit_state(scheme, b):
    """Honest commitment to bit b: the commit map on |b, 0...0>."""
    if b not in (0, 1):
        raise ValueError("committed bit must be 0 or 1")
    start = qsim.basis_state((b,) + (0,) * scheme.ell)
    return qsim.apply_unitary(start, scheme.com, list(range(scheme.n_qubits)))


def decommit_probability(scheme, b):
    """Chance the honest opening of b passes the receiver's check."""
    opened = qsim.apply_unitary(commit_state(scheme, b), scheme.com.conj().T,
                                list(range(scheme.n_qubits)))
    want = b << scheme.ell
    return float(np.abs(opened.vector[want]) ** 2)


def hiding_advantage(scheme):
    """Best success at guessing b from the sent register, in [1/2, 1]."""
    rho0 = qsim.partial_trace(commit_state(scheme, 0), list(scheme.c_qubits))
    rho1 = qsim.partial_trace(commit_state(scheme, 1), list(scheme.c_qubits))
    return 0.5 + qsim.trace_distance(rho0, rho1) / 2


def binding_states(scheme, adv, redundant=False):
    """Run the opening game up to the adversary's final measurement.

    Returns (accept probability, unmeasured branch, measured branch) with
    the branches reduced to the kept-plus-private qubits, or (0, None,
    None) when the validity check never passes.  The redundant flag
    splices a cancelling commit/uncommit pair and repeats each projection,
    which must not change anything.
    """
    n = scheme.n_qubits
    if adv.state.n_qubits != n + adv.e_qubits:
        raise ValueError("strategy state does not cover scheme plus private qubits")
    every = list(range(n))
    state = qsim.apply_unitary(adv.state, scheme.com.conj().T, every)
    if redundant:
        state = qsim.apply_unitary(state, scheme.com, every)
        state = qsim.apply_unitary(state, scheme.com.conj().T, every)
    wires = list(range(1, n))
    if wires:
        try:
            accept, opened = qsim.project(state, wires, (0,) * len(wires))
        except ValueError:
            return 0.0, None, None
        if redundant:
            _, opened = qsim.project(opened, wires, (0,) * len(wires))
    else:
        accept, opened = 1.0, state
    keep = list(scheme.d_qubits) + list(range(n, adv.state.n_qubits))
    plain = qsim.apply_unitary(opened, scheme.com, every)
    sigma0 = qsim.partial_trace(plain, keep)
    measured = qsim.dephase(opened, [0])
    if redundant:
        measured = qsim.dephase(measured, [0])
    measured = qsim.apply_unitary(measured, scheme.com, every)
    sigma1 = qsim.partial_trace(measured, keep)
    return float(accept), sigma0, sigma1


def _helstrom(sigma0, sigma1):
    diff = sigma1.matrix - sigma0.matrix
    vals, vecs = np.linalg.eigh(diff)
    pos = vecs[:, vals > 0]
    e1 = pos @ pos.conj().T
    return np.eye(diff.shape[0]) - e1, e1


def binding_experiment(scheme, adv, rng=None, trials=None):
    """Probability the adversary names the measure-or-not coin correctly.

    With `trials` unset the value is exact; otherwise the game is played
    that many times with `rng` and the hit rate is returned.
    """
    accept, sigma0, sigma1 = binding_states(scheme, adv)
    meas = adv.measurement
    if meas is not None:
        dim = 2 ** (len(scheme.d_qubits) + adv.e_qubits)
        if meas[0].shape != (dim, dim):
            raise ValueError("measurement does not act on the opened qubits")
    if trials is None:
        if accept == 0.0:
            return 0.5
        if meas is None:
            return 0.5 + accept * qsim.trace_distance(sigma0, sigma1) / 2
        win = 0.5 * (np.trace(meas[0] @ sigma0.matrix)
                     + np.trace(meas[1] @ sigma1.matrix)).real
        return (1 - accept) / 2 + accept * win
    if rng is None:
        raise ValueError("sampling the experiment requires an rng")
    trials = int(trials)
    if trials < 1:
        raise ValueError("trial count must be positive")
    if accept > 0.0 and meas is None:
        meas = _helstrom(sigma0, sigma1)
    hits = 0
    for _ in range(trials):
        b = int(rng.integers(0, 2))
        if accept == 0.0 or rng.random() >= accept:
            hits += int(rng.integers(0, 2)) == b
            continue
        sigma = (sigma0, sigma1)[b]
        p_one = float(np.trace(meas[1] @ sigma.matrix).real)
        guess = int(rng.random() < min(max(p_one, 0.0), 1.0))
        hits += guess == b
    return hits / trials


def superposition_attacker(scheme):
    """Honest commitment to |+>, opened with the optimal measurement."""
    plus = np.zeros(2 ** scheme.n_qubits, dtype=complex)
    plus[0] = plus[1 << scheme.ell] = 1 / math.sqrt(2)
    state = qsim.apply_unitary(qsim.PureState(plus), scheme.com,
                               list(range(scheme.n_qubits)))
    return AdversaryStrategy(state)


def _flat_bits(atom):
    if isinstance(atom, (tuple, list)):
        out = []
        for part in atom:
            out.extend(_flat_bits(part))
        return out
    bit = int(atom)
    if bit not in (0, 1):
        raise ValueError("alphabet atoms must be bit tuples")
    return [bit]


def _branch_isometry(pmf, width):
    dim = 2 ** (2 * width)
    target = np.zeros(dim, dtype=complex)
    for atom, prob in pmf.items_sorted():
        bits = _flat_bits(atom)
        idx = int("".join(map(str, bits)), 2)
        target[idx * 2 ** width + idx] = math.sqrt(float(prob))
    cols = [target]
    for j in range(dim):
        cand = np.zeros(dim, dtype=complex)
        cand[j] = 1.0
        for _ in range(2):  # re-orthogonalize to keep the unitarity check tight
            for col in cols:
                cand = cand - col * np.vdot(col, cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-9:
            cols.append(cand / norm)
        if len(cols) == dim:
            break
    return np.stack(cols, axis=1)


def purification_commit(pmf0, pmf1, name="purification"):
    """Commit by purifying one of two distributions over bit strings.

    The work register holds a sample and a copy; the copy and message tag
    stay with the committer, so the receiver sees exactly the classical
    mixture for the chosen bit.
    """
    atoms0 = [_flat_bits(a) for a, _ in pmf0.items_sorted()]
    atoms1 = [_flat_bits(a) for a, _ in pmf1.items_sorted()]
    widths = {len(bits) for bits in atoms0 + atoms1}
    if len(widths) != 1:
        raise ValueError("both branches must share one alphabet width")
    width = widths.pop()
    if width > ALPHABET_LIMIT:
        raise ValueError("alphabet wider than {} bits".format(ALPHABET_LIMIT))
    blocks = (_branch_isometry(pmf0, width), _branch_isometry(pmf1, width))
    dim = 2 ** (2 * width)
    com = np.zeros((2 * dim, 2 * dim), dtype=complex)
    com[:dim, :dim] = blocks[0]
    com[dim:, dim:] = blocks[1]
    c = tuple(range(1, width + 1))
    d = (0,) + tuple(range(width + 1, 2 * width + 1))
    return CommitScheme(name, com, c, d, flavor="purification")


def leaky_commit(tau):
    """Single-ancilla scheme whose hiding advantage is exactly 1/2 + tau/2."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("leak must lie in [0, 1]")
    theta = math.asin(tau)
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]], dtype=complex)
    com = np.eye(4, dtype=complex)
    com[2:, 2:] = rot
    return CommitScheme("leaky-{}".format(tau), com, (1,), (0,),
                        flavor="partially hiding")


def toy_schemes():
    """Reference catalog spanning the hiding/binding corners."""
    swap = np.eye(4, dtype=complex)[:, [0, 2, 1, 3]]
    coins0 = _CoinPmf(0.5)
    coins1 = _CoinPmf(0.75)
    return {
        "basis": CommitScheme("basis", qsim.CNOT, (1,), (0,),
                              flavor="perfectly binding"),
        "hiding": CommitScheme("hiding", np.eye(4, dtype=complex), (1,), (0,),
                               flavor="perfectly hiding"),
        "swap": CommitScheme("swap", swap, (0,), (1,),
                             flavor="perfectly hiding, fully malleable"),
        "leaky": leaky_commit(0.3),
        "purified-coins": purification_commit(coins0, coins1,
                                              name="purified-coins"),
    }


class _CoinPmf:
    # minimal stand-in so the catalog does not depend on the dist module
    __slots__ = ("p_one",)

    def __init__(self, p_one):
        self.p_one = p_one

    def items_sorted(self):
        return [((0,), 1 - self.p_one), ((1,), self.p_one)]


def dual_commit(com1, com2, name=None):
    """Chain two schemes behind a shared message via a copy wire.

    The incoming message qubit is copied onto the second scheme's message
    qubit, then both commit maps run.  Sent and kept registers are the
    unions of the components'.
    """
    n1, n2 = com1.n_qubits, com2.n_qubits
    n = n1 + n2
    if n > qsim.QUBIT_LIMIT:
        raise ValueError("combined register exceeds the qubit budget")
    u = _embed(com1.com, list(range(n1)), n)
    u = u @ _embed(com2.com, list(range(n1, n)), n)
    u = u @ _embed(qsim.CNOT, [0, n1], n)
    c = tuple(sorted(com1.c_qubits + tuple(n1 + q for q in com2.c_qubits)))
    d = tuple(sorted(com1.d_qubits + tuple(n1 + q for q in com2.d_qubits)))
    if name is None:
        name = "dual({},{})".format(com1.name, com2.name)
    flavor = "dual: {} / {}".format(com1.flavor, com2.flavor)
    return CommitScheme(name, u, c, d, flavor=flavor)


def _parity_gate(t):
    # permutation on t+1 qubits: last bit picks up the parity of the rest
    dim = 2 ** (t + 1)
    mat = np.zeros((dim, dim), dtype=complex)
    for v in range(dim):
        parity = bin(v >> 1).count("1") & 1
        mat[v ^ parity, v] = 1.0
    return mat


def xor_combine(schemes, name=None):
    """Secret-share the message as an XOR across every component scheme.

    All but the last share are uniform coins, the last is fixed so the
    shares sum to the message, and each component commits to its share.
    One perfectly hiding component hides the whole message; binding needs
    every component, since all shares open together.
    """
    schemes = list(schemes)
    t = len(schemes)
    if t < 2:
        raise ValueError("combining needs at least two schemes")
    n = 1 + sum(s.n_qubits for s in schemes)
    if n > qsim.QUBIT_LIMIT:
        raise ValueError("combined register exceeds the qubit budget")
    offsets = []
    at = 1
    for s in schemes:
        offsets.append(at)
        at += s.n_qubits
    u = np.eye(2 ** n, dtype=complex)
    for o in offsets[:-1]:
        u = _embed(qsim.H, [o], n) @ u
    u = _embed(_parity_gate(t), [0] + offsets, n) @ u
    for s, o in zip(schemes, offsets):
        u = _embed(s.com, list(range(o, o + s.n_qubits)), n) @ u
    c = []
    d = [0]
    for s, o in zip(schemes, offsets):
        c.extend(o + q for q in s.c_qubits)
        d.extend(o + q for q in s.d_qubits)
    if name is None:
        name = "xor({})".format(",".join(s.name for s in schemes))
    return CommitScheme(name, u, tuple(sorted(c)), tuple(sorted(d)),
                        flavor="xor of {} components".format(t))


def scheme_to_json(scheme):
    """Serialize a scheme, flattening the unitary and checksumming it."""
    re = [float(v) for v in scheme.com.real.ravel()]
    im = [float(v) for v in scheme.com.imag.ravel()]
    payload = {
        "name": scheme.name,
        "flavor": scheme.flavor,
        "n_qubits": scheme.n_qubits,
        "c_qubits": list(scheme.c_qubits),
        "d_qubits": list(scheme.d_qubits),
        "com_re": re,
        "com_im": im,
        "checksum": _unitary_checksum(re, im),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def scheme_from_json(text):
    payload = json.loads(text)
    re, im = payload["com_re"], payload["com_im"]
    if _unitary_checksum(re, im) != payload["checksum"]:
        raise ValueError("unitary checksum mismatch")
    dim = math.isqrt(len(re))
    com = (np.asarray(re, dtype=float)
           + 1j * np.asarray(im, dtype=float)).reshape(dim, dim)
    return CommitScheme(payload["name"], com, tuple(payload["c_qubits"]),
                        tuple(payload["d_qubits"]), flavor=payload["flavor"])


def _unitary_checksum(re, im):
    blob = json.dumps([re, im], separators=(",", ":")).encode("ascii")
    return hashlib.sha256(blob).hexdigest()
