"""Entanglement-assisted remote state preparation, simulated at the density-matrix level.

Alice measures her half of the shared pair with the four-outcome POVM
``E_m = 1/2 sigma_m |psi*><psi*| sigma_m^dagger``, sends the outcome as two
bits (or, with probability ``1 - r``, the veto message ``00``), and Bob applies
the matching Pauli correction. Tomography of Bob's output uses the six Pauli
eigenstate projectors with linear inversion.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import qstate
from .errors import InputError
from .qstate import CorrectionLabel

LABELS = tuple(CorrectionLabel)
AXES = ("X", "Y", "Z")


@dataclass(frozen=True, eq=False)
class SourceModel:
    kind: str
    rho: np.ndarray
    visibility: float | None = None

    @classmethod
    def ideal(cls):
        return cls("ideal", qstate.bell_phi_plus())

    @classmethod
    def werner(cls, v):
        return cls("werner", qstate.werner(v), float(v))

    @classmethod
    def explicit(cls, rho):
        return cls("explicit", qstate.as_density(rho, 4))

    @property
    def label(self):
        if self.kind == "werner":
            return f"werner:{self.visibility:g}"
        return self.kind


def load_source_matrix(path):
    """Read a 4x4 density matrix stored row-major as ``[re, im]`` pairs.

    Accepts either a bare nested list or ``{"rho": ...}``.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read source matrix {path}: {exc}", "malformed") from exc
    rows = doc.get("rho") if isinstance(doc, dict) else doc
    try:
        m = np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: expected 4 rows of 4 [re, im] pairs", "malformed") from exc
    return qstate.as_density(m, 4)


def save_source_matrix(rho, path):
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(rho)]
    Path(path).write_text(json.dumps({"rho": rows}) + "\n")


def parse_source(text):
    """``ideal`` | ``werner:<v>`` | ``file:<path>``."""
    if text == "ideal":
        return SourceModel.ideal()
    if text.startswith("werner:"):
        try:
            v = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad Werner visibility in {text!r}", "source") from exc
        return SourceModel.werner(v)
    if text.startswith("file:"):
        return SourceModel.explicit(load_source_matrix(text.split(":", 1)[1]))
    raise InputError(f"unknown source {text!r}; use ideal, werner:<v> or file:<path>", "source")


def povm_elements(angles):
    psi_c = qstate.pure_ket(angles).conj()
    base = 0.5 * np.outer(psi_c, psi_c.conj())
    return [qstate.pauli_conjugate(m, base) for m in LABELS]


class Outcome(NamedTuple):
    prob: float
    bob: np.ndarray | None


def outcome_distribution(source, angles):
    """Probability of each POVM outcome and Bob's normalized conditional state."""
    rho = source.rho if isinstance(source, SourceModel) else np.asarray(source)
    out = []
    for e in povm_elements(angles):
        m = np.kron(e, qstate.I2) @ rho
        p = float(np.trace(m).real)
        if p < 1e-15:
            out.append(Outcome(max(p, 0.0), None))
            continue
        bob = qstate.partial_trace(m, keep=1) / p
        out.append(Outcome(p, (bob + bob.conj().T) / 2))
    return out


def message_distribution(r):
    """Message probabilities when all four outcomes are equally likely."""
    if not 0 <= r <= 1:
        raise InputError(f"radius r={r} outside [0, 1]", "radius")
    return np.array([(1 - r) + r / 4, r / 4, r / 4, r / 4])


def _corrected_states(outcomes):
    """``table[m][k]``: Bob's state after outcome m and received message k."""
    return [[None if o.bob is None else qstate.pauli_conjugate(k, o.bob) for k in LABELS] for o in outcomes]


@dataclass
class SimResult:
    target: np.ndarray
    expected_out: np.ndarray
    fidelity_vs_target: float
    message_freqs: np.ndarray
    classical_cost_bits: float
    reconstructed_out: np.ndarray | None = None
    fidelity_vs_expected: float | None = None
    fidelity_expected_vs_target: float | None = None

    def to_dict(self):
        d = {
            "target_bloch": qstate.density_to_bloch(self.target).tolist(),
            "expected_bloch": qstate.density_to_bloch(self.expected_out).tolist(),
            "fidelity_vs_target": self.fidelity_vs_target,
            "fidelity_expected_vs_target": self.fidelity_expected_vs_target,
            "fidelity_vs_expected": self.fidelity_vs_expected,
            "message_freqs": np.asarray(self.message_freqs).tolist(),
            "classical_cost_bits": self.classical_cost_bits,
        }
        if self.reconstructed_out is not None:
            d["reconstructed_bloch"] = qstate.density_to_bloch(self.reconstructed_out).tolist()
        return d


def rsp_expected_output(source, angles, r=1.0):
    """Bob's average corrected state, averaged over outcomes and vetoes."""
    outcomes = outcome_distribution(source, angles)
    table = _corrected_states(outcomes)
    expected = np.zeros((2, 2), dtype=complex)
    freqs = np.zeros(4)
    for m, o in enumerate(outcomes):
        freqs[m] += r * o.prob
        freqs[0] += (1 - r) * o.prob
        if o.bob is None:
            continue
        expected += o.prob * (r * table[m][m] + (1 - r) * table[m][CorrectionLabel.I])
    expected = qstate.as_density(expected)
    target = qstate.angles_to_state(angles, r)
    f = qstate.fidelity(target, expected)
    return SimResult(target, expected, f, freqs, qstate.shannon_entropy(freqs), fidelity_expected_vs_target=f)


@dataclass(frozen=True)
class ProtocolConfig:
    angles: qstate.PureAngles
    r: float = 1.0
    source: SourceModel = field(default_factory=SourceModel.ideal)
    shots: int = 1000
    seed: int = 0
    mode: str = "sampled"

    def __post_init__(self):
        if not 0 <= self.r <= 1:
            raise InputError(f"radius r={self.r} outside [0, 1]", "radius")
        if self.mode not in ("expected", "sampled"):
            raise InputError(f"mode must be expected or sampled, not {self.mode!r}", "mode")
        if self.mode == "sampled" and self.shots < 1:
            raise InputError("sampled mode needs at least one shot", "shots")


class Shot(NamedTuple):
    outcome: CorrectionLabel
    message: str
    bob_out: np.ndarray


def sample_messages(config, rng=None):
    """Vectorized draw of POVM outcomes and transmitted messages for every shot."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    probs = np.array([o.prob for o in outcome_distribution(config.source, config.angles)])
    outcomes = rng.choice(4, size=config.shots, p=probs / probs.sum())
    sent = rng.random(config.shots) < config.r
    return outcomes, np.where(sent, outcomes, 0)


def rsp_sample_run(config):
    """Stream of shots: outcome, two-bit message and Bob's corrected state.

    Bob's per-shot state is the exact conditional density; randomness enters
    through the outcome and veto draws only.
    """
    table = _corrected_states(outcome_distribution(config.source, config.angles))
    outcomes, messages = sample_messages(config)
    for m, k in zip(outcomes.tolist(), messages.tolist()):
        yield Shot(CorrectionLabel(m), CorrectionLabel(k).bits, table[m][k])


def _plus_prob(rho, axis):
    b = qstate.density_to_bloch(rho)[AXES.index(axis)]
    return float(np.clip((1 + b) / 2, 0.0, 1.0))


@dataclass
class TomographyCounts:
    counts: dict
    shots_per_setting: int

    def __post_init__(self):
        for a in AXES:
            if self.counts[a + "+"] + self.counts[a + "-"] != self.shots_per_setting:
                raise InputError(f"{a} counts do not add up to {self.shots_per_setting}", "counts")


def simulate_tomography(rho, shots_per_setting, seed):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho = qstate.as_density(rho)
    counts = {}
    for a in AXES:
        plus = int(rng.binomial(shots_per_setting, _plus_prob(rho, a)))
        counts[a + "+"] = plus
        counts[a + "-"] = shots_per_setting - plus
    return TomographyCounts(counts, shots_per_setting)


def expected_counts(rho, shots_per_setting):
    """Noise-free counts, rounded to the nearest integer."""
    counts = {}
    for a in AXES:
        plus = int(round(shots_per_setting * _plus_prob(rho, a)))
        counts[a + "+"] = plus
        counts[a + "-"] = shots_per_setting - plus
    return TomographyCounts(counts, shots_per_setting)


def reconstruct(counts):
    """Linear inversion, projected radially onto the Bloch ball if needed."""
    n = counts.shots_per_setting
    if n <= 0:
        raise InputError("tomography needs at least one shot per setting", "shots")
    b = np.array([2 * counts.counts[a + "+"] / n - 1 for a in AXES])
    norm = np.linalg.norm(b)
    if norm > 1:
        b = b / norm
    return qstate.bloch_to_density(b)


def protocol_tomography(source, angles, r, shots_per_setting, rng):
    """Tomography counts where every analysed photon comes from its own protocol run."""
    outcomes = outcome_distribution(source, angles)
    table = _corrected_states(outcomes)
    branches, probs = [], []
    for m, o in enumerate(outcomes):
        if o.bob is None:
            continue
        branches += [table[m][m], table[m][CorrectionLabel.I]]
        probs += [o.prob * r, o.prob * (1 - r)]
    probs = np.array(probs) / np.sum(probs)
    counts = {}
    for a in AXES:
        per_branch = rng.multinomial(shots_per_setting, probs)
        plus = sum(int(rng.binomial(k, _plus_prob(s, a))) for k, s in zip(per_branch, branches) if k)
        counts[a + "+"] = plus
        counts[a + "-"] = shots_per_setting - plus
    return TomographyCounts(counts, shots_per_setting)


@dataclass
class GridResult:
    states: list
    mean_fidelity: float
    stderr: float
    mean_fidelity_vs_expected: float | None
    stderr_vs_expected: float | None
    message_freqs: np.ndarray
    classical_cost_bits: float
    mode: str
    source: str
    ensemble: str
    radius: float | None

    def to_dict(self):
        return {
            "ensemble": self.ensemble,
            "radius": self.radius,
            "source": self.source,
            "mode": self.mode,
            "mean_fidelity": self.mean_fidelity,
            "stderr": self.stderr,
            "mean_fidelity_vs_expected": self.mean_fidelity_vs_expected,
            "stderr_vs_expected": self.stderr_vs_expected,
            "message_freqs": np.asarray(self.message_freqs).tolist(),
            "classical_cost_bits": self.classical_cost_bits,
            "states": [s.to_dict() for s in self.states],
        }


def mean_and_stderr(values):
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def run_experiment_grid(source, ensemble, shots=10_000, seed=0, mode="expected", tomography_shots=None):
    """Prepare every ensemble state and report mean fidelity with standard error.

    In sampled mode each state gets its own generator spawned from ``seed``;
    ``shots`` runs feed the message statistics and ``tomography_shots`` runs
    per analyser setting feed the reconstruction.
    """
    if mode not in ("expected", "sampled"):
        raise InputError(f"mode must be expected or sampled, not {mode!r}", "mode")
    tomo = shots if tomography_shots is None else tomography_shots
    streams = np.random.SeedSequence(seed).spawn(len(ensemble))
    results = []
    total = np.zeros(4)
    for b, p, ss in zip(ensemble.blochs, ensemble.probs, streams):
        angles, r = qstate.bloch_to_angles(b)
        res = rsp_expected_output(source, angles, r)
        if mode == "sampled":
            rng = np.random.default_rng(ss)
            _, msgs = sample_messages(ProtocolConfig(angles, r, source, shots, 0, "sampled"), rng)
            res.message_freqs = np.bincount(msgs, minlength=4).astype(float)
            rec = reconstruct(protocol_tomography(source, angles, r, tomo, rng))
            res.reconstructed_out = rec
            res.fidelity_vs_target = qstate.fidelity(res.target, rec)
            res.fidelity_vs_expected = qstate.fidelity(res.expected_out, rec)
            total += p * res.message_freqs / shots
        else:
            total += p * res.message_freqs
        results.append(res)
    mean, se = mean_and_stderr([s.fidelity_vs_target for s in results])
    mean_e = se_e = None
    if mode == "sampled":
        mean_e, se_e = mean_and_stderr([s.fidelity_vs_expected for s in results])
    return GridResult(results, mean, se, mean_e, se_e, total, qstate.shannon_entropy(total), mode,
                      source.label, ensemble.name, ensemble.common_radius)
