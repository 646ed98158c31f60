"""Parameter sweeps behind the ``fig1`` and ``fig2`` data tables.

Each sweep point prepares ``|xi>_{AC}`` with parameter ``p`` and
``|eta>_{C'B}`` with parameter ``q`` in one of two families:

* ``computational``: ``sqrt(p)|00> + sqrt(1-p)|11>``
* ``hadamard``:      ``sqrt(p)|++> + sqrt(1-p)|-->``

and reports the data in one of three modes: closed-form ``theory``,
finite-shot ``ideal_sim`` (no readout noise) and ``noisy_sim`` (readout
noise plus calibration-matrix mitigation).
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, IoError
from .measures import concurrence_mixed, l1_coherence, predictability
from .qstate import BlochVector, PureState, make_pair_state, partial_trace, tensor
from .shots import (
    DEFAULT_EPS01,
    DEFAULT_EPS10,
    DEFAULT_SHOTS,
    SETTINGS_2Q,
    SHOT_FLOOR,
    CalibrationMatrix,
    ReadoutNoise,
    bell_circuit_probabilities,
    build_calibration,
    conditional_ab,
    derive_rng,
    mitigate,
    rotate_to_basis,
    sample_indices,
    tomography_2q,
)
from .swap import OUTCOMES, bloch_concurrences, bloch_probabilities

MODES = ("theory", "ideal_sim", "noisy_sim")
PREPARATIONS = ("computational", "hadamard")
P_RULES = ("1-q", "q", "explicit")
Q_CLAMP = (0.03, 0.97)
CSV_HEADER = ("q", "quantity", "mode", "value", "stderr", "flags")

# stream keys for derive_rng
_KEY_CAL = 1_000_003
_KEY_POINT = 2


@dataclass(frozen=True)
class SweepConfig:
    q_values: tuple[float, ...] = tuple(np.linspace(0.0, 1.0, 21).round(12))
    preparation: str = "hadamard"
    p_rule: str = "1-q"
    p_values: tuple[float, ...] = ()
    shots: int = DEFAULT_SHOTS
    noise: ReadoutNoise = field(default_factory=ReadoutNoise)
    seed: int = 0
    modes: tuple[str, ...] = MODES
    mitigation: bool = True
    calibration_shots: int | None = DEFAULT_SHOTS
    jackknife_blocks: int = 10
    workers: int = 1

    def __post_init__(self):
        q = tuple(float(v) for v in self.q_values)
        if not q:
            raise ConfigError("q_values must be nonempty", "q_values")
        if any(not 0 <= v <= 1 for v in q):
            raise ConfigError("every q must lie in [0, 1]", "q_values")
        if self.preparation not in PREPARATIONS:
            raise ConfigError(f"preparation must be one of {PREPARATIONS}", "preparation")
        if self.p_rule not in P_RULES:
            raise ConfigError(f"p_rule must be one of {P_RULES}", "p_rule")
        if self.p_rule == "explicit":
            if len(self.p_values) != len(q):
                raise ConfigError("explicit p_values must match q_values in length", "p_values")
            if any(not 0 <= v <= 1 for v in self.p_values):
                raise ConfigError("every p must lie in [0, 1]", "p_values")
        bad = set(self.modes) - set(MODES)
        if bad or not self.modes:
            raise ConfigError(f"modes must be a nonempty subset of {MODES}", "modes")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1", "shots")
        if self.jackknife_blocks < 2:
            raise ConfigError("jackknife_blocks must be >= 2", "jackknife_blocks")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", "workers")
        if self.shot_modes:
            q = tuple(min(max(v, Q_CLAMP[0]), Q_CLAMP[1]) for v in q)
        object.__setattr__(self, "q_values", q)
        object.__setattr__(self, "p_values", tuple(float(v) for v in self.p_values))
        object.__setattr__(self, "modes", tuple(m for m in MODES if m in self.modes))

    @property
    def shot_modes(self) -> bool:
        return any(m != "theory" for m in self.modes)

    def p_of(self, i: int) -> float:
        q = self.q_values[i]
        if self.p_rule == "1-q":
            return 1 - q
        if self.p_rule == "q":
            return q
        return self.p_values[i]


@dataclass(frozen=True)
class Record:
    q: float
    quantity: str
    mode: str
    value: float | None
    stderr: float | None = None
    flags: tuple[str, ...] = ()

    def sort_key(self):
        return (self.q, self.quantity, self.mode)


# ---------------------------------------------------------------- preparation


def prepare_pair(p: float, preparation: str) -> PureState:
    a, b = math.sqrt(p), math.sqrt(1 - p)
    if preparation == "computational":
        return make_pair_state(a, 0, 0, b)
    if preparation == "hadamard":
        # sqrt(p)|++> + sqrt(1-p)|--> expanded in the computational basis
        return make_pair_state((a + b) / 2, (a - b) / 2, (a - b) / 2, (a + b) / 2)
    raise ConfigError(f"unknown preparation {preparation!r}", "preparation")


def marginal_bloch(p: float, preparation: str) -> BlochVector:
    """Closed-form Bloch vector of either one-qubit marginal of :func:`prepare_pair`."""
    if preparation == "computational":
        return BlochVector(0.0, 0.0, 2 * p - 1)
    return BlochVector(2 * p - 1, 0.0, 0.0)


def pair_concurrence(p: float) -> float:
    return 2 * math.sqrt(p * (1 - p))


# ---------------------------------------------------------------- estimators


def _jackknife(
    records: dict[str, np.ndarray],
    blocks: int,
    estimate: Callable[[dict[str, np.ndarray]], dict[str, float | None]],
) -> tuple[dict[str, float | None], dict[str, float | None]]:
    """Full-sample estimates plus delete-one-block jackknife standard errors."""
    full = estimate(records)
    splits = {k: np.array_split(np.arange(len(v)), blocks) for k, v in records.items()}
    reps = []
    for b in range(blocks):
        sub = {k: np.delete(v, splits[k][b]) for k, v in records.items()}
        reps.append(estimate(sub))
    se = {}
    for name, val in full.items():
        vals = [r[name] for r in reps if r.get(name) is not None]
        if val is None or len(vals) < blocks:
            se[name] = None
            continue
        vals = np.asarray(vals)
        se[name] = float(math.sqrt((blocks - 1) / blocks * np.sum((vals - vals.mean()) ** 2)))
    return full, se


def _distribution(idx: np.ndarray, n: int, calibration: CalibrationMatrix | None) -> np.ndarray:
    freq = np.bincount(idx, minlength=2**n) / max(len(idx), 1)
    return freq if calibration is None else mitigate(freq, calibration)


def _pair_estimates(calibration: CalibrationMatrix | None, marginal_qubit: int):
    def estimate(records):
        dists = {s: _distribution(r, 2, calibration) for s, r in records.items()}
        rho = tomography_2q(dists)
        red = partial_trace(rho, {marginal_qubit})
        return {"P": predictability(red), "C": l1_coherence(red), "E": concurrence_mixed(rho)}

    return estimate


def _fig2_estimates(calibration: CalibrationMatrix | None):
    def estimate(records):
        weights = {o: 0.0 for o in OUTCOMES}
        cond = {o: {} for o in OUTCOMES}
        for s, r in records.items():
            w, c = conditional_ab(_distribution(r, 4, calibration))
            for o in OUTCOMES:
                weights[o] += w[o] / len(records)
                cond[o][s] = c[o]
        out = {}
        for o in OUTCOMES:
            out[f"Pr_{o.value}"] = weights[o]
            if any(v is None for v in cond[o].values()):
                out[f"E_{o.value}"] = None
            else:
                out[f"E_{o.value}"] = concurrence_mixed(tomography_2q(cond[o]))
        out["prob_identity"] = 1 - 2 * (weights[OUTCOMES[0]] + weights[OUTCOMES[2]])
        return out

    return estimate


def _calibration(config: SweepConfig, n_qubits: int) -> CalibrationMatrix | None:
    if not config.mitigation:
        return None
    return build_calibration(config.noise, n_qubits, config.calibration_shots, seed=hash_key(config.seed, _KEY_CAL, n_qubits))


def hash_key(*keys: int) -> int:
    return int(derive_rng(*keys).integers(2**63 - 1))


def _mode_noise(config: SweepConfig, mode: str) -> ReadoutNoise | None:
    return config.noise if mode == "noisy_sim" else None


# ---------------------------------------------------------------- fig1


def _fig1_point(config: SweepConfig, i: int) -> list[Record]:
    q, p = config.q_values[i], config.p_of(i)
    rows: list[Record] = []
    pairs = (("C", "AC", p, 1), ("Cp", "CpB", q, 0))
    if "theory" in config.modes:
        for tag, pair_tag, x, _ in pairs:
            b = marginal_bloch(x, config.preparation)
            rows += [
                Record(q, f"P_{tag}", "theory", abs(b.r_z)),
                Record(q, f"C_{tag}", "theory", math.hypot(b.r_x, b.r_y)),
                Record(q, f"E_{pair_tag}", "theory", pair_concurrence(x)),
            ]
    for m_i, mode in enumerate(config.modes):
        if mode == "theory":
            continue
        noise = _mode_noise(config, mode)
        cal = _calibration(config, 2) if mode == "noisy_sim" else None
        for k, (tag, pair_tag, x, marg) in enumerate(pairs):
            state = prepare_pair(x, config.preparation)
            records = {}
            for s_i, setting in enumerate(SETTINGS_2Q):
                rng = derive_rng(config.seed, _KEY_POINT, i, m_i, k, s_i)
                probs = np.abs(rotate_to_basis(state.amps, setting)) ** 2
                records[setting] = sample_indices(probs, config.shots, noise, rng)
            est, se = _jackknife(records, config.jackknife_blocks, _pair_estimates(cal, marg))
            for name, qty in (("P", f"P_{tag}"), ("C", f"C_{tag}"), ("E", f"E_{pair_tag}")):
                rows.append(Record(q, qty, mode, est[name], se[name]))
    return rows


# ---------------------------------------------------------------- fig2


def _fig2_point(config: SweepConfig, i: int) -> list[Record]:
    q, p = config.q_values[i], config.p_of(i)
    rows: list[Record] = []
    if "theory" in config.modes:
        b_c = marginal_bloch(p, config.preparation)
        b_cp = marginal_bloch(q, config.preparation)
        probs = bloch_probabilities(b_c, b_cp)
        concs = bloch_concurrences(b_c, b_cp)
        for o in OUTCOMES:
            rows.append(Record(q, f"Pr_{o.value}", "theory", probs[o]))
            if concs[o] is None:
                rows.append(Record(q, f"E_{o.value}", "theory", None, flags=("absent",)))
            else:
                rows.append(Record(q, f"E_{o.value}", "theory", concs[o]))
        ident = 1 - 2 * (probs[OUTCOMES[0]] + probs[OUTCOMES[2]])
        rows.append(Record(q, "prob_identity", "theory", ident))
        rows.append(Record(q, "C_C_sq", "theory", b_c.r_x**2 + b_c.r_y**2))
    global_state = tensor(prepare_pair(p, config.preparation), prepare_pair(q, config.preparation))
    for m_i, mode in enumerate(config.modes):
        if mode == "theory":
            continue
        noise = _mode_noise(config, mode)
        cal = _calibration(config, 4) if mode == "noisy_sim" else None
        records = {}
        for s_i, setting in enumerate(SETTINGS_2Q):
            rng = derive_rng(config.seed, _KEY_POINT, i, m_i, 2, s_i)
            records[setting] = sample_indices(bell_circuit_probabilities(global_state, setting), config.shots, noise, rng)
        est, se = _jackknife(records, config.jackknife_blocks, _fig2_estimates(cal))
        total = sum(len(r) for r in records.values())
        for o in OUTCOMES:
            bits = int(o.bits, 2)
            group_min = min(int(np.sum(((r >> 1) & 3) == bits)) for r in records.values())
            flags = ("low_statistics",) if group_min < SHOT_FLOOR else ()
            pr = est[f"Pr_{o.value}"]
            rows.append(Record(q, f"Pr_{o.value}", mode, pr, math.sqrt(max(pr * (1 - pr), 0) / total)))
            rows.append(Record(q, f"E_{o.value}", mode, est[f"E_{o.value}"], se[f"E_{o.value}"], flags))
        f = est["prob_identity"]
        frac = (1 - f) / 2
        rows.append(Record(q, "prob_identity", mode, f, 2 * math.sqrt(max(frac * (1 - frac), 0) / total)))
    return rows


def _run(point: Callable[[SweepConfig, int], list[Record]], config: SweepConfig) -> list[Record]:
    idx = range(len(config.q_values))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(point, [config] * len(idx), idx))
    else:
        chunks = [point(config, i) for i in idx]
    return sorted((r for c in chunks for r in c), key=Record.sort_key)


def run_fig1(config: SweepConfig) -> list[Record]:
    """Local predictability, coherence and pair entanglement before the BBM."""
    return _run(_fig1_point, config)


def run_fig2(config: SweepConfig) -> list[Record]:
    """Post-selected AB concurrences, outcome probabilities and ``1 - 2(Pr(Phi+) + Pr(Psi+))``."""
    return _run(_fig2_point, config)


def table_lookup(table: Sequence[Record], q: float, quantity: str, mode: str) -> Record:
    for r in table:
        if r.quantity == quantity and r.mode == mode and abs(r.q - q) < 1e-12:
            return r
    raise KeyError((q, quantity, mode))


# ---------------------------------------------------------------- emit


def _fmt(v: float | None) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".12g")


def _round12(v: float | None) -> float | None:
    s = _fmt(v)
    return float(s) if s else None


def to_csv(table: Sequence[Record]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in table:
        w.writerow([_fmt(r.q), r.quantity, r.mode, _fmt(r.value), _fmt(r.stderr), ";".join(r.flags)])
    return buf.getvalue()


def to_json(table: Sequence[Record]) -> str:
    recs = [
        {
            "q": _round12(r.q),
            "quantity": r.quantity,
            "mode": r.mode,
            "value": _round12(r.value),
            "stderr": _round12(r.stderr),
            "flags": list(r.flags),
        }
        for r in table
    ]
    return json.dumps(recs, indent=1) + "\n"


def emit(table: Sequence[Record], fmt: str, path: str | Path | None) -> str:
    """Serialize ``table`` as CSV or JSON; write to ``path`` unless it is None or '-'."""
    if fmt == "csv":
        text = to_csv(table)
    elif fmt == "json":
        text = to_json(table)
    else:
        raise ConfigError(f"unknown format {fmt!r}", "format")
    if path is not None and str(path) != "-":
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return text


def read_csv(text: str) -> list[Record]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        Record(
            float(r["q"]),
            r["quantity"],
            r["mode"],
            float(r["value"]) if r["value"] else None,
            float(r["stderr"]) if r["stderr"] else None,
            tuple(f for f in r["flags"].split(";") if f),
        )
        for r in rows
    ]


# ---------------------------------------------------------------- config files

CONFIG_TEMPLATE = f"""\
# Sweep configuration. Command-line flags override these values.
[sweep]
# either an explicit list ...
# q_values = 0.03, 0.25, 0.5
# ... or an evenly spaced grid
q_min = 0.0
q_max = 1.0
q_steps = 21
# computational | hadamard
preparation = hadamard
# 1-q | q | explicit (then set p_values, one per q)
p_rule = 1-q
modes = theory, ideal_sim, noisy_sim

[run]
shots = {DEFAULT_SHOTS}
seed = 0
mitigation = true
calibration_shots = {DEFAULT_SHOTS}
jackknife_blocks = 10
workers = 1

[noise]
eps01 = {DEFAULT_EPS01}
eps10 = {DEFAULT_EPS10}
"""

_KNOWN = {
    "sweep": {"q_values", "q_min", "q_max", "q_steps", "preparation", "p_rule", "p_values", "modes"},
    "run": {"shots", "seed", "mitigation", "calibration_shots", "jackknife_blocks", "workers"},
    "noise": {"eps01", "eps10"},
}


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def _floats(s: str) -> list[float]:
    return [float(x) for x in re.split(r"[,\s]+", s.strip()) if x]


def parse_config_text(text: str) -> dict:
    """Parse an INI-style sweep file into keyword overrides for :class:`SweepConfig`.

    Grid keys (``q_min``, ``q_max``, ``q_steps``) are returned as-is so that
    command-line flags can still adjust them before the grid is built.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          line=getattr(exc, "lineno", None)) from exc
    out: dict = {}
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]", section, _line_of(text, section, ""))
        for key, raw in cp.items(section):
            field_name = f"{section}.{key}"
            line = _line_of(text, section, key)
            if key not in _KNOWN[section]:
                raise ConfigError("unknown key", field_name, line)
            try:
                if key in ("q_values", "p_values"):
                    out[key] = tuple(_floats(raw))
                elif key in ("q_min", "q_max", "eps01", "eps10"):
                    out[key] = float(raw)
                elif key in ("q_steps", "shots", "seed", "jackknife_blocks", "workers"):
                    out[key] = int(raw)
                elif key == "calibration_shots":
                    out[key] = None if raw.strip().lower() in ("none", "exact", "inf") else int(raw)
                elif key == "mitigation":
                    out[key] = cp.getboolean(section, key)
                elif key == "modes":
                    out[key] = tuple(m.strip() for m in raw.split(",") if m.strip())
                else:
                    out[key] = raw.strip()
            except ValueError as exc:
                raise ConfigError(f"bad value {raw!r}: {exc}", field_name, line) from exc
            out.setdefault("_lines", {})[key] = (field_name, line)
    return out


def build_config(overrides: dict) -> SweepConfig:
    """Assemble a :class:`SweepConfig` from parsed file values and flag overrides."""
    o = dict(overrides)
    lines = o.pop("_lines", {})
    try:
        if "q_values" not in o and any(k in o for k in ("q_min", "q_max", "q_steps")):
            lo, hi, n = o.pop("q_min", 0.0), o.pop("q_max", 1.0), o.pop("q_steps", 21)
            if n < 1:
                raise ConfigError("q_steps must be >= 1", "q_steps")
            o["q_values"] = tuple(np.linspace(lo, hi, n).round(12)) if n > 1 else (lo,)
        for k in ("q_min", "q_max", "q_steps"):
            o.pop(k, None)
        e01 = o.pop("eps01", DEFAULT_EPS01)
        e10 = o.pop("eps10", DEFAULT_EPS10)
        try:
            o["noise"] = ReadoutNoise(e01, e10)
        except ValueError as exc:
            raise ConfigError(str(exc), "noise") from exc
        known = {f.name for f in dataclasses.fields(SweepConfig)}
        return SweepConfig(**{k: v for k, v in o.items() if k in known})
    except ConfigError as exc:
        if exc.line is None and exc.field:
            key = exc.field.split(".")[-1]
            cands = {"q_values": ("q_values", "q_min", "q_steps"), "noise": ("eps01", "eps10")}.get(key, (key,))
            for cand in cands:
                if cand in lines:
                    raise ConfigError(str(exc).split(" (")[0], lines[cand][0], lines[cand][1]) from exc
        raise
