"""Scenario runner, N sweeps, report files and the self-verification suite."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import circuits as C
from . import oracle as O
from .fock import (
    DualRailQubit,
    Mode,
    QuantumState,
    Species,
    add_modes,
    dual_rail_modes,
    dual_rail_register,
    load_dual_rail,
    new_register,
)
from .gates import IfmGateSpec, ifm, ideal_ifm, survival_probability
from .measurement import MeasurementError, ShotRecord, born_probabilities, detect, sample_survival, shot_rng

CIRCUITS = ("bell_gen", "bell_measure", "chi_gen", "gc_cnot", "swap", "ee_cnot", "ifm_gate")
LOST = "lost"
_UNMEASURED = ("bell_gen", "chi_gen", "ifm_gate")
DIGITS = 12

CSV_COLUMNS = ("outcome", "probability", "count", "frequency")
SWEEP_COLUMNS = ("N", "theta", "p_success_simulated", "p_success_formula", "abs_error", "p_loss")

# input qubits per circuit and their species
_INPUT_SPECIES = {
    "bell_gen": [Species.POSITRON, Species.ELECTRON],
    "bell_measure": [Species.POSITRON, Species.ELECTRON],
    "chi_gen": [],
    "gc_cnot": [Species.POSITRON, Species.ELECTRON],
    "swap": [Species.ELECTRON],
    "ee_cnot": [Species.ELECTRON, Species.ELECTRON],
    "ifm_gate": [Species.ELECTRON],
}


class ConfigError(ValueError):
    pass


def rnd(x: float) -> float:
    """Round to the report precision (12 significant digits)."""
    return float(f"{x:.{DIGITS}g}")


@dataclass
class ScenarioConfig:
    circuit: str = "bell_measure"
    mode: str = "ideal"
    stages: int | None = None
    input: str | None = None
    shots: int = 1000
    seed: int = 0
    format: str = "json"
    out: str | None = None
    object: str = "present"

    def validate(self) -> None:
        if self.circuit not in CIRCUITS:
            raise ConfigError(f"unknown circuit {self.circuit!r}; choose from {', '.join(CIRCUITS)}")
        if self.mode not in ("ideal", "finite"):
            raise ConfigError("mode must be 'ideal' or 'finite'")
        if self.mode == "finite" and (self.stages is None or int(self.stages) < 1):
            raise ConfigError("finite mode needs --stages N >= 1")
        if self.mode == "ideal" and self.stages is not None:
            raise ConfigError("--stages only applies to finite mode")
        if int(self.shots) < 1:
            raise ConfigError("shots must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.object not in ("present", "absent"):
            raise ConfigError("object must be 'present' or 'absent'")
        self.input_vector()

    @property
    def n_stages(self) -> int | None:
        return int(self.stages) if self.mode == "finite" else None

    @property
    def n_inputs(self) -> int:
        return len(_INPUT_SPECIES[self.circuit])

    def input_vector(self) -> np.ndarray:
        return parse_input(self.input, self.n_inputs)


_NAMED = {
    "phi+": O.BELL[(0, 0)].vector, "phi-": O.BELL[(0, 1)].vector,
    "psi+": O.BELL[(1, 0)].vector, "psi-": O.BELL[(1, 1)].vector,
    "+": np.array([1, 1]) / math.sqrt(2), "-": np.array([1, -1]) / math.sqrt(2),
}


def parse_input(spec: str | None, n: int) -> np.ndarray:
    """Named basis state ('01', 'phi+', '+') or comma-separated amplitudes."""
    if n == 0:
        if spec not in (None, ""):
            raise ConfigError("this circuit takes no input state")
        return np.ones(1, dtype=complex)
    if spec is None or spec == "":
        spec = "0" * n
    key = spec.strip().lower()
    if key in _NAMED:
        vec = np.asarray(_NAMED[key], dtype=complex)
    elif set(key) <= {"0", "1"} and len(key) == n:
        vec = O.basis_state([int(c) for c in key]).vector
    else:
        try:
            vec = np.array([complex(tok.strip().replace(" ", "")) for tok in spec.split(",")])
        except ValueError:
            raise ConfigError(f"cannot parse input {spec!r}") from None
    if vec.size != 2 ** n:
        raise ConfigError(f"input {spec!r} does not describe {n} qubit(s)")
    if abs(np.linalg.norm(vec) - 1) > 1e-9:
        raise ConfigError("input amplitudes must be normalized within 1e-9")
    return vec / np.linalg.norm(vec)


# -- running one circuit -----------------------------------------------------------

@dataclass
class Run:
    """One execution: surviving state, output qubits (or Bell bits) and branch weight."""

    state: QuantumState
    outputs: list[DualRailQubit] = field(default_factory=list)
    probability: float = 1.0
    inconclusive: bool = False
    bits: tuple[int, ...] | None = None


def prepare(config: ScenarioConfig) -> tuple[QuantumState, list[DualRailQubit]]:
    species = _INPUT_SPECIES[config.circuit]
    if config.circuit == "ifm_gate":
        state, qubits = dual_rail_register(species, names=["target"])
        load_dual_rail(state, qubits, config.input_vector())
        add_modes(state, [Mode("object", Species.POSITRON, "x")], [int(config.object == "present")])
        return state, qubits
    if not species:
        return dual_rail_register([])[0], []
    names = {"gc_cnot": ["control", "target"], "ee_cnot": ["control", "target"],
             "swap": ["electron"]}.get(config.circuit, ["plus", "minus"])
    state, qubits = dual_rail_register(species, names=names)
    load_dual_rail(state, qubits, config.input_vector())
    if config.circuit == "swap":
        anc, modes = dual_rail_modes("ancilla", Species.POSITRON)
        add_modes(state, modes, [0, 1])
        qubits = qubits + [anc]
    return state, qubits


def execute(config: ScenarioConfig, rng: np.random.Generator | None = None,
            force=None, record: ShotRecord | None = None,
            initial: tuple[QuantumState, list[DualRailQubit]] | None = None) -> Run:
    """Run the circuit once; ``initial`` is a prepared register that is copied, not consumed."""
    if initial is None:
        state, qubits = prepare(config)
    else:
        state, qubits = initial[0].copy(), list(initial[1])
    n = config.n_stages
    name = config.circuit
    if name == "bell_gen":
        C.bell_generate(state, qubits[0], qubits[1], n)
        return Run(state, qubits)
    if name == "chi_gen":
        state, qubits = C.chi_generate(n)
        return Run(state, qubits)
    if name == "ifm_gate":
        q = qubits[0]
        ifm(state, IfmGateSpec("object", q.mode_a, q.mode_b, n))
        return Run(state, qubits)
    if name == "bell_measure":
        outcome, state = C.bell_measure(state, qubits[0], qubits[1], rng, n, force, record)
        return Run(state, [], outcome.probability, outcome.inconclusive,
                   None if outcome.inconclusive else outcome.bits)
    if name == "gc_cnot":
        res = C.gc_cnot(state, qubits[0], qubits[1], rng, None, n, force, record)
    elif name == "swap":
        res = C.swap_via_cnot(state, qubits[0], qubits[1], rng, None, n, force, record)
    else:
        res = C.cnot_between_electrons(state, qubits[0], qubits[1], rng, None, n, force, record)
    return Run(res.state, res.qubits, res.probability, res.inconclusive)


def _branches(config: ScenarioConfig) -> list | None:
    """Forced-outcome branches to enumerate for an exact distribution, or None."""
    quad = list(itertools.product((0, 1), repeat=4))
    if config.circuit == "bell_measure":
        return list(itertools.product((0, 1), repeat=2))
    if config.circuit == "gc_cnot":
        return quad
    if config.circuit == "swap":
        return list(itertools.product(quad, quad))
    if config.circuit == "ee_cnot":
        return None
    return [None]


def _output_distribution(run: Run) -> dict[str, float]:
    """Conditional computational-basis distribution of the output qubits."""
    if run.bits is not None:
        return {"".join(map(str, run.bits)): 1.0}
    dist = born_probabilities(run.state, [q.mode_a for q in run.outputs]).conditional()
    return {"".join(map(str, k)): v for k, v in dist.items()}


def _reference(config: ScenarioConfig) -> O.DenseState | None:
    psi = O.DenseState(config.input_vector())
    name = config.circuit
    if name == "bell_gen":
        return O.dense_cnot(O.dense_h(psi, 0), 0, 1)
    if name == "chi_gen":
        return O.CHI
    if name in ("gc_cnot", "ee_cnot"):
        return O.dense_cnot(psi, 0, 1)
    if name == "swap":
        return O.dense_swap(O.kron(psi, O.basis_state([0])), 0, 1)
    return None


def _kept_fidelity(run: Run, ref: O.DenseState) -> float | None:
    if not run.state.terms:
        return None
    state = run.state.copy()
    norm = math.sqrt(state.kept_probability())
    state.terms = {c: a / norm for c, a in state.terms.items()}
    state.loss_probability = 0.0
    return O.fidelity(O.embed(state, run.outputs), ref)


def exact_distribution(config: ScenarioConfig) -> tuple[dict[str, float] | None, float | None]:
    """Exact outcome distribution (including LOST) and worst-branch fidelity vs the oracle."""
    branches = _branches(config)
    ref = _reference(config)
    if branches is None:
        if config.n_stages is not None:
            return None, None
        branches = [[(0, 0, 0, 0)] * 5]  # ideal: every branch gives the same output
    dist: dict[str, float] = {}
    fid: float | None = None
    for branch in branches:
        try:
            run = execute(config, force=branch)
        except MeasurementError:
            continue
        if run.inconclusive:
            continue
        weight = run.probability * (1.0 - run.state.loss_probability) if branch is None else run.probability
        for k, v in _output_distribution(run).items():
            dist[k] = dist.get(k, 0.0) + weight * v
        if ref is not None:
            f = _kept_fidelity(run, ref)
            if f is not None:
                fid = f if fid is None else min(fid, f)
    dist[LOST] = max(0.0, 1.0 - sum(dist.values()))
    return dist, fid


def run_shot(config: ScenarioConfig, shot: int,
             initial: tuple[QuantumState, list[DualRailQubit]] | None = None) -> tuple[str, ShotRecord]:
    """One sampled execution; returns the outcome label and its record."""
    rng = shot_rng(config.seed, shot)
    record = ShotRecord(config.seed, shot)
    run = execute(config, rng=rng, record=record, initial=initial)
    # measurement-based circuits sample their own losses; the rest are decided here
    if config.circuit in _UNMEASURED and not sample_survival(0.0, run.state.loss_probability, rng):
        run.inconclusive = True
    if run.inconclusive:
        record.final_kept_probability = 0.0
        return LOST, record
    if run.bits is not None:
        label = "".join(map(str, run.bits))
    else:
        bits = []
        for q in run.outputs:
            bit, _ = detect(run.state, q.mode_a, rng, record)
            bits.append(bit)
        label = "".join(map(str, bits))
    record.final_kept_probability = 1.0 - run.state.loss_probability
    return label, record


def _shot_chunk(args) -> list[str]:
    config, start, stop = args
    initial = prepare(config)
    return [run_shot(config, k, initial)[0] for k in range(start, stop)]


def run_shots(config: ScenarioConfig, jobs: int = 1) -> list[str]:
    shots = int(config.shots)
    if jobs <= 1:
        return _shot_chunk((config, 0, shots))
    step = max(1, math.ceil(shots / (4 * jobs)))
    chunks = [(config, k, min(shots, k + step)) for k in range(0, shots, step)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [label for part in pool.map(_shot_chunk, chunks) for label in part]


def _labels(config: ScenarioConfig) -> list[str]:
    if config.circuit == "ifm_gate":
        return ["0", "1", LOST]
    n = 2 if config.circuit == "bell_measure" else {"chi_gen": 4, "swap": 2}.get(config.circuit, config.n_inputs)
    return ["".join(map(str, b)) for b in itertools.product((0, 1), repeat=n)] + [LOST]


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> dict:
    """Exact distribution, sampled shots and oracle fidelity, as a report dict."""
    config.validate()
    exact, fid = exact_distribution(config)
    labels = run_shots(config, jobs)
    counts = {k: 0 for k in _labels(config)}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    rows = []
    for k in counts:
        p = None if exact is None else rnd(exact.get(k, 0.0))
        rows.append({"outcome": k, "probability": p, "count": counts[k],
                     "frequency": rnd(counts[k] / len(labels))})
    summary = summarize(rows)
    summary["fidelity"] = None if fid is None else rnd(fid)
    if config.circuit == "ifm_gate":
        good = "1" if config.object == "absent" else "0"
        summary["p_success"] = next(r["probability"] for r in rows if r["outcome"] == good)
    if config.circuit == "bell_measure" and config.n_stages is None:
        ref = O.bell_probabilities(O.DenseState(config.input_vector()), 0, 1)
        err = max(abs((exact or {}).get(f"{x}{z}", 0.0) - p) for (x, z), p in ref.items())
        summary["oracle_max_abs_error"] = rnd(err)
    return {"config": asdict(config), "rows": rows, "summary": summary}


def summarize(rows: Sequence[dict]) -> dict:
    """Summary fields that can be recomputed from the rows alone."""
    shots = sum(r["count"] for r in rows)
    out = {"shots": shots,
           "empirical_loss": rnd(sum(r["count"] for r in rows if r["outcome"] == LOST) / shots)}
    if all(r["probability"] is not None for r in rows):
        out["kept_probability"] = rnd(sum(r["probability"] for r in rows if r["outcome"] != LOST))
        out["loss_probability"] = rnd(sum(r["probability"] for r in rows if r["outcome"] == LOST))
    else:
        out["kept_probability"] = None
        out["loss_probability"] = None
    return out


# -- report files --------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{DIGITS}g}"
    return str(v)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    for k, v in report["config"].items():
        buf.write(f"# config.{k}={_fmt(v)}\n")
    for k, v in report["summary"].items():
        buf.write(f"# summary.{k}={_fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report["rows"]:
        writer.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _num(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_report(text: str, fmt: str) -> dict:
    if fmt == "json":
        return json.loads(text)
    config, summary, body = {}, {}, []
    for line in text.splitlines():
        if line.startswith("# config."):
            k, _, v = line[len("# config."):].partition("=")
            config[k] = _num(v)
        elif line.startswith("# summary."):
            k, _, v = line[len("# summary."):].partition("=")
            summary[k] = _num(v)
        else:
            body.append(line)
    rows = []
    for r in csv.DictReader(body):
        rows.append({"outcome": r["outcome"], "probability": _num(r["probability"]),
                     "count": int(r["count"]), "frequency": _num(r["frequency"])})
    return {"config": config, "rows": rows, "summary": summary}


def write_report(report: dict, fmt: str, out: str | None) -> str:
    text = render(report, fmt)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    return text


# -- N sweeps ------------------------------------------------------------------------

def sweep_row(n: int, circuit: str = "ifm_gate", object_present: bool = True) -> dict:
    """Simulated vs closed-form success probability for one stage count."""
    if n < 1:
        raise ConfigError("stage counts must be >= 1")
    p = survival_probability(n)
    if circuit == "ifm_gate":
        state = new_register([Mode("x", Species.POSITRON, "x"), Mode("a", Species.ELECTRON, "a"),
                              Mode("b", Species.ELECTRON, "b")], [int(object_present), 0, 1])
        ifm(state, IfmGateSpec("x", "a", "b", n))
        port = (1, 0, 1) if object_present else (0, 1, 0)
        simulated = abs(state.terms.get(port, 0)) ** 2
        formula = p if object_present else 1.0
    elif circuit == "bell_gen":
        state, (q1, q2) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
        C.bell_generate(state, q1, q2, n)
        simulated = state.kept_probability()
        formula = (1 + p) / 2
    else:
        raise ConfigError(f"sweep supports ifm_gate and bell_gen, not {circuit!r}")
    return {"N": n, "theta": math.pi / (2 * n), "p_success_simulated": simulated,
            "p_success_formula": formula, "abs_error": abs(simulated - formula),
            "p_loss": state.loss_probability}


def _sweep_job(args):
    return sweep_row(*args)


def sweep_n(n_values: Sequence[int], circuit: str = "ifm_gate", object_present: bool = True,
            jobs: int = 1) -> list[dict]:
    if not n_values:
        raise ConfigError("need at least one stage count")
    args = [(int(n), circuit, object_present) for n in n_values]
    if jobs <= 1:
        return [sweep_row(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_job, args))


def render_sweep(rows: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{k: rnd(v) if isinstance(v, float) else v for k, v in r.items()}
                           for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


# -- verification suite ------------------------------------------------------------

# (x, a, b) in -> (sign, (x, a, b) out)
IFM_TRUTH_TABLE = {
    (0, 0, 1): (1, (0, 1, 0)),
    (1, 0, 1): (1, (1, 0, 1)),
    (0, 1, 0): (-1, (0, 0, 1)),
    (1, 0, 0): (1, (1, 0, 0)),
}

# (a, b, c, d) in -> (t1 over A B C D E F, (sign, t2 over A B C E D F))
BELL_NETWORK_TABLE = {
    (0, 1, 0, 1): ((0, 1, 0, 0, 0, 1), (1, (0, 1, 0, 0, 0, 1))),
    (0, 1, 1, 0): ((0, 1, 1, 0, 0, 0), (-1, (0, 1, 0, 1, 0, 0))),
    (1, 0, 0, 1): ((1, 0, 0, 0, 1, 0), (1, (1, 0, 0, 1, 0, 0))),
    (1, 0, 1, 0): ((1, 0, 0, 1, 0, 0), (-1, (1, 0, 0, 0, 0, 1))),
}


def ifm_register(occupancy) -> QuantumState:
    return new_register([Mode("x", Species.POSITRON, "x"), Mode("a", Species.ELECTRON, "a"),
                         Mode("b", Species.ELECTRON, "b")], occupancy)


def network_columns(bits_in) -> tuple[dict, dict]:
    """Network states at T1 and T2 for a dual-rail basis input (a, b, c, d).

    Returned as {occupancy over the six paths: amplitude}, in the T1 order
    A B C D E F and the T2 order A B C E D F respectively.
    """
    state, (p, m) = dual_rail_register([Species.POSITRON, Species.ELECTRON], [bits_in[0], bits_in[2]])
    paths = C.bell_first_pass(state, p, m)
    t1 = _project(state, paths.t1_order)
    C.bell_second_pass(state, paths)
    t2 = _project(state, paths.t2_order)
    return t1, t2


def _project(state: QuantumState, order) -> dict:
    pos = [state.position(mid) for mid in order]
    return {tuple(cfg[p] for p in pos): amp for cfg, amp in state.terms.items()}


def verify_all(seed: int = 0, table: C.CorrectionTable | None = None,
               emit: Callable[[str], None] = print) -> list[tuple[str, bool, str]]:
    """Run every self-check; emits one PASS/FAIL line per check."""
    table = table or C.CORRECTION_TABLE
    results: list[tuple[str, bool, str]] = []

    def check(name: str, fn: Callable[[], tuple[bool, str]]):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
        emit(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))

    def truth_table():
        for occ, (sign, out) in IFM_TRUTH_TABLE.items():
            s = ideal_ifm(ifm_register(occ), IfmGateSpec("x", "a", "b"))
            if s.terms != {out: complex(sign)}:
                return False, f"input {occ} gave {s.terms}"
        s = ideal_ifm(ifm_register((1, 1, 0)), IfmGateSpec("x", "a", "b"))
        return (not s.terms and s.loss_probability == 1.0), "forbidden input absorbed"

    def network():
        for bits, (t1, (sign, t2)) in BELL_NETWORK_TABLE.items():
            got1, got2 = network_columns(bits)
            if set(got1) != {t1} or abs(got1[t1] - 1) > 1e-12:
                return False, f"T1 mismatch for {bits}: {got1}"
            if set(got2) != {t2} or abs(got2[t2] - sign) > 1e-12:
                return False, f"T2 mismatch for {bits}: {got2}"
        return True, ""

    def bell_gen():
        s, (p, m) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
        C.bell_generate(s, p, m)
        v = O.embed(s, [p, m]).vector
        err = float(np.max(np.abs(v - np.array([1, 0, 0, 1]) / math.sqrt(2))))
        return err < 1e-12, f"max error {err:.2e}"

    def chi():
        s, qs = C.chi_generate()
        v = O.embed(s, qs).vector
        return len(s.terms) == 4 and float(np.max(np.abs(v - O.CHI.vector))) < 1e-12, ""

    def bell_measure():
        for bits, b in O.BELL.items():
            s, (p, m) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
            load_dual_rail(s, [p, m], b.vector)
            out, _ = C.bell_measure(s, p, m, shot_rng(seed))
            if out.bits != bits or abs(out.probability - 1) > 1e-12:
                return False, f"{C.BELL_NAMES[bits]} read as {out}"
        return True, ""

    def corrections():
        bad = C.verify_correction_table(table)
        return not bad, f"failing branches {bad}" if bad else "16 branches x 4 inputs"

    def derived():
        found = C.derive_correction_table()
        return found == table, "" if found == table else "table differs from a fresh derivation"

    def oracle_equiv():
        rng = np.random.default_rng(seed)
        worst = 1.0
        for k in range(20):
            psi = O.random_state(2, rng)
            s, (c, t) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
            load_dual_rail(s, [c, t], psi.vector)
            r = C.gc_cnot(s, c, t, rng, table)
            worst = min(worst, O.fidelity(O.embed(r.state, r.qubits), O.dense_cnot(psi, 0, 1)))
        return worst >= 1 - 1e-10, f"worst fidelity {worst:.12f}"

    def survival():
        err = max(sweep_row(n)["abs_error"] for n in (1, 2, 5, 10, 20, 50, 100, 1000))
        return err < 1e-10 and survival_probability(1000) > 0.9975, f"max error {err:.2e}"

    check("ifm truth table", truth_table)
    check("bell-measurement network columns", network)
    check("bell generation amplitudes", bell_gen)
    check("chi amplitudes", chi)
    check("bell measurement of the four Bell states", bell_measure)
    check("correction table reproduces CNOT", corrections)
    check("correction table matches derivation", derived)
    check("teleported CNOT vs dense oracle", oracle_equiv)
    check("survival probability law", survival)
    return results
