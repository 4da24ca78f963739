"""Core value types: sampling grid, event labels, and 3-phase waveform records."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IoFailure

PHASES = ("a", "b", "c")


class EventKind(enum.Enum):
    INTERNAL_FAULT = "InternalFault"
    DISTURBANCE = "Disturbance"


class Unit(enum.Enum):
    PT = "PT"
    SERIES = "SeriesUnit"
    EXCITING = "ExcitingUnit"


class FaultType(enum.Enum):
    WA_G = "wa-g"
    WB_G = "wb-g"
    WC_G = "wc-g"
    WA_WB_G = "wa-wb-g"
    WA_WC_G = "wa-wc-g"
    WB_WC_G = "wb-wc-g"
    WA_WB = "wa-wb"
    WA_WC = "wa-wc"
    WB_WC = "wb-wc"
    WA_WB_WC = "wa-wb-wc"
    WA_WB_WC_G = "wa-wb-wc-g"
    TURN_TO_TURN = "TurnToTurn"
    WINDING_TO_WINDING = "WindingToWinding"


#: The eleven phase & ground fault types of the basic-fault sweep tables
#: (everything except turn-to-turn and winding-to-winding).
PHASE_GROUND_FAULTS = tuple(
    ft for ft in FaultType
    if ft not in (FaultType.TURN_TO_TURN, FaultType.WINDING_TO_WINDING)
)


class DisturbanceType(enum.Enum):
    MAGNETIZING_INRUSH = "MagnetizingInrush"
    SYMPATHETIC_INRUSH = "SympatheticInrush"
    EXTERNAL_FAULT_CT_SAT = "ExternalFaultCTSat"
    CAPACITOR_SWITCHING = "CapacitorSwitching"
    NONLINEAR_LOAD_SWITCHING = "NonlinearLoadSwitching"
    FERRORESONANCE = "Ferroresonance"


@dataclass(frozen=True)
class SamplingSpec:
    """Uniform sampling grid tied to the power-system fundamental.

    One electrical cycle is pinned to exactly ``samples_per_cycle`` samples
    (the generator's effective fundamental is ``sample_rate_hz /
    samples_per_cycle``), so periodic steady state is periodic in an integer
    number of samples.
    """

    sample_rate_hz: float = 10_000.0
    fundamental_hz: float = 60.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0 or self.fundamental_hz <= 0:
            raise ValueError("sample_rate_hz and fundamental_hz must be positive")
        if self.sample_rate_hz < 2 * self.fundamental_hz:
            raise ValueError("sample rate below Nyquist for the fundamental")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.sample_rate_hz / self.fundamental_hz))

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def effective_fundamental_hz(self) -> float:
        """Fundamental actually synthesized: exactly one cycle per spc samples."""
        return self.sample_rate_hz / self.samples_per_cycle


@dataclass(frozen=True)
class EventLabel:
    """Hierarchical label: fault vs disturbance, then unit and type."""

    kind: EventKind
    unit: Optional[Unit] = None
    fault_type: Optional[FaultType] = None
    disturbance_type: Optional[DisturbanceType] = None

    def __post_init__(self):
        if self.kind is EventKind.INTERNAL_FAULT:
            if self.unit is None or self.fault_type is None:
                raise ValueError("internal fault labels need unit and fault_type")
            if self.disturbance_type is not None:
                raise ValueError("internal fault labels cannot carry a disturbance_type")
        else:
            if self.disturbance_type is None:
                raise ValueError("disturbance labels need disturbance_type")
            if self.unit is not None or self.fault_type is not None:
                raise ValueError("disturbance labels cannot carry unit or fault_type")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "unit": self.unit.value if self.unit else None,
            "fault_type": self.fault_type.value if self.fault_type else None,
            "disturbance_type": (
                self.disturbance_type.value if self.disturbance_type else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EventLabel":
        return cls(
            kind=EventKind(d["kind"]),
            unit=Unit(d["unit"]) if d.get("unit") else None,
            fault_type=FaultType(d["fault_type"]) if d.get("fault_type") else None,
            disturbance_type=(
                DisturbanceType(d["disturbance_type"])
                if d.get("disturbance_type")
                else None
            ),
        )


@dataclass
class Waveform:
    """A labeled, uniformly sampled 3-phase differential-current record.

    ``samples`` has shape (N, 3) holding (ia, ib, ic) in per-unit of rated
    peak current. ``inception_index`` is the sample at which the event is
    switched in; everything before it is periodic steady state.
    """

    spec: SamplingSpec
    samples: np.ndarray
    label: EventLabel
    inception_index: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != 3:
            raise ValueError("samples must have shape (N, 3)")
        spc = self.spec.samples_per_cycle
        if self.samples.shape[0] < 5 * spc:
            raise ValueError("waveform must span at least 5 cycles")
        if not 0 <= self.inception_index <= self.samples.shape[0] - 3 * spc:
            raise ValueError("inception must leave 3 post-event cycles")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def phase(self, idx: int) -> np.ndarray:
        return self.samples[:, idx]


def write_waveform_csv(wave: Waveform, path) -> None:
    """Write `t_s,ia_pu,ib_pu,ic_pu` rows, LF endings, 10 significant digits."""
    dt = wave.spec.dt
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("t_s,ia_pu,ib_pu,ic_pu\n")
            for n in range(wave.n_samples):
                ia, ib, ic = wave.samples[n]
                fh.write(
                    f"{n * dt:.10g},{ia:.10g},{ib:.10g},{ic:.10g}\n"
                )
    except OSError as exc:
        raise IoFailure(f"cannot write waveform to {path}: {exc}") from exc


def read_waveform_csv(path) -> np.ndarray:
    """Read a waveform CSV back as an (N, 3) per-unit sample array."""
    try:
        with open(path, "r", newline="") as fh:
            return _parse_waveform_rows(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read waveform from {path}: {exc}") from exc


def parse_waveform_text(text: str) -> np.ndarray:
    return _parse_waveform_rows(io.StringIO(text))


def _parse_waveform_rows(fh) -> np.ndarray:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        raise IoFailure("empty waveform CSV")
    rows = [(float(r[1]), float(r[2]), float(r[3])) for r in reader if r]
    return np.array(rows, dtype=np.float64)


def label_class_name(label: EventLabel) -> str:
    """Top-level corpus class: 'InternalFault' or the disturbance type."""
    if label.kind is EventKind.INTERNAL_FAULT:
        return EventKind.INTERNAL_FAULT.value
    return label.disturbance_type.value


def provenance_json(prov: dict) -> str:
    """Canonical JSON for provenance records (stable key order)."""
    return json.dumps(prov, sort_keys=True, separators=(",", ":"))
