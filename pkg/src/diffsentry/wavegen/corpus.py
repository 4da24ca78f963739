"""Corpus plans: parameter grids per event class, enumeration, and generation.

A plan is a list of per-class parameter grids. Enumeration is the full
cross-product in declared key order; a per-class cap subsamples the grid
with a seeded draw. Generation writes one CSV per waveform plus a manifest,
and is byte-identical across reruns of the same (plan, seed).
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import IoFailure, PlanEmpty
from ..sampling import (
    DisturbanceType,
    EventKind,
    FaultType,
    PHASE_GROUND_FAULTS,
    SamplingSpec,
    Unit,
    Waveform,
    write_waveform_csv,
)
from .disturbances import generate_disturbance
from .faults import FaultSpec, UNIT_PRESETS, simulate_internal_fault

_INCEPTION_BASE_CYCLES = 2
_DURATION_CYCLES = 8


@dataclass(frozen=True)
class ClassPlan:
    """Grid of generator parameters for one event class."""

    name: str                       # 'InternalFault' or a DisturbanceType value
    grid: dict
    cap: Optional[int] = None

    def enumerate_cases(self) -> list[dict]:
        keys = list(self.grid.keys())
        value_lists = [list(self.grid[k]) for k in keys]
        return [dict(zip(keys, combo)) for combo in itertools.product(*value_lists)]


@dataclass(frozen=True)
class CorpusPlan:
    classes: tuple[ClassPlan, ...]
    duration_cycles: int = _DURATION_CYCLES

    def class_counts(self) -> dict:
        out = {}
        for cp in self.classes:
            total = len(cp.enumerate_cases())
            out[cp.name] = min(total, cp.cap) if cp.cap is not None else total
        return out


def _case_seed(master_seed: int, class_idx: int, case_idx: int) -> int:
    # simple documented derivation; independent of generation order
    return (master_seed * 1_000_003 + class_idx * 10_007 + case_idx) % (2**31 - 1)


def _inception(spec: SamplingSpec, step: int, divisions: int = 12) -> int:
    spc = spec.samples_per_cycle
    return _INCEPTION_BASE_CYCLES * spc + int(round(step * spc / divisions))


def build_case(class_name: str, params: dict, spec: SamplingSpec,
               duration_cycles: int) -> Waveform:
    """Synthesize the waveform for one enumerated plan case."""
    p = dict(params)
    if class_name == EventKind.INTERNAL_FAULT.value:
        step = p.pop("inception_step", 0)
        unit = Unit(p.pop("unit"))
        fault = FaultSpec(
            fault_type=FaultType(p.pop("fault_type")),
            unit=unit,
            resistance_ohm=p.pop("resistance_ohm", 0.01),
            pct_winding=p.pop("pct_winding", 50.0),
            side=p.pop("side", "primary"),
            phase=p.pop("phase", "a"),
            tap=p.pop("tap", 1.0),
            shift=p.pop("shift", "forward"),
        )
        return simulate_internal_fault(
            UNIT_PRESETS[unit], fault, spec,
            duration_cycles=duration_cycles,
            inception_index=_inception(spec, step),
        )
    kind = DisturbanceType(class_name)
    divisions = 24 if kind is DisturbanceType.FERRORESONANCE else 12
    step = p.pop("inception_step", 0)
    return generate_disturbance(
        kind, p, spec,
        inception_index=_inception(spec, step, divisions),
        duration_cycles=duration_cycles,
    )


def generate_corpus(plan: CorpusPlan, seed: int, out_dir,
                    spec: SamplingSpec = SamplingSpec()) -> list[dict]:
    """Write waveform CSVs and `manifest.json` under ``out_dir``.

    Returns the manifest rows (sorted by file name). Identical plan + seed
    produce byte-identical directory trees.
    """
    cases = enumerate_plan(plan, seed)
    if not cases:
        raise PlanEmpty("corpus plan enumerates no cases")
    wave_dir = os.path.join(out_dir, "waveforms")
    os.makedirs(wave_dir, exist_ok=True)

    manifest = []
    for class_idx, class_name, case_idx, params, case_seed in cases:
        wave = build_case(class_name, params, spec, plan.duration_cycles)
        slug = class_name.lower()
        fname = f"{slug}_{case_idx:05d}.csv"
        write_waveform_csv(wave, os.path.join(wave_dir, fname))
        row = {
            "file": f"waveforms/{fname}",
            **wave.label.to_dict(),
            "inception_index": wave.inception_index,
            "provenance": wave.provenance,
            "seed": case_seed,
        }
        manifest.append(row)

    manifest.sort(key=lambda r: r["file"])
    try:
        with open(os.path.join(out_dir, "manifest.json"), "w", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest: {exc}") from exc
    return manifest


def enumerate_plan(plan: CorpusPlan, seed: int):
    """(class_idx, class_name, case_idx, params, case_seed) for every kept case."""
    out = []
    for class_idx, cp in enumerate(plan.classes):
        all_cases = cp.enumerate_cases()
        if not all_cases:
            continue
        keep = np.arange(len(all_cases))
        if cp.cap is not None and cp.cap < len(all_cases):
            rng = np.random.default_rng([seed, class_idx])
            keep = np.sort(rng.choice(len(all_cases), size=cp.cap, replace=False))
        for case_idx, orig_idx in enumerate(keep):
            out.append(
                (
                    class_idx,
                    cp.name,
                    case_idx,
                    all_cases[int(orig_idx)],
                    _case_seed(seed, class_idx, case_idx),
                )
            )
    return out


def load_manifest(corpus_dir) -> list[dict]:
    path = os.path.join(corpus_dir, "manifest.json")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read manifest at {path}: {exc}") from exc


# -- stock plans ---------------------------------------------------------------

_TAPS_FULL = (0.2, 0.4, 0.6, 0.8, 1.0)
_TAPS_EXCITING = (1.0, 0.5)
_RF = (0.01, 0.5, 10.0)


def table_one_plan(unit: Unit = Unit.PT) -> ClassPlan:
    """The phase & ground fault sweep for one unit, uncapped.

    Cross-product: 3 resistances x 3 percentages x 11 fault types x
    12 inception steps x 2 sides x 2 shifts x taps (5, or 2 for the
    exciting unit).
    """
    taps = _TAPS_EXCITING if unit is Unit.EXCITING else _TAPS_FULL
    return ClassPlan(
        name=EventKind.INTERNAL_FAULT.value,
        grid={
            "unit": (unit.value,),
            "resistance_ohm": _RF,
            "pct_winding": (20.0, 50.0, 80.0),
            "fault_type": tuple(ft.value for ft in PHASE_GROUND_FAULTS),
            "inception_step": tuple(range(12)),
            "side": ("primary", "secondary"),
            "shift": ("forward", "backward"),
            "tap": taps,
        },
    )


def reference_plan(cases_per_class: int = 120, fault_cases: int = 468) -> CorpusPlan:
    """Desk-scale seeded corpus covering all 7 classes and all fault types."""
    fault = ClassPlan(
        name=EventKind.INTERNAL_FAULT.value,
        grid={
            "unit": tuple(u.value for u in Unit),
            "fault_type": tuple(ft.value for ft in FaultType),
            "resistance_ohm": _RF,
            "pct_winding": (20.0, 80.0),
            "inception_step": (0, 6),
            "side": ("primary",),
            "shift": ("forward",),
            "tap": (1.0,),
        },
        cap=fault_cases,
    )
    inrush = ClassPlan(
        name=DisturbanceType.MAGNETIZING_INRUSH.value,
        grid={
            "residual_flux_pct": (-80.0, -40.0, 0.0, 40.0, 80.0),
            "pattern": (0, 1, 2),
            "inception_step": tuple(range(12)),
            "tap": (0.6, 1.0),
            "shift": ("forward", "backward"),
        },
        cap=cases_per_class,
    )
    sympathetic = ClassPlan(
        name=DisturbanceType.SYMPATHETIC_INRUSH.value,
        grid=dict(inrush.grid),
        cap=cases_per_class,
    )
    ctsat = ClassPlan(
        name=DisturbanceType.EXTERNAL_FAULT_CT_SAT.value,
        grid={
            "resistance_ohm": _RF,
            "fault_name": (
                "lg-a", "lg-b", "lg-c", "llg-ab", "llg-ac", "llg-bc",
                "ll-ab", "ll-ac", "ll-bc", "lll", "lllg",
            ),
            "bus_kv": (230.0, 500.0),
            "inception_step": (0, 3, 6, 9),
            "tap": (1.0,),
            "shift": ("forward",),
        },
        cap=cases_per_class,
    )
    capacitor = ClassPlan(
        name=DisturbanceType.CAPACITOR_SWITCHING.value,
        grid={
            "legs": (1, 2, 3),
            "inception_step": tuple(range(12)),
            "shift": ("forward", "backward"),
            "tap": _TAPS_FULL,
        },
        cap=cases_per_class,
    )
    nonlinear = ClassPlan(
        name=DisturbanceType.NONLINEAR_LOAD_SWITCHING.value,
        grid={
            "firing_angle_deg": (0.0, 10.0, 20.0, 30.0, 40.0, 50.0),
            "inception_step": tuple(range(12)),
            "tap": _TAPS_FULL,
        },
        cap=cases_per_class,
    )
    ferro = ClassPlan(
        name=DisturbanceType.FERRORESONANCE.value,
        grid={
            "grading_uf": tuple(round(0.02 * k, 2) for k in range(1, 11)),
            "phase": ("a", "b", "c"),
            "inception_step": tuple(range(24)),
        },
        cap=cases_per_class,
    )
    return CorpusPlan(
        classes=(fault, inrush, sympathetic, ctsat, capacitor, nonlinear, ferro)
    )
