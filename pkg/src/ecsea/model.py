"""The learned abstraction model and its JSON file format."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Model file is unreadable, of an unsupported version, or inconsistent."""


class Phi(str, enum.Enum):
    """How merged LL timestamps become the HL event timestamp."""

    MIN = "MIN"
    MAX = "MAX"
    MEAN = "MEAN"
    MEDIAN = "MEDIAN"

    @property
    def rank(self) -> int:
        return list(Phi).index(self)


@dataclass(frozen=True)
class AbstractionParams:
    tau_ms: int
    theta: float
    phi: Phi = Phi.MIN
    gamma: tuple[str, ...] = ()

    def __post_init__(self):
        if self.tau_ms < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau_ms}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        object.__setattr__(self, "phi", Phi(self.phi))
        object.__setattr__(self, "gamma", tuple(self.gamma))

    def to_dict(self) -> dict:
        return {"tau_ms": self.tau_ms, "theta": self.theta,
                "phi": self.phi.value, "gamma": list(self.gamma)}

    @classmethod
    def from_dict(cls, d: dict) -> "AbstractionParams":
        return cls(int(d["tau_ms"]), float(d["theta"]), Phi(d["phi"]), tuple(d["gamma"]))


@dataclass
class EcseaModel:
    """Two maps learned from paired logs.

    ``llc`` sends an LL activity to the HL activities it was seen under;
    ``hlc`` sends an HL activity to the LL activity sequences observed for it,
    each with an occurrence count.
    """

    llc: dict[str, set[str]] = field(default_factory=dict)
    hlc: dict[str, dict[tuple[str, ...], int]] = field(default_factory=dict)

    def add(self, hl_activity: str, sequence: Iterable[str], count: int = 1) -> None:
        seq = tuple(sequence)
        if not seq:
            raise ValueError("cannot record an empty LL sequence")
        if count < 1:
            raise ValueError("count must be >= 1")
        seqs = self.hlc.setdefault(hl_activity, {})
        seqs[seq] = seqs.get(seq, 0) + count
        for label in seq:
            self.llc.setdefault(label, set()).add(hl_activity)

    def merge(self, other: "EcseaModel") -> "EcseaModel":
        """Add every counted sequence of `other` into this model."""
        for hl, seqs in other.hlc.items():
            for seq, n in seqs.items():
                self.add(hl, seq, n)
        return self

    def ll_activities(self) -> set[str]:
        return set(self.llc)

    def hl_activities(self) -> set[str]:
        return set(self.hlc)

    def n_sequences(self) -> int:
        return sum(len(s) for s in self.hlc.values())

    def check(self) -> None:
        """Raise ModelFormatError when the two maps disagree or labels collide."""
        derived: dict[str, set[str]] = {}
        for hl, seqs in self.hlc.items():
            for seq, n in seqs.items():
                if not seq:
                    raise ModelFormatError(f"empty sequence recorded for {hl!r}")
                if not isinstance(n, int) or n < 1:
                    raise ModelFormatError(f"counter {n!r} for {hl!r} {list(seq)} is not >= 1")
                for label in seq:
                    derived.setdefault(label, set()).add(hl)
        for ll in sorted(set(derived) | set(self.llc)):
            have, want = self.llc.get(ll, set()), derived.get(ll, set())
            if have != want:
                extra = sorted(have - want)
                missing = sorted(want - have)
                raise ModelFormatError(
                    f"llc/hlc mismatch for LL label {ll!r}: "
                    f"llc lists {extra} not backed by hlc, hlc implies {missing} missing from llc")
        overlap = set(self.llc) & set(self.hlc)
        if overlap:
            raise ModelFormatError(f"labels used as both LL and HL activities: {sorted(overlap)}")


def save_model(model: EcseaModel, params: AbstractionParams) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "params": params.to_dict(),
        "llc": {ll: sorted(hls) for ll, hls in model.llc.items()},
        "hlc": {
            hl: [{"sequence": list(seq), "count": n} for seq, n in sorted(seqs.items())]
            for hl, seqs in model.hlc.items()
        },
    }
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_model(data: bytes) -> tuple[EcseaModel, AbstractionParams]:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
    try:
        params = AbstractionParams.from_dict(doc["params"])
        model = EcseaModel(
            llc={ll: set(hls) for ll, hls in doc["llc"].items()},
            hlc={
                hl: {tuple(item["sequence"]): item["count"] for item in items}
                for hl, items in doc["hlc"].items()
            },
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc!r}") from exc
    model.check()
    return model, params
