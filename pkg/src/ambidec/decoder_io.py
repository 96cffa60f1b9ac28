"""Decoder file export/import: JSON with full-precision decimal floats.

The format round-trips losslessly: floats are written with Python repr
(shortest exact representation), key order is fixed, and loading then saving
reproduces the bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arrays import Speaker, SpeakerArray
from .design import DecoderMatrix
from .optimize import TwoBandDecoder
from .spherical import SignalSetSpec

FORMAT_VERSION = 1
TOOL_VERSION = "ambidec 0.1.0"


class DecoderFileError(ValueError):
    """A decoder file is malformed or inconsistent."""


@dataclass(frozen=True)
class DecoderFile:
    """A two-band decoder plus the provenance block it was saved with."""

    decoder: TwoBandDecoder
    provenance: dict


def _signal_set_doc(s: SignalSetSpec) -> dict:
    return {
        "order_h": s.order_h,
        "order_v": s.order_v,
        "convention": s.convention,
        "normalization": s.normalization,
        "channels": list(s.acns),
    }


def _speaker_doc(s: Speaker) -> dict:
    doc = {
        "id": s.id,
        "az_deg": s.az_deg,
        "el_deg": s.el_deg,
        "radius_m": s.radius,
        "sparseness_weight": s.sparseness_weight,
    }
    if s.is_imaginary:
        doc["imaginary"] = True
    return doc


def decoder_to_document(decoder: TwoBandDecoder, provenance: dict | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": decoder.array.name,
        "signal_set": _signal_set_doc(decoder.signal_set),
        "speakers": [_speaker_doc(s) for s in decoder.array.speakers],
        "crossover_hz": float(decoder.crossover_hz),
        "hf_matrix": [[float(v) for v in row] for row in decoder.hf.matrix],
        "lf_matrix": [[float(v) for v in row] for row in decoder.lf.matrix],
        "provenance": provenance or {},
    }


def dumps_decoder(decoder: TwoBandDecoder, provenance: dict | None = None) -> str:
    return json.dumps(decoder_to_document(decoder, provenance), indent=1) + "\n"


def save_decoder(decoder: TwoBandDecoder, path, provenance: dict | None = None) -> None:
    Path(path).write_text(dumps_decoder(decoder, provenance), encoding="utf-8")


def document_to_decoder(doc: dict) -> DecoderFile:
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise DecoderFileError(f"unsupported format version {version!r}")
        sdoc = doc["signal_set"]
        signal_set = SignalSetSpec(
            int(sdoc["order_h"]),
            int(sdoc["order_v"]),
            convention=sdoc.get("convention", "HV"),
            normalization=sdoc.get("normalization", "N3D"),
        )
        if list(signal_set.acns) != list(sdoc["channels"]):
            raise DecoderFileError(
                "channel list does not match the mixed-order mask for "
                f"{signal_set.name}"
            )
        speakers = tuple(
            Speaker(
                id=str(e["id"]),
                az_deg=float(e["az_deg"]),
                el_deg=float(e["el_deg"]),
                radius=float(e.get("radius_m", 1.0)),
                sparseness_weight=float(e.get("sparseness_weight", 1.0)),
                is_imaginary=bool(e.get("imaginary", False)),
            )
            for e in doc["speakers"]
        )
        array = SpeakerArray(str(doc.get("name", "array")), speakers)
        hf = np.array(doc["hf_matrix"], dtype=float)
        lf = np.array(doc["lf_matrix"], dtype=float)
        decoder = TwoBandDecoder(
            lf=DecoderMatrix(lf, signal_set, array, band="LF"),
            hf=DecoderMatrix(hf, signal_set, array, band="HF"),
            crossover_hz=float(doc.get("crossover_hz", 400.0)),
        )
        return DecoderFile(decoder, doc.get("provenance", {}))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DecoderFileError):
            raise
        raise DecoderFileError(f"malformed decoder file: {exc}") from exc


def loads_decoder(text: str) -> DecoderFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecoderFileError(f"invalid JSON: {exc}") from None
    return document_to_decoder(doc)


def load_decoder(path) -> DecoderFile:
    return loads_decoder(Path(path).read_text(encoding="utf-8"))
