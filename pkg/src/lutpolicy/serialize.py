"""Binary container for model and circuit files.

One container family, two section sets. Layout (little-endian):

    magic   8 bytes  b"LUTPOLY\\0"
    version u32
    kind    8 bytes  b"MODEL\\0\\0\\0" or b"CIRCUIT\\0"
    count   u32
    then `count` sections: name (8 bytes, NUL padded), length (u64), payload

Model files store real-valued logits as 64-bit floats; circuit files store
bit-packed tables (LSB of each byte is the lowest address), int32
thresholds/selections, and int16 action words. Writers are deterministic,
so identical objects produce identical bytes.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from . import compiler as compiler_mod
from .compiler import CompiledCircuit
from .encoding import RunningStats, ThermometerSpec
from .errors import ConfigError
from .lutnet import ActionHead, LutLayer, LutPolicy

MAGIC = b"LUTPOLY\0"
VERSION = 1
KIND_MODEL = b"MODEL\0\0\0"
KIND_CIRCUIT = b"CIRCUIT\0"


def _write_container(path: str, kind: bytes, sections: list) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(kind)
        fh.write(struct.pack("<I", len(sections)))
        for name, payload in sections:
            raw = name.encode("ascii")
            if len(raw) > 8:
                raise ValueError(f"section name too long: {name}")
            fh.write(raw.ljust(8, b"\0"))
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def _read_container(path: str, kind: bytes) -> dict:
    with open(path, "rb") as fh:
        blob = fh.read()
    view = io.BytesIO(blob)
    if view.read(8) != MAGIC:
        raise ConfigError(f"{path}: not a lutpolicy container")
    (version,) = struct.unpack("<I", view.read(4))
    if version != VERSION:
        raise ConfigError(f"{path}: container version {version} unsupported "
                          f"(this build reads version {VERSION})")
    file_kind = view.read(8)
    if file_kind != kind:
        want = kind.rstrip(b"\0").decode()
        got = file_kind.rstrip(b"\0").decode(errors="replace")
        raise ConfigError(f"{path}: expected {want} file, found {got!r}")
    (count,) = struct.unpack("<I", view.read(4))
    sections = {}
    for _ in range(count):
        name = view.read(8).rstrip(b"\0").decode("ascii")
        (length,) = struct.unpack("<Q", view.read(8))
        payload = view.read(length)
        if len(payload) != length:
            raise ConfigError(f"{path}: truncated section {name}")
        sections[name] = payload
    if view.read(1):
        raise ConfigError(f"{path}: trailing bytes after last section")
    return sections


def _json_bytes(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _array_bytes(arr: np.ndarray, dtype) -> bytes:
    return np.ascontiguousarray(arr, dtype=dtype).tobytes()


def _need(sections: dict, name: str, path: str) -> bytes:
    if name not in sections:
        raise ConfigError(f"{path}: missing section {name}")
    return sections[name]


# -- model files -----------------------------------------------------------


def save_model(policy: LutPolicy, path: str) -> None:
    meta = {
        "addressing": "lsb-first",
        "d_in": policy.d_in,
        "d_act": policy.d_act,
        "bits": policy.spec.bits,
        "arity": policy.layers[0].arity,
        "widths": [layer.width for layer in policy.layers],
        "trainable_interconnect": [bool(l.trainable_interconnect) for l in policy.layers],
        "group_size": policy.head.group_size,
        "squash": policy.head.squash,
        "mode": policy.mode,
        "gradient_backend": policy.gradient_backend,
    }
    sections = [("META", _json_bytes(meta)),
                ("THRESH", _array_bytes(policy.spec.thresholds, np.float64)),
                ("STATS", struct.pack("<QB7x", policy.stats.count, int(policy.stats.frozen))
                 + _array_bytes(policy.stats.mean, np.float64)
                 + _array_bytes(policy.stats.m2, np.float64)),
                ("HEAD", _array_bytes(policy.head.alpha_p, np.float64)
                 + _array_bytes(policy.head.beta, np.float64))]
    for i, layer in enumerate(policy.layers):
        sections.append((f"TBL{i}", _array_bytes(layer.table_logits, np.float64)))
        sections.append((f"ICL{i}", _array_bytes(layer.interconnect_logits, np.float64)))
    _write_container(path, KIND_MODEL, sections)


def load_model(path: str) -> LutPolicy:
    sections = _read_container(path, KIND_MODEL)
    meta = json.loads(_need(sections, "META", path))
    bits = meta["bits"]
    d_in, d_act = meta["d_in"], meta["d_act"]
    thresholds = np.frombuffer(_need(sections, "THRESH", path), dtype="<f8").copy()
    spec = ThermometerSpec(bits=bits, thresholds=thresholds)
    spec.validate()
    raw = _need(sections, "STATS", path)
    count, frozen = struct.unpack("<QB7x", raw[:16])
    pair = np.frombuffer(raw[16:], dtype="<f8")
    if pair.shape[0] != 2 * d_in:
        raise ConfigError(f"{path}: STATS length does not match d_in")
    stats = RunningStats(count=count, mean=pair[:d_in].copy(),
                         m2=pair[d_in:].copy(), frozen=bool(frozen))
    layers = []
    fan_in = bits * d_in
    arity = meta["arity"]
    for i, width in enumerate(meta["widths"]):
        tbl = np.frombuffer(_need(sections, f"TBL{i}", path), dtype="<f8").copy()
        icl = np.frombuffer(_need(sections, f"ICL{i}", path), dtype="<f8").copy()
        layers.append(LutLayer(tbl.reshape(width, 1 << arity),
                               icl.reshape(width, arity, fan_in),
                               trainable_interconnect=meta["trainable_interconnect"][i]))
        fan_in = width
    head_raw = np.frombuffer(_need(sections, "HEAD", path), dtype="<f8")
    head = ActionHead(alpha_p=head_raw[:d_act].copy(), beta=head_raw[d_act:].copy(),
                      group_size=meta["group_size"], squash=meta["squash"])
    return LutPolicy(spec, stats, layers, head, d_in=d_in, d_act=d_act,
                     mode=meta["mode"], gradient_backend=meta["gradient_backend"])


# -- circuit files ----------------------------------------------------------


def _pack_table(table: np.ndarray) -> bytes:
    """Bit-pack one layer's tables row by row, LSB-first within each byte."""
    width, entries = table.shape
    packed = np.packbits(table.astype(np.uint8), axis=1, bitorder="little")
    return packed.tobytes()


def _unpack_table(blob: bytes, width: int, entries: int) -> np.ndarray:
    bytes_per_row = (entries + 7) // 8
    packed = np.frombuffer(blob, dtype=np.uint8).reshape(width, bytes_per_row)
    return np.unpackbits(packed, axis=1, count=entries, bitorder="little")


def save_circuit(circuit: CompiledCircuit, path: str) -> None:
    sections = [("META", _json_bytes(circuit.meta())),
                ("THRI", _array_bytes(circuit.int_thresholds, np.int32)),
                ("SRAM", _array_bytes(circuit.action_tables, np.int16))]
    for i, (table, sel) in enumerate(zip(circuit.tables, circuit.selections)):
        sections.append((f"TBLB{i}", _pack_table(table)))
        sections.append((f"SEL{i}", _array_bytes(sel, np.int32)))
    _write_container(path, KIND_CIRCUIT, sections)


def load_circuit(path: str) -> CompiledCircuit:
    sections = _read_container(path, KIND_CIRCUIT)
    meta = json.loads(_need(sections, "META", path))
    if meta["format_version"] != compiler_mod.FORMAT_VERSION:
        raise ConfigError(f"{path}: circuit format version {meta['format_version']} "
                          f"unsupported")
    d_in, bits, arity = meta["d_in"], meta["bits"], meta["arity"]
    widths = meta["widths"]
    thresholds = np.frombuffer(_need(sections, "THRI", path), dtype="<i4")
    tables, selections = [], []
    fan_in = d_in * bits
    for i, width in enumerate(widths):
        tables.append(_unpack_table(_need(sections, f"TBLB{i}", path), width, 1 << arity))
        sel = np.frombuffer(_need(sections, f"SEL{i}", path), dtype="<i4")
        selections.append(sel.reshape(width, arity).copy())
        fan_in = width
    action = np.frombuffer(_need(sections, "SRAM", path), dtype="<i2")
    circuit = CompiledCircuit(
        bits=bits, d_in=d_in, d_act=meta["d_act"], arity=arity, widths=widths,
        int_thresholds=thresholds.reshape(d_in, bits).copy(), tables=tables,
        selections=selections, group_size=meta["group_size"],
        action_tables=action.reshape(meta["d_act"], meta["group_size"] + 1).copy(),
        adc_scale=np.asarray(meta["adc_scale"], dtype=np.float64),
        out_quant_bits=meta["out_quant_bits"], squash=meta["squash"],
        addressing=meta["addressing"], format_version=meta["format_version"])
    circuit.validate()
    return circuit
