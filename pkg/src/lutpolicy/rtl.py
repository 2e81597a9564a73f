"""RTL emission and structural resource estimates for compiled circuits.

The emitted text is a conservative synthesizable subset: continuous assigns
for the LUTs (constant tables indexed by a concatenated address), explicit
zero-extended adds forming a balanced popcount tree per action group, and a
clocked case-statement ROM per action with a registered output. Up to two
pipeline register cuts can be inserted: one between LUT layers and one
after the final layer, before the popcount.

Emission is deterministic: the same circuit yields byte-identical text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compiler import CompiledCircuit
from .errors import ConfigError

MODULE_NAME = "lut_circuit"
WORD_BITS = 16


def _stage_cuts(circuit: CompiledCircuit, pipeline_stages: int) -> set:
    """Indices of layers whose outputs get a register cut.

    Stage one goes between LUT layers, stage two after the final layer
    (before the popcount). Single-layer circuits only have the latter cut.
    """
    if pipeline_stages not in (0, 1, 2):
        raise ConfigError(f"pipeline stages must be 0, 1, or 2, got {pipeline_stages}")
    n_layers = len(circuit.widths)
    cuts = []
    if n_layers >= 2:
        cuts.append(0)           # between layer 1 and layer 2
    cuts.append(n_layers - 1)    # before the popcount
    if pipeline_stages > len(cuts):
        raise ConfigError(f"{pipeline_stages} pipeline stages need at least "
                          f"{pipeline_stages} register cuts; this circuit has "
                          f"{len(cuts)}")
    return set(cuts[:pipeline_stages])


def latency_cycles(pipeline_stages: int) -> int:
    """Clock cycles from input to valid action words (ROM read included)."""
    return pipeline_stages + 1


@dataclass
class ResourceReport:
    lut_count: int
    ff_estimate: int
    pipeline_stages: int
    logic_depth: int
    sram_words: int

    def lines(self) -> list:
        return [f"lut_count {self.lut_count}",
                f"ff_estimate {self.ff_estimate}",
                f"pipeline_stages {self.pipeline_stages}",
                f"logic_depth {self.logic_depth}",
                f"sram_words {self.sram_words}"]


def _tree_nodes(group_size: int) -> list:
    """Output widths of the balanced popcount adder tree over `group_size`
    one-bit leaves; one entry per two-input adder."""
    level = [1] * group_size
    widths = []
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            w = max(level[i], level[i + 1]) + 1
            widths.append(w)
            nxt.append(w)
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return widths


def _tree_depth(group_size: int) -> int:
    return max(1, math.ceil(math.log2(group_size))) if group_size > 1 else 0


def resource_report(circuit: CompiledCircuit, pipeline_stages: int) -> ResourceReport:
    """Structural resource model: the LUT network itself plus a 6-input
    decomposition estimate for the popcount adders (one LUT per sum bit).
    Flip-flop counts cover the register cuts and the ROM output registers;
    they model structure, not a vendor mapping."""
    cuts = _stage_cuts(circuit, pipeline_stages)
    tree = _tree_nodes(circuit.group_size)
    lut_count = int(sum(circuit.widths)) + int(sum(tree)) * circuit.d_act
    ff = circuit.d_act * WORD_BITS
    for layer_idx in cuts:
        ff += circuit.widths[layer_idx]
    depth = len(circuit.widths) + _tree_depth(circuit.group_size) + 1
    return ResourceReport(lut_count=lut_count, ff_estimate=ff,
                          pipeline_stages=pipeline_stages, logic_depth=depth,
                          sram_words=circuit.d_act * (circuit.group_size + 1))


def _hex_table(row: np.ndarray) -> str:
    value = 0
    for a, bit in enumerate(row):
        value |= int(bit) << a
    digits = max(1, (len(row) + 3) // 4)
    return f"{len(row)}'h{value:0{digits}x}"


def _addr_width(arity: int) -> int:
    return max(1, arity)


def emit_rtl(circuit: CompiledCircuit, pipeline_stages: int = 0) -> str:
    """Synthesizable RTL for the circuit, as UTF-8 text."""
    circuit.validate()
    cuts = _stage_cuts(circuit, pipeline_stages)
    in_bits = circuit.d_in * circuit.bits
    k = circuit.arity
    out = []
    w = out.append
    w(f"// {MODULE_NAME}: {len(circuit.widths)} LUT layer(s) "
      f"{'x'.join(str(v) for v in circuit.widths)}, arity {k}, "
      f"{in_bits} input bits, {circuit.d_act} action word(s)")
    w(f"// latency: {latency_cycles(pipeline_stages)} cycle(s) "
      f"({pipeline_stages} pipeline stage(s) + registered ROM read)")
    w(f"module {MODULE_NAME} (")
    w("    input wire clk,")
    w(f"    input wire [{in_bits - 1}:0] in_bits,")
    ports = [f"    output wire signed [{WORD_BITS - 1}:0] act_{d}"
             for d in range(circuit.d_act)]
    w(",\n".join(ports))
    w(");")
    w("")

    source = "in_bits"
    for li, (table, sel) in enumerate(zip(circuit.tables, circuit.selections)):
        width = circuit.widths[li]
        w(f"  // LUT layer {li + 1}: {width} LUTs")
        w(f"  wire [{width - 1}:0] l{li + 1};")
        for i in range(width):
            name = f"l{li + 1}_{i}"
            taps = ", ".join(f"{source}[{sel[i, j]}]" for j in range(k - 1, -1, -1))
            w(f"  localparam [{(1 << k) - 1}:0] T{li + 1}_{i} = {_hex_table(table[i])};")
            w(f"  wire [{_addr_width(k) - 1}:0] {name}_a;")
            w(f"  assign {name}_a = {{{taps}}};")
            w(f"  assign l{li + 1}[{i}] = T{li + 1}_{i}[{name}_a];")
        source = f"l{li + 1}"
        if li in cuts:
            w(f"  // pipeline register cut")
            w(f"  reg [{width - 1}:0] l{li + 1}_q;")
            w(f"  always @(posedge clk) begin")
            w(f"    l{li + 1}_q <= l{li + 1};")
            w(f"  end")
            source = f"l{li + 1}_q"
        w("")

    g = circuit.group_size
    count_width = max(1, g.bit_length())
    for d in range(circuit.d_act):
        w(f"  // popcount for action {d} (group bits {d * g}..{(d + 1) * g - 1})")
        level = [(f"{source}[{d * g + i}]", 1) for i in range(g)]
        n_node = 0
        while len(level) > 1:
            nxt = []
            for i in range(0, len(level) - 1, 2):
                (ea, wa), (eb, wb) = level[i], level[i + 1]
                wd = max(wa, wb) + 1
                name = f"pc{d}_n{n_node}"
                n_node += 1
                pa = f"{{{wd - wa}'b{'0' * (wd - wa)}, {ea}}}" if wd > wa else ea
                pb = f"{{{wd - wb}'b{'0' * (wd - wb)}, {eb}}}" if wd > wb else eb
                w(f"  wire [{wd - 1}:0] {name};")
                w(f"  assign {name} = {pa} + {pb};")
                nxt.append((name, wd))
            if len(level) % 2 == 1:
                nxt.append(level[-1])
            level = nxt
        expr, ew = level[0]
        w(f"  wire [{count_width - 1}:0] pc{d};")
        if ew < count_width:
            w(f"  assign pc{d} = {{{count_width - ew}'b{'0' * (count_width - ew)}, {expr}}};")
        else:
            w(f"  assign pc{d} = {expr};")
        w("")

    for d in range(circuit.d_act):
        w(f"  // action ROM {d}: popcount -> quantized action word")
        w(f"  reg signed [{WORD_BITS - 1}:0] act_{d}_r;")
        w(f"  always @(posedge clk) begin")
        w(f"    case (pc{d})")
        for s in range(g + 1):
            word = int(circuit.action_tables[d, s])
            lit = (f"-{WORD_BITS}'sd{-word}" if word < 0 else f"{WORD_BITS}'sd{word}")
            w(f"      {count_width}'d{s}: act_{d}_r <= {lit};")
        w(f"      default: act_{d}_r <= {WORD_BITS}'sd0;")
        w(f"    endcase")
        w(f"  end")
        w(f"  assign act_{d} = act_{d}_r;")
        w("")

    w("endmodule")
    w("")
    return "\n".join(out)
