"""Parser and simulator for the emitted RTL subset.

This exists so emitted circuits can be re-simulated and checked without a
vendor toolchain. The grammar covers exactly what the emitter produces:

* wire/reg declarations (optionally signed, optional [msb:lsb] range)
* localparam bit vectors with sized hex literals
* continuous assigns whose right side is an identifier, a constant- or
  signal-indexed bit select, a concatenation of those (plus sized binary
  literals), or a single '+' of two such operands
* always @(posedge clk) blocks containing nonblocking assigns or a single
  case statement with sized decimal constants

Values are plain integers masked to the declared width on assignment.
Combinational assigns are evaluated in emission order (the emitter writes
them topologically); a clock edge samples all register right-hand sides
before committing, then re-evaluates the combinational net.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError

_DECL = re.compile(r"^\s*(input\s+wire|output\s+wire|wire|reg)\s*(signed)?\s*"
                   r"(?:\[(\d+):(\d+)\])?\s*(\w+)\s*[;,)]?\s*$")
_LOCALPARAM = re.compile(r"^\s*localparam\s*\[(\d+):0\]\s*(\w+)\s*=\s*(\d+)'h([0-9a-fA-F]+)\s*;\s*$")
_ASSIGN = re.compile(r"^\s*assign\s+(\w+)(?:\[(\d+)\])?\s*=\s*(.+?)\s*;\s*$")
_ALWAYS = re.compile(r"^\s*always\s*@\(posedge\s+clk\)\s*begin\s*$")
_NONBLOCK = re.compile(r"^\s*(\w+)\s*<=\s*(.+?)\s*;\s*$")
_CASE = re.compile(r"^\s*case\s*\((\w+)\)\s*$")
_CASE_ARM = re.compile(r"^\s*(?:(\d+)'d(\d+)|default)\s*:\s*(\w+)\s*<=\s*(.+?)\s*;\s*$")
_BIN_LIT = re.compile(r"^(\d+)'b([01]+)$")
_DEC_LIT = re.compile(r"^(-)?(\d+)'sd(\d+)$")
_BIT_SELECT = re.compile(r"^(\w+)\[(\w+)\]$")


class _Expr:
    """Operand tree: ('lit', width, value) | ('sig', name) |
    ('bit', name, index_expr) | ('concat', [items]) | ('add', a, b)."""

    __slots__ = ("kind", "a", "b", "items", "width", "value", "name")

    def __init__(self, kind, **kw):
        self.kind = kind
        for key, val in kw.items():
            setattr(self, key, val)


def _parse_operand(text: str) -> _Expr:
    text = text.strip()
    m = _BIN_LIT.match(text)
    if m:
        return _Expr("lit", width=int(m.group(1)), value=int(m.group(2), 2))
    m = _BIT_SELECT.match(text)
    if m:
        return _Expr("bit", name=m.group(1),
                     a=m.group(2))  # index: decimal literal or signal name
    if re.fullmatch(r"\w+", text):
        return _Expr("sig", name=text)
    if text.startswith("{") and text.endswith("}"):
        inner = text[1:-1]
        items, depth, start = [], 0, 0
        for i, ch in enumerate(inner):
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            elif ch == "," and depth == 0:
                items.append(inner[start:i])
                start = i + 1
        items.append(inner[start:])
        return _Expr("concat", items=[_parse_operand(i) for i in items])
    raise ConfigError(f"unsupported RTL operand: {text!r}")


def _parse_expr(text: str) -> _Expr:
    text = text.strip()
    depth = 0
    for i, ch in enumerate(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "+" and depth == 0:
            return _Expr("add", a=_parse_operand(text[:i]), b=_parse_operand(text[i + 1:]))
    return _parse_operand(text)


class RtlModule:
    """One parsed module instance with mutable simulation state."""

    def __init__(self, text: str):
        self.widths = {}
        self.signed = set()
        self.inputs = []
        self.outputs = []
        self.params = {}
        self.assigns = []       # (name, bit_index_or_None, expr)
        self.regs = []          # (name, expr) nonblocking
        self.cases = []         # (selector, {value: (name, const)}, (name, default))
        self.state = {}
        self._parse(text)
        self.reset()

    # -- parsing -----------------------------------------------------------

    def _parse(self, text: str):
        lines = text.splitlines()
        i = 0
        while i < len(lines):
            line = lines[i]
            stripped = line.strip()
            i += 1
            if (not stripped or stripped.startswith("//") or stripped.startswith("module")
                    or stripped == ");" or stripped.startswith("endmodule")):
                continue
            m = _LOCALPARAM.match(line)
            if m:
                self.params[m.group(2)] = int(m.group(4), 16)
                continue
            m = _DECL.match(line.rstrip(","))
            if m:
                kind, sign, msb, lsb, name = m.groups()
                if name == "clk":
                    continue
                width = (int(msb) - int(lsb) + 1) if msb is not None else 1
                self.widths[name] = width
                if sign:
                    self.signed.add(name)
                if kind == "input wire":
                    self.inputs.append(name)
                elif kind == "output wire":
                    self.outputs.append(name)
                continue
            m = _ASSIGN.match(line)
            if m:
                name, bit, rhs = m.groups()
                self.assigns.append((name, int(bit) if bit is not None else None,
                                     _parse_expr(rhs)))
                continue
            if _ALWAYS.match(line):
                i = self._parse_always(lines, i)
                continue
            raise ConfigError(f"unsupported RTL construct: {stripped!r}")

    def _parse_always(self, lines, i):
        body = []
        while i < len(lines):
            stripped = lines[i].strip()
            i += 1
            if stripped == "end":
                break
            body.append(stripped)
        if body and _CASE.match(body[0]):
            selector = _CASE.match(body[0]).group(1)
            arms = {}
            default = None
            for stmt in body[1:]:
                if stmt == "endcase":
                    break
                m = _CASE_ARM.match(stmt)
                if not m:
                    raise ConfigError(f"unsupported case arm: {stmt!r}")
                _, value, target, rhs = m.groups()
                const = self._parse_signed_const(rhs)
                if value is None:
                    default = (target, const)
                else:
                    arms[int(value)] = (target, const)
            self.cases.append((selector, arms, default))
        else:
            for stmt in body:
                m = _NONBLOCK.match(stmt)
                if not m:
                    raise ConfigError(f"unsupported clocked statement: {stmt!r}")
                self.regs.append((m.group(1), _parse_expr(m.group(2))))
        return i

    @staticmethod
    def _parse_signed_const(text: str) -> int:
        m = _DEC_LIT.match(text.strip())
        if not m:
            raise ConfigError(f"unsupported constant: {text!r}")
        sign, _, digits = m.groups()
        return -int(digits) if sign else int(digits)

    # -- evaluation ----------------------------------------------------------

    def reset(self):
        self.state = {name: 0 for name in self.widths}

    def _value(self, expr: _Expr) -> tuple:
        """Returns (value, width)."""
        if expr.kind == "lit":
            return expr.value, expr.width
        if expr.kind == "sig":
            if expr.name in self.params:
                return self.params[expr.name], 64
            return self.state[expr.name], self.widths[expr.name]
        if expr.kind == "bit":
            idx = int(expr.a) if expr.a.isdigit() else self.state[expr.a]
            base = self.params.get(expr.name)
            if base is None:
                base = self.state[expr.name]
            return (base >> idx) & 1, 1
        if expr.kind == "concat":
            value, width = 0, 0
            for item in expr.items:
                v, w = self._value(item)
                value = (value << w) | v
                width += w
            return value, width
        if expr.kind == "add":
            va, wa = self._value(expr.a)
            vb, wb = self._value(expr.b)
            return va + vb, max(wa, wb)
        raise ConfigError(f"bad expression node {expr.kind}")

    def _mask(self, name: str, value: int) -> int:
        return value & ((1 << self.widths[name]) - 1)

    def eval_comb(self):
        for name, bit, expr in self.assigns:
            value, _ = self._value(expr)
            if bit is None:
                self.state[name] = self._mask(name, value)
            else:
                current = self.state[name]
                self.state[name] = (current & ~(1 << bit)) | ((value & 1) << bit)

    def clock(self):
        """One posedge: sample all clocked right-hand sides, commit, settle."""
        updates = []
        for name, expr in self.regs:
            updates.append((name, self._mask(name, self._value(expr)[0])))
        for selector, arms, default in self.cases:
            sel = self.state[selector]
            target, const = arms.get(sel, default if default is not None else (None, 0))
            if target is not None:
                updates.append((target, self._mask(target, const)))
        for name, value in updates:
            self.state[name] = value
        self.eval_comb()

    def read_output(self, name: str) -> int:
        value = self.state[name]
        if name in self.signed and value >= (1 << (self.widths[name] - 1)):
            value -= 1 << self.widths[name]
        return value

    def run(self, in_bits: np.ndarray, cycles: int) -> dict:
        """Apply an input bit vector, clock `cycles` times, read outputs."""
        word = 0
        for i, b in enumerate(np.asarray(in_bits).astype(np.int64)):
            word |= (int(b) & 1) << i
        self.reset()
        self.state["in_bits"] = word
        self.eval_comb()
        for _ in range(cycles):
            self.clock()
        return {name: self.read_output(name) for name in self.outputs}


def simulate_actions(rtl_text: str, in_bits: np.ndarray, pipeline_stages: int) -> np.ndarray:
    """Convenience wrapper: one observation's thermometer bits -> action words."""
    from .rtl import latency_cycles

    module = RtlModule(rtl_text)
    outs = module.run(in_bits, latency_cycles(pipeline_stages))
    return np.array([outs[f"act_{d}"] for d in range(len(module.outputs))],
                    dtype=np.int16)
