"""CPLEX LP-format export and a matching reader.

Coefficients are written with ``repr`` so a write/read cycle reproduces every
float bit for bit.  The reader accepts the common subset produced by this
writer and by mainstream solvers (objective constant, ``free``/``inf`` bounds,
``General``/``Binary`` sections, ``Maximize``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .model import MilpModel, ModelBuilder, ModelError

_LINE_TERMS = 6


class LpFormatError(ValueError):
    pass


def _num(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def _expr(pairs) -> list[str]:
    out, line = [], []
    for name, v in pairs:
        sign = "-" if v < 0 else "+"
        line.append(f"{sign} {repr(abs(float(v)))} {name}")
        if len(line) == _LINE_TERMS:
            out.append(" ".join(line))
            line = []
    if line:
        out.append(" ".join(line))
    return out


def export_model(model: MilpModel, maximize: bool = False) -> str:
    """Render ``model`` as LP-format text."""
    names = model.names
    lines = [f"\\ Problem: {model.name}", "Maximize" if maximize else "Minimize"]
    obj_terms = [(names[j], model.c[j]) for j in np.flatnonzero(model.c)]
    if maximize:
        obj_terms = [(n, -v) for n, v in obj_terms]
    body = _expr(obj_terms)
    const = -model.obj_constant if maximize else model.obj_constant
    if const != 0.0:
        body.append(("- " if const < 0 else "+ ") + repr(abs(float(const))))
    if not body:
        body = [f"+ 0.0 {names[0]}"] if names else ["0"]
    lines.append(" obj: " + body[0])
    lines.extend("   " + b for b in body[1:])
    lines.append("Subject To")
    for k in range(model.num_rows):
        cols, vals = model.row(k)
        body = _expr([(names[j], v) for j, v in zip(cols, vals)])
        if not body:
            body = [f"0.0 {names[0]}"] if names else ["0"]
        sense = {"<=": "<=", ">=": ">=", "=": "="}[model.senses[k]]
        body[-1] += f" {sense} {_num(model.rhs[k])}"
        lines.append(f" {model.row_names[k]}: " + body[0])
        lines.extend("   " + b for b in body[1:])
    lines.append("Bounds")
    for j, nm in enumerate(names):
        lo, hi = model.lb[j], model.ub[j]
        if lo == -np.inf and hi == np.inf:
            lines.append(f" {nm} free")
        elif lo == hi:
            lines.append(f" {nm} = {_num(lo)}")
        else:
            lines.append(f" {_num(lo)} <= {nm} <= {_num(hi)}")
    ints = [nm for j, nm in enumerate(names) if model.integer[j]]
    if ints:
        lines.append("Generals")
        for i in range(0, len(ints), 8):
            lines.append(" " + " ".join(ints[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


_SECTION_RE = re.compile(
    r"^\s*(minimize|minimum|min|maximize|maximum|max|subject\s+to|such\s+that|s\.t\.|st|"
    r"bounds?|generals?|gen|integers?|binary|binaries|bin|end)\s*$", re.IGNORECASE)
_SENSES = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}
_TOKEN_RE = re.compile(
    r"\s*(<=|>=|=<|=>|<|>|=|[+-]|:|[+-]?(?:inf(?:inity)?)(?![A-Za-z0-9_])|"
    r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[A-Za-z_!\"#$%&()/,.;?@`'{}|~][A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~\[\]]*)")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"cannot tokenize near {text[pos:pos + 30]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return tok.lower().lstrip("+-") in ("inf", "infinity")


def _to_float(tok: str) -> float:
    t = tok.lower()
    if t.lstrip("+-") in ("inf", "infinity"):
        return -np.inf if t.startswith("-") else np.inf
    return float(tok)


def _parse_linear(toks: list[str]) -> tuple[list[tuple[str, float]], float]:
    """Parse ``[+|-] [coef] name ...`` into (terms, constant)."""
    terms, const, i, sign = [], 0.0, 0, 1.0
    coef = None
    while i < len(toks):
        t = toks[i]
        if t in "+-" and len(t) == 1:
            sign = -1.0 if t == "-" else 1.0
            i += 1
            continue
        if _is_number(t):
            val = _to_float(t)
            if i + 1 < len(toks) and not _is_number(toks[i + 1]) and toks[i + 1] not in "+-":
                coef = val
                i += 1
                continue
            const += sign * val
            sign = 1.0
            i += 1
            continue
        terms.append((t, sign * (1.0 if coef is None else coef)))
        coef, sign = None, 1.0
        i += 1
    return terms, const


@dataclass
class LpFile:
    model: MilpModel
    maximize: bool


def read_lp(text: str, name: str = "lp") -> LpFile:
    """Parse LP-format text into a minimization model.

    A ``Maximize`` objective is negated; :attr:`LpFile.maximize` records it so
    callers can report the objective in its original sense.
    """
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0]
        if not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            key = m.group(1).lower().replace(" ", "")
            key = {"minimize": "min", "minimum": "min", "maximize": "max", "maximum": "max",
                   "subjectto": "st", "suchthat": "st", "s.t.": "st", "bound": "bounds",
                   "general": "gen", "generals": "gen", "integer": "gen", "integers": "gen",
                   "binaries": "bin", "binary": "bin"}.get(key, key)
            if key == "end":
                break
            current = key
            sections.setdefault(key, [])
            continue
        if current is None:
            raise LpFormatError(f"content before any section: {line.strip()!r}")
        sections[current].append(line)

    if "min" in sections and "max" in sections:
        raise LpFormatError("both Minimize and Maximize sections present")
    maximize = "max" in sections
    obj_toks = _tokens(" ".join(sections.get("max" if maximize else "min", [])))
    if len(obj_toks) >= 2 and obj_toks[1] == ":":
        obj_toks = obj_toks[2:]
    obj_terms, obj_const = _parse_linear(obj_toks)

    rows = []
    toks = _tokens(" ".join(sections.get("st", [])))
    i = 0
    k = 0
    while i < len(toks):
        rname = None
        if i + 1 < len(toks) and toks[i + 1] == ":":
            rname, i = toks[i], i + 2
        j = i
        while j < len(toks) and toks[j] not in _SENSES:
            j += 1
        if j >= len(toks):
            raise LpFormatError(f"constraint {rname or k} has no sense")
        sense = _SENSES[toks[j]]
        lhs_end = j
        j += 1
        rhs_text = ""
        if j < len(toks) and toks[j] in ("+", "-"):
            rhs_text = toks[j]
            j += 1
        if j >= len(toks) or not _is_number(toks[j]):
            raise LpFormatError(f"constraint {rname or k} has no numeric right-hand side")
        rhs = _to_float(rhs_text + toks[j].lstrip("+") if rhs_text else toks[j])
        terms, const = _parse_linear(toks[i:lhs_end])
        rows.append((rname or f"r{k}", terms, sense, rhs - const))
        k += 1
        i = j + 1

    # Variables are indexed in Bounds-section order first, so a model written by
    # export_model reads back with identical column indices.
    var_order: list[str] = []
    seen: set[str] = set()

    def note(nm):
        if nm not in seen:
            seen.add(nm)
            var_order.append(nm)

    lb: dict[str, float] = {}
    ub: dict[str, float] = {}
    for line in sections.get("bounds", []):
        bt = _tokens(line)
        if not bt:
            continue
        if len(bt) == 2 and bt[1].lower() == "free":
            note(bt[0])
            lb[bt[0]], ub[bt[0]] = -np.inf, np.inf
            continue
        bt = _merge_signs(bt)
        if len(bt) == 5:
            lo, s1, nm, s2, hi = bt
            note(nm)
            lb[nm], ub[nm] = _to_float(lo), _to_float(hi)
        elif len(bt) == 3:
            a, s, b_ = bt
            if _is_number(a):
                nm, val = b_, _to_float(a)
                s = {"<=": ">=", ">=": "<=", "=": "="}.get(_SENSES.get(s), s)
            else:
                nm, val = a, _to_float(b_)
            note(nm)
            s = _SENSES.get(s)
            if s == "<=":
                ub[nm] = val
            elif s == ">=":
                lb[nm] = val
            elif s == "=":
                lb[nm] = ub[nm] = val
            else:
                raise LpFormatError(f"cannot parse bound line {line.strip()!r}")
        else:
            raise LpFormatError(f"cannot parse bound line {line.strip()!r}")
    for nm, _ in obj_terms:
        note(nm)
    for _, terms, _, _ in rows:
        for nm, _ in terms:
            note(nm)

    ints: set[str] = set()
    bins: set[str] = set()
    for key, target in (("gen", ints), ("bin", bins)):
        for line in sections.get(key, []):
            for nm in line.split():
                note(nm)
                target.add(nm)

    b = ModelBuilder(name, check_names=False)
    for nm in var_order:
        lo = lb.get(nm, 0.0)
        hi = ub.get(nm, np.inf)
        if nm in bins:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        try:
            b.add_var(nm, lo, hi, nm in ints or nm in bins)
        except ModelError as e:
            raise LpFormatError(str(e)) from None
    sgn = -1.0 if maximize else 1.0
    for nm, v in obj_terms:
        b.add_obj(b.index(nm), sgn * v)
    b.obj_constant = sgn * obj_const
    for rname, terms, sense, rhs in rows:
        b.add_row([(b.index(nm), v) for nm, v in terms], sense, rhs, rname)
    return LpFile(b.build(), maximize)


def _merge_signs(bt: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(bt):
        if bt[i] in ("+", "-") and i + 1 < len(bt) and _is_number(bt[i + 1]):
            out.append(bt[i] + bt[i + 1].lstrip("+"))
            i += 2
        else:
            out.append(bt[i])
            i += 1
    return out
