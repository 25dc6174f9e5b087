"""The frozen corpus must exercise every translation rule, checked by execution."""

from collections import defaultdict

import pytest

from bmr.decoder import AL, InstrClass, classify
from bmr.decoder.registers import PC
from bmr.emu.machine import Machine

from helpers import CODE, build_image, load_corpus

CORPUS = load_corpus()


def it_length(mask: int) -> int:
    return 4 - (mask & -mask).bit_length() + 1


def evidence(code: bytes) -> dict:
    """Rule name -> set of observed outcomes while running ``code``."""
    seen = defaultdict(set)
    m = Machine(build_image(code))
    m.reset(CODE)
    for _ in range(20_000):
        pc = m.s.r[15]
        i = m.fetch(pc)
        in_it = m.s.itstate & 0xF
        regs = list(m.s.r)
        m.step()
        if m.halted:
            break
        nxt = m.s.r[15]
        op = i.op
        if classify(i) is InstrClass.C1 and op != "IT":
            seen["c1"].add(op)
        if op == "IT":
            seen[f"it{it_length(i.imm & 0xF)}"].add(pc)
        if op == "ADR":
            seen["adr"].add(pc)
        if op.startswith("LDR") and i.n == PC:
            seen["pc_load"].add(op)
        if op == "B" and i.cond == AL and not in_it:
            seen["b"].add(pc)
        if op == "B" and i.cond != AL:
            seen["bcond_taken" if nxt == i.branch_target else "bcond_not_taken"].add(pc)
        if op in ("BL", "BX", "BLX"):
            seen[op.lower()].add(pc)
        if op in ("CBZ", "CBNZ"):
            seen[op.lower()].add(nxt == i.branch_target)
        if op in ("TBB", "TBH"):
            seen[op.lower()].add(regs[i.m])
        if (op in ("MOV", "ADD") and PC in i.reads | i.writes
                and i.enc in ("MOV_reg_T1", "ADD_reg_T2")):
            seen["pc_move"].add(pc)
    assert m.halted == "bkpt"
    return seen


EVIDENCE = {p["name"]: evidence(bytes.fromhex(p["code"])) for p in CORPUS}


def test_corpus_size():
    assert len(CORPUS) >= 30
    assert len({p["name"] for p in CORPUS}) == len(CORPUS)


@pytest.mark.parametrize("prog", CORPUS, ids=[p["name"] for p in CORPUS])
def test_declared_rules_are_exercised(prog):
    ev = EVIDENCE[prog["name"]]
    for rule in prog["rules"]:
        if rule == "sp":
            continue
        assert ev.get(rule), f"{prog['name']} never exercises {rule}"


def test_union_covers_every_rule():
    total = defaultdict(set)
    for ev in EVIDENCE.values():
        for k, v in ev.items():
            total[k] |= {(id(ev), x) for x in v}
    for rule in ("adr", "pc_load", "b", "bcond_taken", "bcond_not_taken", "bl", "bx", "blx",
                 "it1", "it2", "it3", "it4", "pc_move"):
        assert total[rule], rule
    c1_ops = set().union(*(ev["c1"] for ev in EVIDENCE.values()))
    assert {"ADD", "SUB", "LDR", "STR"} <= c1_ops
    for op in ("cbz", "cbnz"):
        assert {x for _, x in total[op]} == {True, False}, f"{op} both paths"
    for op in ("tbb", "tbh"):
        assert max(len(ev.get(op, ())) for ev in EVIDENCE.values()) >= 3, op
