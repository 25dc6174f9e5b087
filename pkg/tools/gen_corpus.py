"""Assemble the differential corpus with Keystone and freeze it as JSON.

Development-time only; the test suite reads tests/corpus/programs.json and
never needs an assembler. Run from the repository root:

    python3 tools/gen_corpus.py
"""

import json
from pathlib import Path

import keystone

CODE_BASE = 0x0800_0040
RAM = 0x2000_0100

PROGRAMS = [
    ("alu_flags", ["c1"], """
        movs r0, #5
        movs r1, #7
        adds r2, r0, r1
        subs r3, r0, r1
        adcs r2, r3
        sbcs r3, r0
        mul r4, r2, r3
        eor r5, r4, r3, lsl #3
        bic r6, r5, #0xf0
        mvns r7, r6
        lsrs r7, r7, #3
        asrs r6, r7, #1
        rors r6, r0
        cmp r6, r7
        bkpt #0
    """),
    ("alu_wide", ["c1"], """
        movw r0, #0x1234
        movt r0, #0xabcd
        mov r8, r0
        add r9, r8, #0x100
        sub r10, r9, r8
        orr r11, r10, #0xff00
        and r12, r11, r0
        lsr r1, r0, #4
        and r1, r1, #0xff
        clz r2, r1
        rev r3, r0
        uxtb r4, r3
        sxth r5, r0
        mls r6, r1, r2, r0
        mla r7, r1, r2, r3
        bkpt #0
    """),
    ("load_store", ["c1"], """
        ldr r0, =0x20000100
        movs r1, #0x5a
        str r1, [r0]
        strb r1, [r0, #5]
        strh r1, [r0, #10]
        ldr r2, [r0]
        ldrb r3, [r0, #5]
        ldrh r4, [r0, #10]
        ldrsb r5, [r0, #5]
        str r2, [r0, #4]!
        ldr r6, [r0], #4
        strd r1, r2, [r0, #8]
        ldrd r7, r8, [r0, #8]
        movs r3, #2
        ldr r9, [r0, r3, lsl #2]
        bkpt #0
    """),
    ("load_store_multiple", ["c1"], """
        ldr r0, =0x20000100
        movs r1, #1
        movs r2, #2
        movs r3, #3
        stm r0!, {r1, r2, r3}
        ldmdb r0!, {r4, r5, r6}
        stmdb r0!, {r4, r5}
        ldm r0, {r1, r2}
        bkpt #0
    """),
    ("high_regs", ["c1"], """
        movs r0, #3
        mov r12, r0
        add r12, r12
        mov lr, r12
        add r0, lr
        mov r8, lr
        cmp r8, r0
        bkpt #0
    """),
    ("adr_forward", ["adr"], """
        movs r2, #1
        adr r0, data
        adr.w r1, data
        ldr r3, [r0]
        adds r3, r2
        bkpt #0
        .align 2
    data:
        .word 0x11223344
    """),
    ("adr_backward", ["adr"], """
        b start
        .align 2
    back:
        .word 0xcafef00d
    start:
        adr.w r0, back
        ldr r1, [r0]
        adr r2, fwd
        ldr r3, [r2]
        bkpt #0
        .align 2
    fwd:
        .word 0x0badc0de
    """),
    ("literal_loads", ["pc_load"], """
        ldr r0, lit1
        ldr.w r1, lit2
        ldrb.w r2, lit1
        ldrh.w r3, lit2
        ldrsb.w r4, lit3
        ldrsh.w r5, lit3
        bkpt #0
        .align 2
    lit1: .word 0x80818283
    lit2: .word 0x01020304
    lit3: .word 0x0000f0f0
    """),
    ("literal_unaligned_site", ["pc_load"], """
        nop
        ldr r0, lit
        nop
        ldr r1, lit
        ldrd r2, r3, lit
        bkpt #0
        .align 2
    lit: .word 0x13572468
         .word 0x9abcdef0
    """),
    ("literal_backward", ["pc_load"], """
        b start
        .align 2
    lit: .word 0x600dcafe
    start:
        ldr.w r0, lit
        ldr r1, =0x12345678
        bkpt #0
    """),
    ("branch_unconditional", ["b"], """
        movs r0, #1
        b skip
        movs r0, #2
    skip:
        b.w skip2
        movs r1, #3
    skip2:
        adds r0, #10
        bkpt #0
    """),
    ("branch_cond_taken", ["bcond_taken"], """
        movs r0, #5
        cmp r0, #5
        beq eq1
        movs r1, #1
    eq1:
        cmp r0, #3
        bgt gt1
        movs r2, #2
    gt1:
        bne.w ne1
        movs r3, #3
    ne1:
        bkpt #0
    """),
    ("branch_cond_not_taken", ["bcond_not_taken"], """
        movs r0, #5
        cmp r0, #5
        bne ne1
        movs r1, #1
    ne1:
        cmp r0, #7
        bge ge1
        movs r2, #2
    ge1:
        beq.w eq1
        movs r3, #3
    eq1:
        bkpt #0
    """),
    ("branch_loop", ["bcond_taken", "bcond_not_taken"], """
        movs r0, #4
        movs r1, #0
    loop:
        adds r1, r0
        subs r0, #1
        bne loop
        bkpt #0
    """),
    ("branch_backward_wide", ["b", "bcond_taken"], """
        movs r0, #0
        b fwd
    back:
        adds r0, #5
        cmp r0, #10
        blt.w back
        b.w done
    fwd:
        adds r0, #1
        b back
    done:
        bkpt #0
    """),
    ("call_return", ["bl", "bx"], """
        movs r0, #2
        bl double
        bl double
        adds r1, r0, #1
        bkpt #0
    double:
        add r0, r0
        bx lr
    """),
    ("call_nested", ["bl", "bx", "sp"], """
        movs r0, #3
        bl outer
        bkpt #0
    outer:
        push {r4, lr}
        mov r4, r0
        bl inner
        adds r0, r4
        pop {r4, pc}
    inner:
        lsls r0, r0, #2
        bx lr
    """),
    ("blx_register", ["blx", "bx"], """
        adr r3, fn
        adds r3, #1
        movs r0, #7
        blx r3
        adds r1, r0, #1
        bkpt #0
        .align 2
    fn:
        adds r0, #5
        bx lr
    """),
    ("bx_register", ["bx"], """
        adr r2, tgt
        adds r2, #1
        movs r0, #1
        bx r2
        movs r0, #2
        .align 2
    tgt:
        adds r0, #40
        bkpt #0
    """),
    ("cbz_paths", ["cbz"], """
        movs r0, #0
        movs r1, #9
        cbz r0, z1
        movs r2, #1
    z1:
        cbz r1, z2
        movs r3, #3
    z2:
        bkpt #0
    """),
    ("cbnz_paths", ["cbnz"], """
        movs r0, #0
        movs r1, #9
        cbnz r0, n1
        movs r2, #1
    n1:
        cbnz r1, n2
        movs r3, #3
    n2:
        bkpt #0
    """),
    ("cbz_preserves_flags", ["cbz", "cbnz"], """
        movs r0, #0
        movs r1, #1
        cmp r1, #2
        cbz r0, z1
        nop
    z1:
        cbnz r1, z2
        nop
    z2:
        bkpt #0
    """),
    ("tbb_indices", ["tbb"], """
        movs r5, #0
        movs r0, #0
    loop:
        tbb [pc, r0]
    tab:
        .byte (c0 - tab) / 2
        .byte (c1 - tab) / 2
        .byte (c2 - tab) / 2
        .byte (c3 - tab) / 2
    c0: adds r5, #1
        b next
    c1: adds r5, #10
        b next
    c2: adds r5, #100
        b next
    c3: adds r5, #200
    next:
        adds r0, #1
        cmp r0, #4
        blt loop
        bkpt #0
    """),
    ("tbh_indices", ["tbh"], """
        movs r5, #0
        movs r0, #0
    loop:
        tbh [pc, r0, lsl #1]
    tab:
        .hword (c0 - tab) / 2
        .hword (c1 - tab) / 2
        .hword (c2 - tab) / 2
    c0: adds r5, #1
        b next
    c1: adds r5, #10
        b next
    c2: adds r5, #100
    next:
        adds r0, #1
        cmp r0, #3
        blt loop
        bkpt #0
    """),
    ("tbb_register_base", ["tbb"], """
        adr r1, tab
        movs r5, #0
        movs r0, #2
    loop:
        tbb [r1, r0]
    after:
        adds r5, #1
        b next
        adds r5, #10
        b next
        adds r5, #100
    next:
        subs r0, #1
        bpl loop
        bkpt #0
        .align 2
    tab:
        .byte 0, 2, 4, 0
    """),
    ("it_len1", ["it1"], """
        movs r0, #1
        cmp r0, #1
        it eq
        moveq r1, #5
        cmp r0, #2
        it eq
        moveq r2, #6
        bkpt #0
    """),
    ("it_len2", ["it2"], """
        movs r0, #3
        cmp r0, #3
        ite eq
        moveq r1, #1
        movne r1, #2
        cmp r0, #4
        itt ne
        addne r2, r0, #1
        addne r3, r0, #2
        bkpt #0
    """),
    ("it_len3", ["it3"], """
        movs r0, #8
        cmp r0, #5
        itet gt
        movgt r1, #1
        movle r1, #2
        addgt r2, r1, #3
        bkpt #0
    """),
    ("it_len4", ["it4"], """
        movs r0, #0
        cmp r0, #0
        ittee eq
        moveq r1, #1
        moveq r2, #2
        movne r3, #3
        movne r4, #4
        cmp r1, #1
        itete lt
        movlt r5, #5
        movge r5, #6
        movlt r6, #7
        movge r6, #8
        bkpt #0
    """),
    ("it_flag_setting", ["it2", "c1"], """
        movs r0, #1
        cmp r0, #0
        itt ne
        addne r1, r0, #1
        cmpne r1, #2
        ite eq
        moveq r2, #1
        movne r2, #2
        bkpt #0
    """),
    ("pc_operand_moves", ["pc_move"], """
        mov r0, pc
        add r1, pc
        adr r2, tgt
        adds r2, #1
        mov lr, r2
        mov pc, lr
        movs r3, #1
    tgt:
        movs r4, #4
        bkpt #0
    """),
    ("pc_loads", ["pc_load"], """
        adr r0, ret1
        adds r0, #1
        ldr r1, =0x20000100
        str r0, [r1]
        ldr pc, [r1]
        movs r2, #9
        .align 2
    ret1:
        adr r3, ret2
        adds r3, #1
        str r3, [r1, #4]
        movs r4, #4
        ldr pc, [r1, r4]
        movs r2, #8
        .align 2
    ret2:
        bkpt #0
    """),
    ("ldm_pc", ["pc_load"], """
        ldr r0, =0x20000100
        adr r1, tgt
        adds r1, #1
        movs r2, #7
        str r2, [r0]
        str r1, [r0, #4]
        ldm r0, {r3, pc}
        movs r5, #1
        .align 2
    tgt:
        ldr r0, =0x20000110
        adr r1, tgt2
        adds r1, #1
        str r1, [r0, #-4]
        ldmdb r0, {r6, pc}
        movs r5, #2
        .align 2
    tgt2:
        bkpt #0
    """),
    ("stack_frame", ["sp"], """
        push {r4, r5, lr}
        sub sp, #16
        movs r0, #3
        str r0, [sp, #4]
        add r1, sp, #8
        ldr r2, [sp, #4]
        mov r3, sp
        add sp, #16
        pop {r4, r5}
        pop {r6}
        bkpt #0
    """),
    ("stack_doubleword", ["sp"], """
        movs r0, #1
        movs r1, #2
        strd r0, r1, [sp, #-8]!
        ldrd r2, r3, [sp]
        add sp, #8
        bkpt #0
    """),
    ("mixed_function", ["bl", "sp", "it2", "cbz", "pc_load"], """
        movs r0, #5
        bl sum
        mov r6, r0
        movs r0, #0
        bl sum
        bkpt #0
    sum:
        push {r4, lr}
        movs r4, #0
        cbz r0, out
    more:
        adds r4, r0
        subs r0, #1
        cmp r0, #2
        ite gt
        movgt r1, #1
        movle r1, #2
        cmp r0, #0
        bne more
    out:
        ldr r1, k
        add r0, r4, r1
        pop {r4, pc}
        .align 2
    k:  .word 100
    """),
]


def main():
    ks = keystone.Ks(keystone.KS_ARCH_ARM, keystone.KS_MODE_THUMB)
    out = []
    for name, rules, src in PROGRAMS:
        lines = [ln.strip() for ln in src.strip().splitlines()]
        text = "\n".join(lines)
        enc, _ = ks.asm(text, CODE_BASE)
        out.append({"name": name, "rules": rules, "source": lines, "code": bytes(enc).hex()})
    path = Path(__file__).resolve().parent.parent / "tests" / "corpus" / "programs.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {len(out)} programs to {path}")


if __name__ == "__main__":
    main()
