"""Regenerate the bundled BlocksWorld sample dataset.

Usage: python scripts/make_blocksworld_sample.py [OUT_DIR]
"""
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "pddl_rag" / "data"
SIZES = [3, 3, 3, 3, 4, 4, 4, 4, 4, 5, 5, 5, 5, 5, 5, 6, 6, 6, 6, 6]

DD = """I am playing with a set of blocks. Here are the actions I can do:

Pick up a block from the table.
Put down a block on the table.
Stack a block on top of another block.
Unstack a block from on top of another block.

I have the following restrictions on my actions:
I can only pick up or unstack one block at a time.
I can only pick up or unstack a block if my hand is empty.
I can only pick up a block if the block is on the table and the block is clear. A block is clear if the block has no other blocks on top of it and if the block is not picked up.
I can only unstack a block from on top of another block if the block I am unstacking was really on top of the other block.
I can only unstack a block from on top of another block if the block I am unstacking is clear.
Once I pick up or unstack a block, I am holding the block.
I can only put down a block that I am holding.
I can only stack a block on top of another block if I am holding the block being stacked.
I can only stack a block on top of another block if the block onto which I am stacking the block is clear.
Once I put down or stack a block, my hand becomes empty.
Once I stack a block on top of a second block, the second block is no longer clear.
"""


def random_towers(blocks, rng):
    """Partition blocks into towers (bottom first)."""
    order = blocks[:]
    rng.shuffle(order)
    towers = []
    for b in order:
        if towers and rng.random() < 0.55:
            rng.choice(towers).append(b)
        else:
            towers.append([b])
    return towers


def facts(towers):
    out = []
    for t in towers:
        out.append(("on-table", t[0]))
        for below, above in zip(t, t[1:]):
            out.append(("on", above, below))
        out.append(("clear", t[-1]))
    return out


def describe(f):
    if f[0] == "on-table":
        return f"{f[1]} is on the table"
    if f[0] == "clear":
        return f"{f[1]} is clear"
    return f"{f[1]} is on top of {f[2]}"


def make_task(idx, n, rng):
    blocks = [f"b{i}" for i in range(1, n + 1)]
    init = facts(random_towers(blocks, rng))
    while True:
        goal_towers = random_towers(blocks, rng)
        goal = [f for f in facts(goal_towers) if f[0] == "on"]
        if goal and set(goal) - set(init):
            break
    init_sorted = sorted(init)
    pd = (
        f"As initial conditions I have that, the hand is empty, "
        + ", ".join(describe(f) for f in init_sorted)
        + ".\nMy goal is to have that "
        + ", ".join(describe(f) for f in sorted(goal))
        + ".\n"
    )
    atoms = "\n    ".join(f"({' '.join(f)})" for f in [("arm-empty",)] + init_sorted)
    goal_atoms = "\n         ".join(f"({' '.join(f)})" for f in sorted(goal))
    pf = (
        f"(define (problem bw-{idx:02d})\n"
        f"  (:domain blocksworld)\n"
        f"  (:objects {' '.join(blocks)})\n"
        f"  (:init\n    {atoms})\n"
        f"  (:goal (and {goal_atoms})))\n"
    )
    return pd, pf


def main(out: Path) -> None:
    rng = random.Random(20250601)
    domain = (DATA / "fixtures" / "blocksworld_domain.pddl").read_text()
    for i, n in enumerate(SIZES, start=1):
        pd, pf = make_task(i, n, rng)
        d = out / f"bw-{i:02d}"
        d.mkdir(parents=True, exist_ok=True)
        (d / "dd.txt").write_text(DD)
        (d / "pd.txt").write_text(pd)
        (d / "gold_domain.pddl").write_text(domain)
        (d / "gold_problem.pddl").write_text(pf)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else DATA / "blocksworld")
