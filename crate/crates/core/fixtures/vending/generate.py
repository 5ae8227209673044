"""Writes the vending-machine product line: feature_model.json and one
component machine per feature under components/.

    python3 generate.py [out_dir]
"""
import json
import os
import sys

HERE = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def counter(name, up, down, n, top):
    """Saturating counter: `up` moves towards n-1 and reports `top` once
    full; `down` steps back and reports whether anything was left."""
    rows = []
    for i in range(n):
        nxt = min(i + 1, n - 1)
        rows.append((i, up, "ok" if i < n - 1 else top, nxt))
        rows.append((i, down, "empty" if i == 0 else "back", max(i - 1, 0)))
    return [up, down], rows


def cycle(name, sym, n, out):
    """`sym` cycles through n states and emits `out` on wrap-around."""
    return [sym], [(i, sym, out if i == n - 1 else "0", (i + 1) % n) for i in range(n)]


def mode(name, sym, probe, n):
    """`sym` cycles through n modes; `probe` reports whether the current
    mode is the last one."""
    rows = []
    for i in range(n):
        rows.append((i, sym, "0", (i + 1) % n))
        rows.append((i, probe, "on" if i == n - 1 else "off", i))
    return [sym, probe], rows


def brewer(n, drink, stages=None):
    """Shared `brew`/`serve` inputs: `brew` advances through n stages,
    `serve` hands out `drink` at the last stage and starts over. Earlier
    stages answer `wait`, or their own name when `stages` is given."""
    rows = []
    for i in range(n):
        early = stages[i] if stages and i < n - 1 else "wait"
        rows.append((i, "brew", "0", min(i + 1, n - 1)))
        rows.append((i, "serve", drink if i == n - 1 else early, 0 if i == n - 1 else i))
    return ["brew", "serve"], rows


COMPONENTS = {
    "Base": counter("Base", "coin", "refund", 2, "full"),
    "Tea": brewer(4, "tea"),
    # stages are observable directly, so coffee never needs a counterexample
    "Coffee": brewer(4, "coffee", ["cold", "warm", "hot"]),
    "Cocoa": brewer(4, "cocoa"),
    "Sugar": cycle("Sugar", "sugar", 3, "sweet"),
    "Milk": mode("Milk", "milk", "froth", 2),
    "Cup": ([ "cup", "lid" ], [(0, "cup", "cup", 0), (0, "lid", "lid", 0)]),
}

MODEL = {
    "features": {
        "name": "Vending",
        "children": [
            {"name": "Base", "kind": "mandatory"},
            {"name": "Tea", "kind": "alternative", "group": "drink"},
            {"name": "Coffee", "kind": "alternative", "group": "drink"},
            {"name": "Cocoa", "kind": "alternative", "group": "drink"},
            {"name": "Sugar", "kind": "optional"},
            {"name": "Milk", "kind": "optional"},
            {"name": "Cup", "kind": "optional"},
        ],
    },
    "constraints": [],
}


def main():
    with open(os.path.join(HERE, "feature_model.json"), "w") as f:
        json.dump(MODEL, f, indent=2)
        f.write("\n")
    comp_dir = os.path.join(HERE, "components")
    os.makedirs(comp_dir, exist_ok=True)
    for old in os.listdir(comp_dir):
        os.remove(os.path.join(comp_dir, old))
    for name, (inputs, rows) in COMPONENTS.items():
        with open(os.path.join(comp_dir, name + ".fsm"), "w") as f:
            f.write("inputs " + " ".join(inputs) + "\n")
            f.write("initial s0\n")
            for src, sym, out, dst in rows:
                f.write(f"s{src} {sym} / {out} -> s{dst}\n")


if __name__ == "__main__":
    main()
