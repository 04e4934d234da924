"""Print the factorization condition systems for every template.

Usage:
    python3 scripts/condition_catalog.py [--m M] [--json] [template ...]

Without arguments all eight templates are printed with m = 2 for the
system kinds and m = 1 otherwise.
"""

import argparse
import json
import sys

from opfactor.conditions import TEMPLATES, derive_conditions, render_condition_system
from opfactor.expr import render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("templates", nargs="*", default=None,
                    help="template ids (default: all)")
    ap.add_argument("--m", type=int, default=None,
                    help="components for system templates (default 2)")
    ap.add_argument("--json", action="store_true", dest="as_json")
    args = ap.parse_args(argv)

    names = args.templates or list(TEMPLATES)
    for name in names:
        if name not in TEMPLATES:
            print(f"unknown template {name!r}; choose from {', '.join(TEMPLATES)}",
                  file=sys.stderr)
            return 2

    docs = []
    for name in names:
        m = args.m if args.m is not None else (2 if name.endswith("system") else 1)
        system = derive_conditions(name, m=m)
        if args.as_json:
            docs.append({
                "template": name,
                "n": system.n,
                "m": system.m,
                "equations": [
                    {"lhs": render(eq.lhs), "rhs": render(eq.rhs),
                     "zero_condition": eq.is_zero_condition,
                     **({"block": eq.block} if eq.block else {})}
                    for eq in system.equations
                ],
            })
        else:
            print(render_condition_system(system))
            print()
    if args.as_json:
        print(json.dumps({"schema": 1, "systems": docs}, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
