"""Compare the compiled graph kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--model NAME] [--repeat R]

The kernels run on the state graph of a bundled corpus model, which is
explored once up front.  A full ``check_all`` on the same model is timed
too, once per backend, in a child process so the backend choice is made at
import.
"""

import argparse
import os
import subprocess
import sys
import timeit
from importlib.resources import files

from actdiag.checker import BACKEND, _graph_py, build_lts
from actdiag.diagram import load_diagram
from actdiag.translate import translate

END_TO_END = """
import time
from importlib.resources import files
from actdiag.checker import check_all
from actdiag.diagram import load_diagram
from actdiag.translate import translate
m = translate(load_diagram(files("actdiag") / "corpus" / "{name}.json"))
t = time.perf_counter()
check_all(m)
print(time.perf_counter() - t)
"""


def kernels(mod, g, n):
    off, lab, tgt, term = g
    return {
        "bfs": lambda: mod.bfs(off, lab, tgt, n, 0),
        "sinks": lambda: mod.sinks(off, n, term),
        "tau_sccs": lambda: mod.tau_sccs(off, lab, tgt, n),
        "normalize": lambda: mod.normalize(off, lab, tgt, n, 0),
    }


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def end_to_end(name, pure):
    env = dict(os.environ)
    if pure:
        env["ACTDIAG_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(name=name)], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--model", default="c5_ecommerce_fixed", help="bundled corpus model")
    args = p.parse_args(argv)

    if BACKEND != "compiled":
        sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    from actdiag.checker import _graph

    lts = build_lts(translate(load_diagram(files("actdiag") / "corpus" / f"{args.model}.json")))
    g = (lts.offsets, lts.labels, lts.targets, lts.terminated)
    print(f"{args.model}: {lts.n} states, {lts.n_transitions} transitions", flush=True)
    print(f"{'kernel':<12}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    py, cy = kernels(_graph_py, g, lts.n), kernels(_graph, g, lts.n)
    for name in py:
        tp, tc = best(py[name], args.repeat), best(cy[name], args.repeat)
        print(f"{name:<12}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x", flush=True)

    tp, tc = end_to_end(args.model, True), end_to_end(args.model, False)
    print(f"\ncheck-all on {args.model}: python {tp:.3f}s, compiled {tc:.3f}s ({tp / tc:.2f}x)")


if __name__ == "__main__":
    main()
