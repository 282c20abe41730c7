"""Compare the compiled and pure-Python kernels on generated prefixes.

    python benchmarks/bench_passes.py [--events 2000 5000 10000] [--repeat 3]

Both backends must produce identical rows; the script checks that before
printing timings.
"""

import argparse
import time

import numpy as np

from revelio import _backend
from revelio.fixtures import buffer_chain_net, philosophers_net
from revelio.reveals import reveals_all
from revelio.unfold import CutoffPolicy, unfold

NETS = {
    "buffer100": lambda: buffer_chain_net(100),
    "phil6": lambda: philosophers_net(6),
}


def best_of(occ, backend, repeat, threads):
    best = None
    for _ in range(repeat):
        m = reveals_all(occ, backend=backend, threads=threads)
        if best is None or sum(m.timings.values()) < sum(best.timings.values()):
            best = m
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, nargs="+", default=[1000, 3000, 10000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--nets", nargs="+", default=list(NETS))
    args = ap.parse_args()

    backends = ["python"] + (["compiled"] if _backend.compiled is not None else [])
    print(f"{'net':<10}{'events':>8}  {'backend':<9}{'post':>9}{'conf':>9}{'rev':>9}{'total':>9}{'speedup':>9}")
    for name in args.nets:
        net = NETS[name]()
        for n in args.events:
            t = time.perf_counter()
            occ = unfold(net, CutoffPolicy.event_bound(n)).occ
            build = time.perf_counter() - t
            results = {b: best_of(occ, b, args.repeat, args.threads) for b in backends}
            ref = results["python"]
            for b, m in results.items():
                assert np.array_equal(m.rev, ref.rev) and np.array_equal(m.conf, ref.conf), f"{b} differs"
            base = sum(ref.timings.values())
            for b, m in results.items():
                tm = m.timings
                total = sum(tm.values())
                print(
                    f"{name:<10}{occ.num_events:>8}  {b:<9}{tm['post']:>9.4f}{tm['conf']:>9.4f}"
                    f"{tm['rev']:>9.4f}{total:>9.4f}{base / total:>8.1f}x"
                )
            print(f"{'':<10}{'':>8}  (unfold {build:.2f}s)")


if __name__ == "__main__":
    main()
