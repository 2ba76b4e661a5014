"""Time each hot kernel on its numba path and its numpy/Python fallback.

    python benchmarks/bench_kernels.py --repeat 5
    python benchmarks/bench_kernels.py --end-to-end   # also renders a corpus in both modes

The end-to-end run starts a subprocess with TPIKIT_DISABLE_NUMBA=1, the same
switch users set, so it measures the real fallback configuration.
"""

import argparse
import json
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from tpikit import kernels
from tpikit._accel import NUMBA_ENABLED
from tpikit.metrics import Vocabulary, tokenize
from tpikit.render import LayoutParams, load_face
from tpikit.render.layout import _fit, _Prepared
from tpikit.render.raster import _placements
from tpikit.synth import lorem_corpus


def timeit(fn, repeat):
    fn()  # warm-up (JIT compile / caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def wrap_case(corpus, face):
    preps = [_Prepared(t, face) for _, t in corpus]
    scale = 16 / face.units_per_em

    def run(impl):
        for p in preps:
            impl(p.word_start, p.adv, p.kern, p.xmin, p.xmax, p.join, scale, 320.0)

    return {"numba": lambda: run(kernels.greedy_wrap_numba), "fallback": lambda: run(kernels.greedy_wrap_python)}


def blit_case(corpus, face):
    params = LayoutParams()
    jobs = []
    for _, text in corpus:
        layout, prep, outs = _fit(text, params, face)
        (atlas, g_off, g_w, g_h, _, _), ids, xs, ys = _placements(layout, prep, outs, face, params)
        x0, y0, x1, y1 = layout.text_bbox
        jobs.append(((y1 - y0, x1 - x0), atlas, g_off, g_w, g_h, ids, xs, ys))

    def run(impl):
        for shape, *rest in jobs:
            impl(np.zeros(shape, dtype=np.uint8), *rest)

    return {"numba": lambda: run(kernels.blit_max_numba), "fallback": lambda: run(kernels.blit_max_numpy)}


def scan_case(corpus):
    vocab = Vocabulary()
    seqs = [vocab.encode(tokenize(t)) for _, t in corpus]
    flat = np.concatenate(seqs)
    offsets = np.cumsum([0] + [len(s) for s in seqs]).astype(np.int64)
    cand = seqs[0]
    return {"numba": lambda: kernels.lcs_scan_numba(cand, flat, offsets),
            "fallback": lambda: kernels.lcs_scan_numpy(cand, flat, offsets)}


def end_to_end(n, seed):
    code = ("import json,sys,tempfile;from tpikit.render import render_batch;from tpikit.synth import lorem_corpus;"
            "from tpikit._accel import NUMBA_ENABLED;c=lorem_corpus(%d,%d);"
            "d=tempfile.mkdtemp();render_batch(c[:10],None,1,d,progress_every=0);"
            "m=render_batch(c,None,1,tempfile.mkdtemp(),progress_every=0);"
            "print(json.dumps({'numba':NUMBA_ENABLED,'img_per_s':m.images_per_sec}))") % (n, seed)
    out = {}
    for label, flag in (("numba", "0"), ("fallback", "1")):
        env = dict(os.environ, TPIKIT_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[label] = json.loads(res.stdout)["img_per_s"]
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=200, help="descriptions per kernel run")
    ap.add_argument("--pool", type=int, default=2000, help="pool size for the LCS scan")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--end-to-end", action="store_true")
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args()

    if not NUMBA_ENABLED:
        sys.exit("numba is disabled or missing; unset TPIKIT_DISABLE_NUMBA to compare both paths")
    face = load_face()
    corpus = lorem_corpus(args.n, args.seed)
    cases = {
        "greedy_wrap": wrap_case(corpus, face),
        "blit_max": blit_case(corpus, face),
        "lcs_scan": scan_case(lorem_corpus(args.pool, args.seed + 1)),
    }
    results = {}
    print(f"{'kernel':<12} {'numba (ms)':>12} {'fallback (ms)':>14} {'speedup':>8}")
    for name, impls in cases.items():
        nb = timeit(impls["numba"], args.repeat)[1]
        fb = timeit(impls["fallback"], args.repeat)[1]
        results[name] = {"numba_s": nb, "fallback_s": fb, "speedup": fb / nb}
        print(f"{name:<12} {nb * 1e3:>12.2f} {fb * 1e3:>14.2f} {fb / nb:>7.1f}x")
    if args.end_to_end:
        e2e = end_to_end(args.n, args.seed)
        results["render_batch_img_per_s"] = e2e
        print(f"render_batch, 1 worker: numba {e2e['numba']:.1f} img/s, fallback {e2e['fallback']:.1f} img/s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
