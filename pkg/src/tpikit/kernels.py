"""Hot numeric kernels.

Every kernel has two paths: a numba-compiled one and a numpy/Python one.
``TPIKIT_DISABLE_NUMBA=1`` selects the fallback for the whole process; both
paths are importable by name so benchmarks and tests can compare them.

Units: layout kernels take glyph metrics in integer font units and a float
``scale`` (pixels per unit). A line's measured width is
``(max(advance, ink_right) - min(0, ink_left)) * scale``.
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, compile_kernel, prange


# --------------------------------------------------------------------------
# greedy line breaking
# --------------------------------------------------------------------------


def _greedy_wrap_impl(word_start, char_adv, char_kern, char_xmin, char_xmax, join,
                      scale, max_w,
                      out_start, out_end, out_broken, out_adv, out_inkr, out_inkl):
    n_words = len(word_start) - 1
    n_lines = 0
    overflow = False
    open_line = False
    line_s = 0
    line_e = 0
    adv = 0
    inkr = 0
    inkl = 0
    for w in range(n_words):
        s = word_start[w]
        e = word_start[w + 1]
        # whole-word metrics, relative to the word's own origin
        wadv = 0
        wr = 0
        wl = 0
        pen = 0
        for k in range(s, e):
            r = pen + char_xmax[k]
            if r > wr:
                wr = r
            lft = pen + char_xmin[k]
            if lft < wl:
                wl = lft
            wadv = pen + char_adv[k]
            pen = wadv + char_kern[k]
        if open_line:
            start = adv + join[w]
            nadv = start + wadv
            nr = inkr if inkr > start + wr else start + wr
            nl = inkl if inkl < start + wl else start + wl
            hi = nadv if nadv > nr else nr
            lo = nl if nl < 0 else 0
            if (hi - lo) * scale <= max_w:
                adv = nadv
                inkr = nr
                inkl = nl
                line_e = e
                continue
            out_start[n_lines] = line_s
            out_end[n_lines] = line_e
            out_broken[n_lines] = 0
            out_adv[n_lines] = adv
            out_inkr[n_lines] = inkr
            out_inkl[n_lines] = inkl
            n_lines += 1
            open_line = False
        hi = wadv if wadv > wr else wr
        lo = wl if wl < 0 else 0
        if (hi - lo) * scale <= max_w:
            open_line = True
            line_s = s
            line_e = e
            adv = wadv
            inkr = wr
            inkl = wl
            continue
        # oversized word: break at the largest character prefix that fits
        i = s
        while i < e:
            pen = 0
            fadv = 0
            fr = 0
            fl = 0
            k = i
            while k < e:
                r2 = fr if fr > pen + char_xmax[k] else pen + char_xmax[k]
                l2 = fl if fl < pen + char_xmin[k] else pen + char_xmin[k]
                a2 = pen + char_adv[k]
                hi = a2 if a2 > r2 else r2
                lo = l2 if l2 < 0 else 0
                if (hi - lo) * scale > max_w:
                    break
                fr = r2
                fl = l2
                fadv = a2
                pen = a2 + char_kern[k]
                k += 1
            if k == i:
                # a single glyph wider than the line; place it alone
                overflow = True
                fadv = char_adv[i]
                fr = char_xmax[i] if char_xmax[i] > 0 else 0
                fl = char_xmin[i] if char_xmin[i] < 0 else 0
                k = i + 1
            if k < e:
                out_start[n_lines] = i
                out_end[n_lines] = k
                out_broken[n_lines] = 1
                out_adv[n_lines] = fadv
                out_inkr[n_lines] = fr
                out_inkl[n_lines] = fl
                n_lines += 1
            else:
                open_line = True
                line_s = i
                line_e = e
                adv = fadv
                inkr = fr
                inkl = fl
            i = k
    if open_line:
        out_start[n_lines] = line_s
        out_end[n_lines] = line_e
        out_broken[n_lines] = 0
        out_adv[n_lines] = adv
        out_inkr[n_lines] = inkr
        out_inkl[n_lines] = inkl
        n_lines += 1
    return n_lines, overflow


_greedy_wrap_nb = compile_kernel(_greedy_wrap_impl)


def greedy_wrap_numba(word_start, char_adv, char_kern, char_xmin, char_xmax, join, scale, max_w):
    n = max(len(char_adv), 1)
    outs = [np.zeros(n, dtype=np.int64) for _ in range(6)]
    n_lines, overflow = _greedy_wrap_nb(word_start, char_adv, char_kern, char_xmin, char_xmax, join,
                                        float(scale), float(max_w), *outs)
    return n_lines, bool(overflow), [o[:n_lines] for o in outs]


def greedy_wrap_python(word_start, char_adv, char_kern, char_xmin, char_xmax, join, scale, max_w):
    n = max(len(char_adv), 1)
    outs = [[0] * n for _ in range(6)]
    n_lines, overflow = _greedy_wrap_impl(
        word_start.tolist(), char_adv.tolist(), char_kern.tolist(), char_xmin.tolist(),
        char_xmax.tolist(), join.tolist(), float(scale), float(max_w), *outs)
    return n_lines, bool(overflow), [np.asarray(o[:n_lines], dtype=np.int64) for o in outs]


# --------------------------------------------------------------------------
# glyph compositing
# --------------------------------------------------------------------------


def _blit_max_impl(cov, atlas, g_off, g_w, g_h, ids, xs, ys):
    H, W = cov.shape
    for p in range(ids.shape[0]):
        g = ids[p]
        off = g_off[g]
        w = g_w[g]
        h = g_h[g]
        x0 = xs[p]
        y0 = ys[p]
        for r in range(h):
            y = y0 + r
            if y < 0 or y >= H:
                continue
            base = off + r * w
            for c in range(w):
                x = x0 + c
                if x < 0 or x >= W:
                    continue
                v = atlas[base + c]
                if v > cov[y, x]:
                    cov[y, x] = v


_blit_max_nb = compile_kernel(_blit_max_impl)


def blit_max_numba(cov, atlas, g_off, g_w, g_h, ids, xs, ys):
    _blit_max_nb(cov, atlas, g_off, g_w, g_h, ids, xs, ys)


def blit_max_numpy(cov, atlas, g_off, g_w, g_h, ids, xs, ys):
    H, W = cov.shape
    for g, x0, y0 in zip(ids.tolist(), xs.tolist(), ys.tolist()):
        w = int(g_w[g])
        h = int(g_h[g])
        if w == 0 or h == 0:
            continue
        xa, ya = max(x0, 0), max(y0, 0)
        xb, yb = min(x0 + w, W), min(y0 + h, H)
        if xa >= xb or ya >= yb:
            continue
        off = int(g_off[g])
        mask = atlas[off:off + w * h].reshape(h, w)
        dst = cov[ya:yb, xa:xb]
        np.maximum(dst, mask[ya - y0:yb - y0, xa - x0:xb - x0], out=dst)


# --------------------------------------------------------------------------
# longest common subsequence
# --------------------------------------------------------------------------


def _lcs_impl(a, b):
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    row = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        diag = 0
        ai = a[i]
        for j in range(m):
            up = row[j + 1]
            if ai == b[j]:
                row[j + 1] = diag + 1
            elif row[j] > up:
                row[j + 1] = row[j]
            diag = up
    return row[m]


_lcs_nb = compile_kernel(_lcs_impl)


def _scan_impl(cand, flat, offsets, out_lcs):
    n = offsets.shape[0] - 1
    for t in prange(n):
        out_lcs[t] = _lcs_nb(cand, flat[offsets[t]:offsets[t + 1]])


_scan_nb = compile_kernel(_scan_impl, parallel=True) if NUMBA_ENABLED else None


def lcs_length_numba(a, b) -> int:
    return int(_lcs_nb(a, b))


def lcs_length_numpy(a, b) -> int:
    """Row-vectorised DP: ``row_i = cummax(max(row_{i-1}, shift(row_{i-1}) + match))``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        return 0
    row = np.zeros(b.size + 1, dtype=np.int64)
    for ai in a.tolist():
        cand = np.maximum(row[1:], row[:-1] + (b == ai))
        row[1:] = np.maximum.accumulate(cand)
    return int(row[-1])


def lcs_scan_numba(cand, flat, offsets):
    out = np.zeros(offsets.shape[0] - 1, dtype=np.int64)
    if out.size:
        _scan_nb(cand, flat, offsets, out)
    return out


def lcs_scan_numpy(cand, flat, offsets):
    off = offsets.tolist()
    return np.array([lcs_length_numpy(cand, flat[off[t]:off[t + 1]]) for t in range(len(off) - 1)],
                    dtype=np.int64)


if NUMBA_ENABLED:
    greedy_wrap = greedy_wrap_numba
    blit_max = blit_max_numba
    lcs_length = lcs_length_numba
    lcs_scan = lcs_scan_numba
else:
    greedy_wrap = greedy_wrap_python
    blit_max = blit_max_numpy
    lcs_length = lcs_length_numpy
    lcs_scan = lcs_scan_numpy
