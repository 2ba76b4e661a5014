"""Command-line entry point: ``tpikit <subcommand> ...``.

Settings come from an optional TOML file (``--config``) with sections
``[layout]``, ``[endpoint]``, ``[augment]`` and ``[paths]`` plus a top-level
``workers`` key. Command-line flags override the file.

Exit codes: 0 ok, 2 configuration error, 3 input error, 4 transport error,
5 partial failure (failed records are listed in a ``.failures.jsonl`` sidecar).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import statistics
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import tomli

from . import __version__
from ._accel import NUMBA_ENABLED
from .augment import DEFAULT_THRESHOLD, MODES, CHECKPOINT_EVERY, run_self_instruct
from .dataset_io import (read_distribution, read_manifest, read_matrix, read_vqa_jsonl,
                         write_jsonl, write_training_set, write_vqa_jsonl)
from .errors import (ConfigError, ContentError, DegenerateMatrixError, InputError,
                     TransportError, UndefinedRatioError)
from .llm import prompts
from .llm.client import ChatClient, EndpointConfig
from .metrics import gap_ratio, js_divergence, linear_cka, rouge_l_f1, tokenize
from .render import BatchIOError, LayoutParams, render_batch
from .render.batch import default_workers
from .render.png import DEFAULT_COMPRESS_LEVEL
from .synth import lorem_corpus

log = logging.getLogger("tpikit")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_TRANSPORT, EXIT_PARTIAL = 0, 2, 3, 4, 5
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
CONFIG_SECTIONS = {"layout", "endpoint", "augment", "paths", "workers"}
AUGMENT_KEYS = {"iterations", "threshold", "rng_seed", "mode", "checkpoint_every", "temperature"}
PATH_KEYS = {"input", "out_dir", "manifest"}
PROGRESS_EVERY = 100


# --------------------------------------------------------------------------
# logging
# --------------------------------------------------------------------------

_RECORD_ATTRS = set(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}


class JsonLineFormatter(logging.Formatter):
    def format(self, record):
        out = {"ts": round(record.created, 3), "level": record.levelname.lower(),
               "logger": record.name, "msg": record.getMessage()}
        out.update({k: v for k, v in vars(record).items() if k not in _RECORD_ATTRS})
        if record.exc_info:
            out["exc"] = self.formatException(record.exc_info)
        return json.dumps(out, default=str)


def setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(LOG_LEVELS[level])
    logging.getLogger("httpx").setLevel(max(logging.WARNING, LOG_LEVELS[level]))
    logging.getLogger("httpcore").setLevel(logging.WARNING)


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(data) - CONFIG_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, keys in (("augment", AUGMENT_KEYS), ("paths", PATH_KEYS)):
        extra = set(data.get(section, {})) - keys
        if extra:
            raise ConfigError(f"unknown [{section}] keys: {sorted(extra)}")
    if "api_key" in data.get("endpoint", {}):
        raise ConfigError("API keys are read from the environment only; remove endpoint.api_key")
    return data


def _pick(flag, section: dict, key: str, default=None):
    if flag is not None:
        return flag
    return section.get(key, default)


def layout_from(args, cfg: dict) -> LayoutParams:
    layout = dict(cfg.get("layout", {}))
    if getattr(args, "font_size", None) is not None:
        layout["default_font_size_pt"] = layout["min_font_size_pt"] = args.font_size
    for flag, key in (("max_font_size", "default_font_size_pt"), ("min_font_size", "min_font_size_pt"),
                      ("color", "text_color"), ("background", "background_color"),
                      ("width", "canvas_width_px"), ("height", "canvas_height_px"),
                      ("padding", "padding_px"), ("line_spacing", "line_spacing_px")):
        value = getattr(args, flag, None)
        if value is not None:
            layout[key] = value
    return LayoutParams.from_dict(layout)


def endpoint_from(args, cfg: dict) -> EndpointConfig:
    ep = dict(cfg.get("endpoint", {}))
    for flag, key in (("base_url", "base_url"), ("model", "model"), ("timeout", "timeout_s"),
                      ("max_retries", "max_retries"), ("max_in_flight", "max_in_flight")):
        value = getattr(args, flag, None)
        if value is not None:
            ep[key] = value
    if "base_url" not in ep or "model" not in ep:
        raise ConfigError("endpoint base_url and model are required (--base-url/--model or [endpoint])")
    try:
        return EndpointConfig(**ep)
    except TypeError as exc:
        raise ConfigError(f"bad [endpoint] settings: {exc}") from None


def workers_from(args, cfg: dict) -> int:
    w = _pick(getattr(args, "workers", None), cfg, "workers", default_workers())
    if not isinstance(w, int) or w < 1:
        raise ConfigError(f"workers must be a positive integer, got {w!r}")
    return w


def _need_path(value, what: str) -> Path:
    if value is None:
        raise ConfigError(f"{what} is required")
    return Path(value)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_run_metadata(path, command: str, config: dict, seed=None, **extra) -> dict:
    """Everything needed to reproduce an output; no timestamps so reruns are byte-identical."""
    meta = {
        "command": command,
        "tpikit_version": __version__,
        "config": config,
        "config_hash": config_hash(config),
        "prompt_version": prompts.PROMPT_VERSION,
        "prompt_sha256": prompts.fingerprints(),
        "seed": seed,
        **extra,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return meta


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.name + suffix)


# --------------------------------------------------------------------------
# per-record fan-out for endpoint commands
# --------------------------------------------------------------------------


def resolve_image(record, images_dir, input_path: Path) -> str:
    ref = record.image_path
    if not ref:
        raise InputError(f"record {record.id!r} has no image")
    if ref.startswith(("http://", "https://", "data:")) or Path(ref).is_absolute():
        return ref
    if images_dir and images_dir.startswith(("http://", "https://")):
        return images_dir.rstrip("/") + "/" + ref
    base = Path(images_dir) if images_dir else input_path.parent
    return str(base / ref)


def map_records(fn, records, workers: int):
    """Apply ``fn`` in parallel, keeping input order. Returns (results, failures)."""
    results = [None] * len(records)
    failures = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, r) for r in records]
        for i, (rec, fut) in enumerate(zip(records, futures)):
            try:
                results[i] = fut.result()
            except (ContentError, TransportError, InputError) as exc:
                failures.append({"id": rec.id, "error_type": type(exc).__name__, "error": str(exc)})
            if (i + 1) % PROGRESS_EVERY == 0:
                log.info("progress", extra={"done": i + 1, "total": len(records), "failed": len(failures)})
    return results, failures


def finish_partial(out: Path, failures, total: int) -> int:
    if not failures:
        return EXIT_OK
    side = _sidecar(out, ".failures.jsonl")
    write_jsonl(failures, side)
    log.error("records failed", extra={"failed": len(failures), "total": total, "sidecar": str(side)})
    if len(failures) == total and all(f["error_type"] == "TransportError" for f in failures):
        return EXIT_TRANSPORT
    return EXIT_PARTIAL


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_render(args, cfg) -> int:
    paths = cfg.get("paths", {})
    params = layout_from(args, cfg)
    workers = workers_from(args, cfg)
    src = _need_path(_pick(args.input, paths, "input"), "--input")
    out_dir = _need_path(_pick(args.out, paths, "out_dir"), "--out")
    manifest = _pick(args.manifest, paths, "manifest")
    records = read_vqa_jsonl(src)
    empty = [r.id for r in records if not r.description.strip()]
    if empty:
        raise InputError(f"{len(empty)} record(s) have no description to render: {empty[:20]}", path=src)
    config = {"layout": params.to_dict(), "input": str(src), "out_dir": str(out_dir),
              "manifest": str(manifest) if manifest else None, "compress_level": args.compress_level}
    try:
        result = render_batch([(r.id, r.description) for r in records], params, workers, out_dir,
                              manifest_path=manifest, compress_level=args.compress_level)
    except BatchIOError as exc:
        side = out_dir / "manifest.failures.jsonl"
        write_jsonl([{"id": exc.failed_id, "error_type": "OSError", "error": str(exc)}], side)
        log.error("render stopped", extra={"written": len(exc.rows), "sidecar": str(side)})
        return EXIT_PARTIAL
    write_run_metadata(out_dir / "run.json", "render", config, workers=workers)
    print(result.summary())
    return EXIT_OK


def cmd_bench(args, cfg) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    if args.repeat < 1:
        raise ConfigError("--repeat must be >= 1")
    params = layout_from(args, cfg)
    workers = workers_from(args, cfg)
    corpus = lorem_corpus(args.n, args.seed)
    with tempfile.TemporaryDirectory() as warm:
        render_batch(corpus[:8], params, 1, warm, progress_every=0)  # JIT and glyph caches

    runs, digests = [], set()
    for w in sorted({1, workers}):
        times = []
        for _ in range(args.repeat):
            with tempfile.TemporaryDirectory() as d:
                m = render_batch(corpus, params, w, d, compress_level=args.compress_level, progress_every=0)
                times.append(m.wall_time_s)
                digests.add(output_digest(Path(d), m.rows))
        best, med = min(times), statistics.median(times)
        run = {"workers": w, "min_s": best, "median_s": med,
               "img_per_s_median": args.n / med, "img_per_s_best": args.n / best}
        runs.append(run)
        print(f"workers={w}: {args.n} images, {med:.2f} seconds, {args.n / med:.2f} img/s "
              f"(best {args.n / best:.2f} img/s over {args.repeat} repeat(s))")
    report = {"n": args.n, "repeat": args.repeat, "seed": args.seed, "numba": NUMBA_ENABLED,
              "layout": params.to_dict(), "runs": runs, "identical_output": len(digests) == 1}
    print(f"identical output across runs: {report['identical_output']}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        write_run_metadata(_sidecar(out, ".run.json"), "bench",
                           {"n": args.n, "repeat": args.repeat, "workers": workers,
                            "layout": params.to_dict()}, seed=args.seed)
    return EXIT_OK


def output_digest(out_dir: Path, rows) -> str:
    h = hashlib.sha256()
    for row in rows:
        h.update(json.dumps(row, sort_keys=True).encode("utf-8"))
        h.update((out_dir / row["image"]).read_bytes())
    return h.hexdigest()


def cmd_describe(args, cfg) -> int:
    paths = cfg.get("paths", {})
    ep = endpoint_from(args, cfg)
    workers = workers_from(args, cfg)
    src = _need_path(_pick(args.input, paths, "input"), "--input")
    out = _need_path(args.out, "--out")
    if args.variant not in prompts.DESCRIBE_VARIANTS:
        raise ConfigError(f"unknown --variant {args.variant!r}")
    records = read_vqa_jsonl(src)
    meta = {"prompt_variant": args.variant, "prompt_version": prompts.PROMPT_VERSION, "model": ep.model}

    with ChatClient(ep) as client:
        def describe(rec):
            image = resolve_image(rec, args.images, src)
            text = client.generate_description(image, rec.question, rec.answer, args.variant)
            return replace(rec, description=text, extra={**rec.extra, "description_meta": meta})

        results, failures = map_records(describe, records, workers)
        stats = {"requests": client.stats.requests, "retries": client.stats.retries}
    write_vqa_jsonl([r for r in results if r is not None], out)
    config = {"endpoint": ep.public_dict(), "input": str(src), "images": args.images,
              "variant": args.variant}
    write_run_metadata(_sidecar(out, ".run.json"), "describe", config,
                       described=len(records) - len(failures), failed=len(failures), **stats)
    return finish_partial(out, failures, len(records))


def cmd_score(args, cfg) -> int:
    paths = cfg.get("paths", {})
    ep = endpoint_from(args, cfg)
    workers = workers_from(args, cfg)
    src = _need_path(_pick(args.input, paths, "input"), "--input")
    out = _need_path(args.out, "--out")
    if args.phrasing not in prompts.RELEVANCE_PHRASINGS:
        raise ConfigError(f"unknown --phrasing {args.phrasing!r}")
    records = read_vqa_jsonl(src)

    with ChatClient(ep) as client:
        def score(rec):
            image = resolve_image(rec, args.images, src)
            return client.relevance_score(image, rec.question, rec.answer, args.phrasing)

        results, failures = map_records(score, records, workers)
        stats = {"requests": client.stats.requests, "retries": client.stats.retries}
    rows = [{"id": rec.id, **res.to_json()} for rec, res in zip(records, results) if res is not None]
    write_jsonl(rows, out)
    scores = [r["score"] for r in rows]
    summary = {"mean": statistics.fmean(scores) if scores else None, "count": len(scores),
               "failed": len(failures),
               "methods": {m: sum(r["method"] == m for r in rows) for m in ("logprob", "sampled_fallback")}}
    config = {"endpoint": ep.public_dict(), "input": str(src), "images": args.images,
              "phrasing": args.phrasing, "score": "p_yes / (p_yes + p_no)"}
    write_run_metadata(_sidecar(out, ".run.json"), "score", config, summary=summary, **stats)
    print(json.dumps(summary))
    return finish_partial(out, failures, len(records))


def cmd_augment(args, cfg) -> int:
    paths = cfg.get("paths", {})
    aug = cfg.get("augment", {})
    ep = endpoint_from(args, cfg)
    seeds_path = _need_path(_pick(args.seeds, paths, "input"), "--seeds")
    out = _need_path(args.out, "--out")
    iterations = _pick(args.iterations, aug, "iterations")
    if iterations is None:
        raise ConfigError("--iterations is required")
    threshold = float(_pick(args.threshold, aug, "threshold", DEFAULT_THRESHOLD))
    rng_seed = _pick(args.seed, aug, "rng_seed", 0)
    mode = _pick(args.mode, aug, "mode", "online")
    every = _pick(args.checkpoint_every, aug, "checkpoint_every", CHECKPOINT_EVERY)
    temperature = float(_pick(args.temperature, aug, "temperature", 0.7))
    ckpt = args.resume or args.checkpoint_dir
    seeds = read_vqa_jsonl(seeds_path)

    # settings that must match for a resumed run to continue the same trajectory
    resume_key = {"threshold": threshold, "mode": mode, "rng_seed": rng_seed, "temperature": temperature,
                  "model": ep.model, "seeds_sha256": hashlib.sha256(seeds_path.read_bytes()).hexdigest(),
                  "prompt_sha256": prompts.fingerprints()}
    if args.resume:
        prior = Path(args.resume) / "run.json"
        if prior.exists():
            old = json.loads(prior.read_text(encoding="utf-8")).get("resume_hash")
            if old != config_hash(resume_key):
                raise ConfigError(f"{args.resume} was written with different settings; refusing to resume")
    config = {"endpoint": ep.public_dict(), "seeds": str(seeds_path), "iterations": iterations,
              "threshold": threshold, "mode": mode, "checkpoint_every": every,
              "checkpoint_dir": str(ckpt) if ckpt else None, "temperature": temperature}
    if ckpt:
        write_run_metadata(Path(ckpt) / "run.json", "augment", config, seed=rng_seed,
                           resume_hash=config_hash(resume_key))
    log.info("augment start", extra={"threshold": threshold, "mode": mode, "iterations": iterations})

    with ChatClient(ep) as client:
        pool = run_self_instruct(
            seeds, iterations, threshold,
            generator=lambda demos: client.generate_augmented_example(demos, temperature),
            rng_seed=rng_seed, mode=mode, checkpoint_dir=ckpt, checkpoint_every=every,
            resume=bool(args.resume))
        requests, retries = client.stats.requests, client.stats.retries
    write_vqa_jsonl(pool.records, out)
    stats = vars(pool.stats).copy()
    _sidecar(out, ".stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    write_run_metadata(_sidecar(out, ".run.json"), "augment", config, seed=rng_seed,
                       stats=stats, requests=requests, retries=retries)
    print(json.dumps({"pool": len(pool), **stats}))
    return EXIT_OK


def cmd_build_trainset(args, cfg) -> int:
    paths = cfg.get("paths", {})
    src = _need_path(_pick(args.input, paths, "input"), "--input")
    manifest_path = _need_path(_pick(args.manifest, paths, "manifest"), "--manifest")
    out = _need_path(args.out, "--out")
    records = []
    for p in [src, *args.extra]:
        records.extend(read_vqa_jsonl(p))
    rows = read_manifest(manifest_path)
    root = Path(args.image_root) if args.image_root is not None else manifest_path.parent
    rows = [{**r, "image": str(root / r["image"])} for r in rows]
    summary = write_training_set(records, rows, out)
    write_run_metadata(_sidecar(out, ".run.json"), "build-trainset",
                       {"inputs": [str(p) for p in [src, *args.extra]], "manifest": str(manifest_path),
                        "image_root": str(root)}, summary=summary)
    print(json.dumps(summary))
    return EXIT_OK


def _report(args, metric: str, inputs: dict, value, params: dict, text: str) -> int:
    report = {"metric": metric, "inputs": inputs, "value": value, "params": params}
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        write_run_metadata(_sidecar(out, ".run.json"), f"analyze {metric}", {"inputs": inputs, "params": params})
    print(json.dumps(report) if args.json else text)
    return EXIT_OK


def _read_text_arg(value: str | None, path: str | None, what: str) -> str:
    if path is not None:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {what}: {exc}", path=path) from None
    if value is None:
        raise ConfigError(f"--{what} or --{what}-file is required")
    return value


def cmd_analyze(args, cfg) -> int:
    kind = args.metric
    if kind == "rouge":
        a = _read_text_arg(args.a, args.a_file, "a")
        b = _read_text_arg(args.b, args.b_file, "b")
        value = rouge_l_f1(tokenize(a), tokenize(b))
        inputs = {"a": args.a_file or a, "b": args.b_file or b}
        return _report(args, "rouge_l_f1", inputs, value, {"tokenizer": "lowercase letter/digit runs"},
                       str(round(value, 6)))
    if kind == "cka":
        x, y = read_matrix(args.x), read_matrix(args.y)
        value = linear_cka(x, y)
        inputs = {"x": args.x, "y": args.y, "x_shape": list(x.shape), "y_shape": list(y.shape)}
        return _report(args, "linear_cka", inputs, value, {"centered": True}, str(round(value, 6)))
    if kind == "jsd":
        p, q = read_distribution(args.p), read_distribution(args.q)
        value = js_divergence(p, q, args.base)
        return _report(args, "js_divergence", {"p": args.p, "q": args.q}, value,
                       {"log_base": args.base}, str(round(value, 6)))
    if kind == "gap-ratio":
        g = gap_ratio(args.pre, args.tpi, args.gt)
        return _report(args, "gap_ratio", {"pretrained": args.pre, "tpi": args.tpi, "gt_image": args.gt},
                       g.value, {"rounding": "half-up", "percent": g.percent}, f"{g.percent}%")
    raise ConfigError(f"unknown metric {kind!r}")


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--log-level", choices=sorted(LOG_LEVELS), default="info")


def _layout_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("layout")
    g.add_argument("--font-size", type=int, help="render at this fixed size (disables the size search)")
    g.add_argument("--max-font-size", type=int, help="largest size tried (default 32)")
    g.add_argument("--min-font-size", type=int, help="smallest size tried (default 4)")
    g.add_argument("--color", help="text color: name, #rrggbb or r,g,b")
    g.add_argument("--background", help="background color")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--padding", type=int)
    g.add_argument("--line-spacing", type=int)
    g.add_argument("--compress-level", type=int, default=DEFAULT_COMPRESS_LEVEL, choices=range(10),
                   metavar="0-9", help="PNG zlib level")


def _endpoint_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("endpoint (API key from $TPI_API_KEY)")
    g.add_argument("--base-url")
    g.add_argument("--model")
    g.add_argument("--timeout", type=float)
    g.add_argument("--max-retries", type=int)
    g.add_argument("--max-in-flight", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpikit", description="Build and analyze text-printed image datasets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render descriptions to PNG images")
    _common(p)
    p.add_argument("--input", help="VQA JSONL with descriptions")
    p.add_argument("--out", help="output directory for PNGs")
    p.add_argument("--manifest", help="manifest path (default <out>/manifest.jsonl)")
    p.add_argument("--workers", type=int)
    _layout_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="measure rendering throughput on synthetic text")
    _common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help="multi-worker count compared against 1 worker")
    p.add_argument("--out", help="write the JSON report here")
    _layout_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("describe", help="generate descriptions from GT images")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--images", help="directory or URL prefix that relative image paths resolve against")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", default="default", choices=sorted(prompts.DESCRIBE_VARIANTS))
    p.add_argument("--workers", type=int)
    _endpoint_flags(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("score", help="relevance score of images to their QA pairs")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--images")
    p.add_argument("--out", required=True)
    p.add_argument("--phrasing", default="system", choices=sorted(prompts.RELEVANCE_PHRASINGS))
    p.add_argument("--workers", type=int)
    _endpoint_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("augment", help="grow a seed set with generated examples")
    _common(p)
    p.add_argument("--seeds")
    p.add_argument("--out", required=True, help="final pool JSONL")
    p.add_argument("--iterations", type=int)
    p.add_argument("--threshold", type=float, help=f"ROUGE-L rejection threshold (default {DEFAULT_THRESHOLD})")
    p.add_argument("--seed", type=int, help="RNG seed for demo sampling")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--temperature", type=float)
    p.add_argument("--checkpoint-dir")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--resume", metavar="CKPT", help="resume from this checkpoint directory")
    _endpoint_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("build-trainset", help="join records and rendered images into training rows")
    _common(p)
    p.add_argument("--input", help="records JSONL (seed or augmented pool)")
    p.add_argument("--extra", nargs="*", default=[], help="more record files to include")
    p.add_argument("--manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--image-root", help="prefix for image paths (default: the manifest's directory)")
    p.set_defaults(func=cmd_build_trainset)

    p = sub.add_parser("analyze", help="compute a metric and print a JSON report")
    msub = p.add_subparsers(dest="metric", required=True)
    for name, help_ in (("rouge", "ROUGE-L F1 between two texts"), ("cka", "linear CKA of two matrices"),
                        ("jsd", "Jensen-Shannon divergence"), ("gap-ratio", "gap ratio from three scores")):
        m = msub.add_parser(name, help=help_)
        _common(m)
        m.add_argument("--out", help="write the JSON report here")
        m.add_argument("--json", action="store_true", help="print the full report instead of the value")
        m.set_defaults(func=cmd_analyze)
        if name == "rouge":
            m.add_argument("--a")
            m.add_argument("--b")
            m.add_argument("--a-file")
            m.add_argument("--b-file")
        elif name == "cka":
            m.add_argument("--x", required=True, help="TPIM or CSV matrix")
            m.add_argument("--y", required=True)
        elif name == "jsd":
            m.add_argument("--p", required=True, help="JSON distribution")
            m.add_argument("--q", required=True)
            m.add_argument("--base", type=float, default=2.0)
        else:
            m.add_argument("--pre", type=float, required=True)
            m.add_argument("--tpi", type=float, required=True)
            m.add_argument("--gt", type=float, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        log.error(str(exc), extra={"error_type": "ConfigError"})
        return EXIT_CONFIG
    except (InputError, UndefinedRatioError, DegenerateMatrixError, OSError) as exc:
        log.error(str(exc), extra={"error_type": type(exc).__name__})
        return EXIT_INPUT
    except TransportError as exc:
        log.error(str(exc), extra={"error_type": "TransportError"})
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
