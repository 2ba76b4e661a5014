import itertools
import json
import subprocess
import sys

import numpy as np
import pytest

from tpikit.cli import main
from tpikit.dataset_io import write_distribution, write_matrix
from tpikit.synth import lorem_corpus

from helpers import ScriptedChatServer, completion, first_token_logprobs


def write_records(path, n=6, image=True):
    rows = []
    for i, (rid, text) in enumerate(lorem_corpus(n, 8)):
        row = {"id": rid, "question": f"What is shown {i}?", "answer": f"Thing {i}", "description": text}
        if image:
            row["image"] = f"img{i}.png"
        rows.append(row)
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return rows


def read_jsonl(path):
    return [json.loads(x) for x in path.read_text().splitlines() if x.strip()]


def chat_handler():
    counter = itertools.count()

    def handler(body):
        if body.get("max_tokens") == 1:
            text = body["messages"][-1]["content"][-1]["text"]
            p = 0.8 if "0?" in text else 0.25
            return 200, completion("Yes", first_token_logprobs([("Yes", p), ("No", 1 - p)]))
        if "response_format" in body or body.get("temperature") == 0.7:
            k = next(counter)
            obj = {"question": f"fresh{k} q{k}x", "answer": f"ans{k}y", "description": f"unique{k} words{k}z"}
            return 200, completion(json.dumps(obj))
        return 200, completion("A plain caption.")

    return handler


@pytest.fixture
def server():
    with ScriptedChatServer(chat_handler()) as srv:
        yield srv


# ---------------------------------------------------------------- analyze


def test_gap_ratio_prints_percent(capsys):
    assert main(["analyze", "gap-ratio", "--pre", "39.94", "--tpi", "49.97", "--gt", "55.58"]) == 0
    assert capsys.readouterr().out.strip() == "64%"


def test_gap_ratio_json_report(tmp_path, capsys):
    out = tmp_path / "gr.json"
    assert main(["analyze", "gap-ratio", "--pre", "69.81", "--tpi", "77.94", "--gt", "80.04",
                 "--json", "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"metric", "inputs", "value", "params"}
    assert report["params"]["percent"] == 79
    assert json.loads(out.read_text()) == report
    assert (tmp_path / "gr.json.run.json").exists()


def test_gap_ratio_undefined_exits_input_error(capsys):
    assert main(["analyze", "gap-ratio", "--pre", "50", "--tpi", "60", "--gt", "50"]) == 3


def test_cka_same_matrix(tmp_path, capsys):
    m = np.random.default_rng(0).standard_normal((10, 4)).astype(np.float32)
    write_matrix(m, tmp_path / "a.tpim")
    assert main(["analyze", "cka", "--x", str(tmp_path / "a.tpim"), "--y", str(tmp_path / "a.tpim")]) == 0
    assert capsys.readouterr().out.strip() == "1.0"


def test_jsd_and_rouge(tmp_path, capsys):
    write_distribution([0.5, 0.5], tmp_path / "p.json")
    write_distribution([1.0, 0.0], tmp_path / "q.json")
    assert main(["analyze", "jsd", "--p", str(tmp_path / "p.json"), "--q", str(tmp_path / "q.json")]) == 0
    assert capsys.readouterr().out.strip() == "0.311278"
    assert main(["analyze", "rouge", "--a", "the cat sat", "--b", "The cat ran!"]) == 0
    assert capsys.readouterr().out.strip() == "0.666667"


def test_bad_matrix_exits_3(tmp_path):
    (tmp_path / "a.tpim").write_bytes(b"JUNKJUNKJUNK")
    assert main(["analyze", "cka", "--x", str(tmp_path / "a.tpim"), "--y", str(tmp_path / "a.tpim")]) == 3


# ---------------------------------------------------------------- render / bench / trainset


def test_render_and_build_trainset(tmp_path, capsys):
    write_records(tmp_path / "d.jsonl", 5)
    assert main(["render", "--input", str(tmp_path / "d.jsonl"), "--out", str(tmp_path / "out"),
                 "--workers", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("5 images, ") and out.strip().endswith("img/s")
    manifest = read_jsonl(tmp_path / "out/manifest.jsonl")
    assert len(manifest) == 5
    meta = json.loads((tmp_path / "out/run.json").read_text())
    assert {"config_hash", "prompt_version", "seed", "config"} <= set(meta)

    assert main(["build-trainset", "--input", str(tmp_path / "d.jsonl"),
                 "--manifest", str(tmp_path / "out/manifest.jsonl"), "--out", str(tmp_path / "t.jsonl")]) == 0
    rows = read_jsonl(tmp_path / "t.jsonl")
    assert rows[0]["image"] == str(tmp_path / "out" / manifest[0]["image"])
    assert rows[0]["conversations"][0]["content"].startswith("<image>\n")


def test_render_is_idempotent(tmp_path):
    write_records(tmp_path / "d.jsonl", 4)
    for d in ("a", "b"):
        assert main(["render", "--input", str(tmp_path / "d.jsonl"), "--out", str(tmp_path / d),
                     "--log-level", "error"]) == 0
    for f in (tmp_path / "a").iterdir():
        if f.name != "run.json":
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_render_fixed_size_and_color(tmp_path):
    write_records(tmp_path / "d.jsonl", 2)
    assert main(["render", "--input", str(tmp_path / "d.jsonl"), "--out", str(tmp_path / "o"),
                 "--font-size", "16", "--color", "red"]) == 0
    assert {r["font_size"] for r in read_jsonl(tmp_path / "o/manifest.jsonl")} == {16}
    meta = json.loads((tmp_path / "o/run.json").read_text())
    assert meta["config"]["layout"]["text_color"] == [255, 0, 0]


def test_render_missing_input(tmp_path, capsys):
    assert main(["render", "--input", str(tmp_path / "none.jsonl"), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["level"] == "error"


def test_render_bad_config(tmp_path):
    write_records(tmp_path / "d.jsonl", 1)
    cfg = tmp_path / "c.toml"
    cfg.write_text("[layout]\npadding_px = 500\n")
    assert main(["render", "--config", str(cfg), "--input", str(tmp_path / "d.jsonl"),
                 "--out", str(tmp_path / "o")]) == 2
    cfg.write_text("[layout]\nnot_a_key = 1\n")
    assert main(["render", "--config", str(cfg), "--input", str(tmp_path / "d.jsonl"),
                 "--out", str(tmp_path / "o")]) == 2
    cfg.write_text("[endpoint]\napi_key = 'x'\n")
    assert main(["render", "--config", str(cfg), "--input", str(tmp_path / "d.jsonl"),
                 "--out", str(tmp_path / "o")]) == 2


def test_config_file_with_flag_override(tmp_path):
    write_records(tmp_path / "d.jsonl", 2)
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'workers = 2\n[layout]\ndefault_font_size_pt = 12\nmin_font_size_pt = 12\n'
                   f'[paths]\ninput = "{tmp_path / "d.jsonl"}"\nout_dir = "{tmp_path / "o"}"\n')
    assert main(["render", "--config", str(cfg)]) == 0
    assert {r["font_size"] for r in read_jsonl(tmp_path / "o/manifest.jsonl")} == {12}
    assert main(["render", "--config", str(cfg), "--font-size", "10"]) == 0
    assert {r["font_size"] for r in read_jsonl(tmp_path / "o/manifest.jsonl")} == {10}


def test_bench_small(tmp_path, capsys):
    assert main(["bench", "--n", "20", "--repeat", "2", "--workers", "2", "--out", str(tmp_path / "b.json")]) == 0
    report = json.loads((tmp_path / "b.json").read_text())
    assert report["identical_output"] is True
    assert [r["workers"] for r in report["runs"]] == [1, 2]
    assert all(r["img_per_s_median"] > 0 for r in report["runs"])
    assert main(["bench", "--n", "0"]) == 2


def test_build_trainset_missing_ids(tmp_path):
    write_records(tmp_path / "d.jsonl", 3)
    (tmp_path / "m.jsonl").write_text(json.dumps({"id": "s000000", "image": "x.png", "font_size": 1, "lines": 1,
                                                  "truncated": False, "missing_glyphs": 0}) + "\n")
    assert main(["build-trainset", "--input", str(tmp_path / "d.jsonl"), "--manifest", str(tmp_path / "m.jsonl"),
                 "--out", str(tmp_path / "t.jsonl")]) == 3


# ---------------------------------------------------------------- endpoint commands


def test_score_against_local_server(tmp_path, server, capsys):
    write_records(tmp_path / "d.jsonl", 4)
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--input", str(tmp_path / "d.jsonl"), "--images", "https://imgs.example",
                 "--out", str(out), "--base-url", server.base_url, "--model", "m", "--workers", "3"]) == 0
    rows = read_jsonl(out)
    assert [r["id"] for r in rows] == ["s000000", "s000001", "s000002", "s000003"]
    assert rows[0]["score"] == pytest.approx(0.8) and rows[1]["score"] == pytest.approx(0.25)
    summary = json.loads(capsys.readouterr().out)
    assert summary["mean"] == pytest.approx((0.8 + 0.25 * 3) / 4)
    for req in server.requests:
        assert req["path"] == "/v1/chat/completions"
        assert req["body"]["temperature"] == 0 and req["body"]["max_tokens"] == 1


def test_score_partial_failure_writes_sidecar(tmp_path, server):
    rows = write_records(tmp_path / "d.jsonl", 3)
    rows[1].pop("image")
    (tmp_path / "d.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--input", str(tmp_path / "d.jsonl"), "--images", "https://imgs.example",
                 "--out", str(out), "--base-url", server.base_url, "--model", "m"]) == 5
    assert len(read_jsonl(out)) == 2
    fails = read_jsonl(tmp_path / "scores.jsonl.failures.jsonl")
    assert [f["id"] for f in fails] == ["s000001"]


def test_score_unreachable_endpoint_exits_4(tmp_path):
    write_records(tmp_path / "d.jsonl", 2)
    assert main(["score", "--input", str(tmp_path / "d.jsonl"), "--images", "https://imgs.example",
                 "--out", str(tmp_path / "s.jsonl"), "--base-url", "http://127.0.0.1:9/v1", "--model", "m",
                 "--max-retries", "0", "--timeout", "2"]) == 4


def test_describe_writes_descriptions(tmp_path, server):
    write_records(tmp_path / "d.jsonl", 3)
    for i in range(3):
        (tmp_path / f"img{i}.png").write_bytes(b"\x89PNG")
    out = tmp_path / "described.jsonl"
    assert main(["describe", "--input", str(tmp_path / "d.jsonl"), "--out", str(out), "--variant", "rich",
                 "--base-url", server.base_url, "--model", "m"]) == 0
    rows = read_jsonl(out)
    assert all(r["description"] == "A plain caption." for r in rows)
    assert rows[0]["description_meta"]["prompt_variant"] == "rich"
    meta = json.loads((tmp_path / "described.jsonl.run.json").read_text())
    assert meta["config"]["variant"] == "rich" and meta["prompt_version"]


def test_describe_requires_endpoint(tmp_path):
    write_records(tmp_path / "d.jsonl", 1)
    assert main(["describe", "--input", str(tmp_path / "d.jsonl"), "--out", str(tmp_path / "o.jsonl")]) == 2


def test_augment_and_resume(tmp_path, server, capsys):
    seeds = tmp_path / "seeds.jsonl"
    write_records(seeds, 10, image=False)
    out = tmp_path / "pool.jsonl"
    args = ["augment", "--seeds", str(seeds), "--out", str(out), "--iterations", "12", "--seed", "3",
            "--checkpoint-dir", str(tmp_path / "ck"), "--checkpoint-every", "5",
            "--base-url", server.base_url, "--model", "m"]
    assert main(args) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["iterations"] == 12 and summary["accepted"] == 12 and summary["pool"] == 22
    stats = json.loads((tmp_path / "pool.jsonl.stats.json").read_text())
    assert stats["accepted"] + stats["rejected_duplicate"] + stats["rejected_invalid"] == stats["iterations"]
    gen = [r for r in read_jsonl(out) if r["provenance"] == "generated"]
    assert len(gen) == 12
    for req in server.requests:
        demo_lines = req["body"]["messages"][1]["content"].split("\n\n")[1].splitlines()
        assert len(demo_lines) == 8 and len(set(demo_lines)) == 8

    # extend the same run from its checkpoint
    more = ["augment", "--seeds", str(seeds), "--out", str(out), "--iterations", "15", "--seed", "3",
            "--resume", str(tmp_path / "ck"), "--base-url", server.base_url, "--model", "m"]
    assert main(more) == 0
    assert json.loads(capsys.readouterr().out)["iterations"] == 15

    # a changed threshold must not resume silently
    bad = more[:]
    bad += ["--threshold", "0.8"]
    assert main(bad) == 2


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "tpikit.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for sub in ("render", "describe", "augment", "score", "analyze", "bench", "build-trainset"):
        assert sub in out.stdout
