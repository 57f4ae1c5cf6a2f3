"""Command-line surface: exit codes, file outputs, byte-level determinism."""

import json
import subprocess
import sys

import pytest

from conftest import make_record, make_set
from idrank import rng
from idrank.cli import main
from idrank.store import Role, write_set

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

SYNTH_ARGS = [
    "--identities", "4", "--references", "2", "--gallery-per-id", "5",
    "--generated", "2", "--dim", "16", "--sigma", "0.2", "--seed", "3",
]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out)] + SYNTH_ARGS) == 0
    return out


def tree(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


def test_synth_writes_dataset_and_provenance(synth_dir, capsys):
    assert sorted(p.name for p in synth_dir.iterdir()) == [
        "dataset.jsonl", "manifest.json", "synth_config.json",
    ]
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    total = sum(sum(roles.values()) for roles in manifest["counts"].values())
    assert total == 4 * (2 + 5 + 2)
    config = json.loads((synth_dir / "synth_config.json").read_text())
    assert config["seed"] == 3
    assert main(["synth", "--out", str(synth_dir)] + SYNTH_ARGS) == 0
    out = capsys.readouterr().out
    assert "config_fingerprint=" in out and "seed=3" in out


def test_validate_ok_and_manifest_mismatch(synth_dir, tmp_path, capsys):
    dataset = str(synth_dir / "dataset.jsonl")
    assert main(["validate", "--set", dataset]) == 0
    assert capsys.readouterr().out.startswith("ok: 36 records, 4 subjects")
    assert main(["validate", "--set", dataset, "--manifest", str(synth_dir / "manifest.json")]) == 0
    capsys.readouterr()

    stale = json.loads((synth_dir / "manifest.json").read_text())
    stale["dimension"] = 999
    bad = tmp_path / "stale.json"
    bad.write_text(json.dumps(stale))
    assert main(["validate", "--set", dataset, "--manifest", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_build_gallery_writes_spec(synth_dir, tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    code = main([
        "build-gallery", "--set", str(synth_dir / "dataset.jsonl"), "--out", str(spec_path),
        "--references", "2", "--gallery", "3", "--strategy", "kmeans", "--seed", "1",
    ])
    assert code == 0
    assert "gallery_fingerprint=" in capsys.readouterr().out
    spec = json.loads(spec_path.read_text())
    assert spec["strategy"] == "kmeans"
    assert all(len(ids) == 3 for ids in spec["galleries"].values())
    assert all(len(ids) == 2 for ids in spec["references"].values())


def evaluate(synth_dir, out, *extra):
    return main([
        "evaluate", "--set", str(synth_dir / "dataset.jsonl"), "--out", str(out), *extra,
    ])


def test_evaluate_writes_tables_and_figure(synth_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert evaluate(synth_dir, out) == 0
    stdout = capsys.readouterr().out
    assert "config_fingerprint=" in stdout
    assert "method=synthetic map=" in stdout
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "gallery_spec.json", "results.json", "scores.csv", "scores.md",
        "scores.png", "sidecar.json",
    ]
    assert (out / "scores.png").read_bytes().startswith(PNG_MAGIC)
    csv_bytes = (out / "scores.csv").read_bytes()
    assert csv_bytes.startswith(b"Method,mAP,mAP (macro),Pairwise Sim,Adherence,Top-1\r\n")
    results = json.loads((out / "results.json").read_text())
    assert [r["method"] for r in results] == ["synthetic"]
    sidecar = json.loads((out / "sidecar.json").read_text())
    assert sidecar["tool"] == "idrank"
    assert "gallery_fingerprint" in sidecar


def test_evaluate_oracle_queries(synth_dir, tmp_path, capsys):
    out = tmp_path / "oracle"
    assert evaluate(synth_dir, out, "--queries", "oracle", "--no-figures") == 0
    assert "method=oracle" in capsys.readouterr().out
    results = json.loads((out / "results.json").read_text())
    assert results[0]["method"] == "oracle"
    assert results[0]["query_count"] == 4 * 2
    assert not (out / "scores.png").exists()


def test_evaluate_is_byte_deterministic_across_threads(synth_dir, tmp_path):
    runs = {}
    for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / name
        assert evaluate(synth_dir, out, "--threads", threads) == 0
        runs[name] = tree(out)
    assert runs["a"] == runs["b"]
    assert runs["a"] == runs["c"]
    assert (tmp_path / "a" / "scores.png").read_bytes().startswith(PNG_MAGIC)


def test_evaluate_with_config_file_and_flag_overrides(synth_dir, tmp_path, capsys):
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps({
        "datasets": [str(synth_dir / "dataset.jsonl")],
        "split": {"n_reference": 2, "n_gallery": 3, "strategy": "random", "seed": 5},
        "seed": 5,
    }))
    out_a = tmp_path / "base"
    assert main(["evaluate", "--config", str(config_path), "--out", str(out_a),
                 "--no-figures"]) == 0
    base_fp = capsys.readouterr().out.splitlines()[0]
    out_b = tmp_path / "reseeded"
    assert main(["evaluate", "--config", str(config_path), "--out", str(out_b),
                 "--no-figures", "--seed", "6"]) == 0
    reseeded_fp = capsys.readouterr().out.splitlines()[0]
    assert base_fp != reseeded_fp
    spec = json.loads((out_a / "gallery_spec.json").read_text())
    assert all(len(ids) == 3 for ids in spec["galleries"].values())


def test_evaluate_with_prebuilt_gallery_spec(synth_dir, tmp_path):
    spec_path = tmp_path / "spec.json"
    assert main([
        "build-gallery", "--set", str(synth_dir / "dataset.jsonl"), "--out", str(spec_path),
        "--references", "2", "--gallery", "3",
    ]) == 0
    out = tmp_path / "run"
    assert evaluate(synth_dir, out, "--gallery-spec", str(spec_path), "--no-figures") == 0
    assert json.loads((out / "gallery_spec.json").read_text()) == json.loads(spec_path.read_text())


def test_ablate_writes_plotdata_and_figure(synth_dir, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main([
        "ablate", "--set", str(synth_dir / "dataset.jsonl"), "--out", str(out),
        "--axis", "images-per-subject", "--values", "2", "4", "--seeds", "0", "1",
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "axis=images-per-subject value=2 map=" in stdout
    plotdata = (out / "plotdata.csv").read_bytes().decode()
    assert plotdata.startswith("axis,value,seed,metric,score\r\n")
    assert plotdata.count("\r\n") == 1 + 2 * 2 * 2
    assert (out / "ablation.png").read_bytes().startswith(PNG_MAGIC)
    assert json.loads((out / "sidecar.json").read_text())["axis"] == "images-per-subject"


def variant_file(tmp_path):
    records = []
    for subject in ("s0", "s1"):
        for j in range(3):
            vec = rng.standard_normal(rng.derive_key(2, subject, str(j)), 0, 8)
            role = Role.REFERENCE if j == 0 else Role.GALLERY
            records.append(make_record(f"{subject}-real-{j}", vec, subject=subject, role=role))
        gen = rng.standard_normal(rng.derive_key(2, subject, "gen"), 0, 8)
        for tag in ("a", "b"):
            records.append(make_record(
                f"{subject}-gen@{tag}", gen, subject=subject, role=Role.GENERATED,
                method="m", variant=tag,
            ))
    path = tmp_path / "variants.jsonl"
    write_set(make_set(records, name="variants"), path)
    return path


def test_compare_variants_command(tmp_path, capsys):
    dataset = variant_file(tmp_path)
    out = tmp_path / "cmp"
    code = main([
        "compare-variants", "--set", str(dataset), "--out", str(out),
        "--variant-a", "a", "--variant-b", "b",
    ])
    assert code == 0
    assert "delta map_per_query=+0.000000" in capsys.readouterr().out
    payload = json.loads((out / "comparison.json").read_text())
    assert payload["variant_a"] == "a"
    assert payload["deltas"]["map_per_query"] == 0.0
    assert payload["only_in_a"] == []
    assert (out / "comparison.png").read_bytes().startswith(PNG_MAGIC)


def test_report_reemits_saved_results(synth_dir, tmp_path, capsys):
    run_out = tmp_path / "run"
    assert evaluate(synth_dir, run_out, "--no-figures") == 0
    capsys.readouterr()
    rep_out = tmp_path / "tables"
    code = main([
        "report", "--results", str(run_out / "results.json"), "--out", str(rep_out),
        "--scale", "percent", "--no-figures",
    ])
    assert code == 0
    assert "wrote tables for 1 results" in capsys.readouterr().out
    table = (rep_out / "table.csv").read_text()
    first_score = table.splitlines()[1].split(",")[1]
    assert 0.0 <= float(first_score) <= 100.0 and "." in first_score

    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["report", "--results", str(bad), "--out", str(rep_out)]) == 1
    assert "expected a JSON array" in capsys.readouterr().err


def test_error_exit_codes(tmp_path, capsys):
    assert main(["validate", "--set", str(tmp_path / "missing.jsonl")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["evaluate", "--out", str(tmp_path / "x")]) == 1
    assert "either --config or --set is required" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["evaluate"])  # missing required --out
    assert exc.value.code == 2


def test_installed_entry_point(synth_dir, tmp_path):
    result = subprocess.run(
        [sys.executable, "-c", "import idrank.cli, sys; sys.exit(idrank.cli.main())",
         "validate", "--set", str(synth_dir / "dataset.jsonl")],
        capture_output=True, text=True,
    )
    # argv[1:] of the -c program is what argparse sees
    assert result.returncode == 0, result.stderr
    assert result.stdout.startswith("ok:")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("idrank ")
