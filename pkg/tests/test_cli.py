import json

import pytest

from maxdet.cli import main, parse_int_expr
from maxdet.io import parse_matrix_file


def test_parse_int_expr():
    assert parse_int_expr("833*4^6*2^18") == 833 * 4 ** 6 * 2 ** 18
    assert parse_int_expr("2173*2**12") == 2173 * 4096
    assert parse_int_expr(" 12 ") == 12
    for bad in ("2173.0", "__import__('os')", "2^99999", "a*2"):
        with pytest.raises(ValueError):
            parse_int_expr(bad)


def test_bounds(capsys):
    assert main(["bounds", "7"]) == 0
    out = capsys.readouterr().out
    assert "ehlich: squared=344064" in out


def test_search_decompose_verify(tmp_path, capsys):
    grams = tmp_path / "g.txt"
    sols = tmp_path / "s.txt"
    ledger = tmp_path / "ledger.jsonl"
    assert main(["--ledger", str(ledger), "gram-search", "--n", "7", "--dmin", "8*2^6",
                 "--out", str(grams)]) == 0
    assert len(parse_matrix_file(grams).matrices) == 5
    assert main(["verify", "--grams", str(grams), "--dmin", "8*2^6"]) == 0
    assert main(["--ledger", str(ledger), "decompose", "--grams", str(grams),
                 "--out", str(sols)]) == 0
    f = parse_matrix_file(sols)
    assert f.kind == "sign" and len(f.matrices) == 5
    assert main(["decompose", "--grams", str(grams), "--mode", "all",
                 "--budget-nodes", "3"]) == 2
    rows = [json.loads(line) for line in ledger.read_text().splitlines()]
    assert [r["command"] for r in rows] == ["gram-search", "decompose"]
    assert main(["canon", "--grams", str(grams)]) == 0
    assert "classes: 5" in capsys.readouterr().out
    assert main(["hasse", "--grams", str(grams)]) == 0


def test_search_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["gram-search", "--n", "7", "--dmin", "4*2^6", "--out", str(a)])
    main(["gram-search", "--n", "7", "--dmin", "4*2^6", "--out", str(b), "--subtree", "0/1"])
    assert a.read_bytes() == b.read_bytes()


def test_pipeline_and_spectrum(capsys, tmp_path):
    assert main(["pipeline", "--n", "7", "--dmin", "8*2^6", "--classes"]) == 0
    out = capsys.readouterr().out
    assert "D_n: 576" in out
    assert main(["spectrum", "--n", "5", "--budget", "300",
                 "--witness-dir", str(tmp_path)]) == 0
    assert "values: 0..3" in capsys.readouterr().out
    assert (tmp_path / "spectrum_n5.txt").exists()


def test_errors(tmp_path, capsys):
    assert main(["verify", "--grams", str(tmp_path / "missing.txt")]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3\n")
    assert main(["verify", "--grams", str(bad)]) == 1
    assert main(["gram-search", "--n", "8", "--dmin", "1"]) == 1
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_parallel_workers_match_serial(tmp_path, monkeypatch):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["gram-search", "--n", "7", "--dmin", "2^6", "--out", str(a)])
    monkeypatch.setenv("MAXDET_WORKERS", "3")
    main(["gram-search", "--n", "7", "--dmin", "2^6", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
