import json

import pytest

from conftest import G7, random_sign_matrix
from maxdet.gramsearch import SearchConfig, search_grams
from maxdet.io import (FormatError, RunLedgerEntry, append_ledger, format_gram_file,
                       format_sign_file, parse_matrix_file, parse_matrix_text, run_pipeline,
                       text_digest, verify_candidates, write_gram_file, write_sign_file)


def test_single_plus():
    f = parse_matrix_text("+\n")
    assert f.kind == "sign" and len(f.matrices) == 1
    assert (f.matrices[0] == [[1]]).all()


def test_sign_round_trip(rng, tmp_path):
    mats = [random_sign_matrix(rng, 9) for _ in range(100)]
    path = tmp_path / "sols.txt"
    write_sign_file(path, mats, 9)
    f = parse_matrix_file(path)
    assert f.kind == "sign" and f.n == 9
    assert all((a == b).all() for a, b in zip(mats, f.matrices))
    assert format_sign_file(f.matrices, 9) == path.read_text()


def test_gram_round_trip(tmp_path):
    mats = search_grams(SearchConfig(7, 4 * 64)).candidates
    path = tmp_path / "grams.txt"
    write_gram_file(path, mats, 7, (4 * 64) ** 2)
    f = parse_matrix_file(path)
    assert f.kind == "gram" and f.dmin2 == (4 * 64) ** 2
    assert all((a == b).all() for a, b in zip(mats, f.matrices))
    text = path.read_text()
    assert format_gram_file(f.matrices, 7, f.dmin2) == text
    assert "\r" not in text and text.isascii()


def test_digest_stable():
    text = format_gram_file([G7], 7, 1)
    assert text_digest(text) == text_digest(format_gram_file([G7.copy()], 7, 1))


def test_errors_carry_line_numbers():
    with pytest.raises(FormatError) as err:
        parse_matrix_text("maxdet-sol v1 n=2\n++\n+-\n\n++\n+x\n")
    assert err.value.line == 6
    with pytest.raises(FormatError) as err:
        parse_matrix_text("++\n+\n")
    assert err.value.line == 2
    with pytest.raises(FormatError):
        parse_matrix_text("maxdet-sol v1 n=3\n++\n+-\n")


def test_det_line_checked():
    text = format_gram_file([G7], 7, 1).replace("det2=331776", "det2=331775")
    with pytest.raises(FormatError):
        parse_matrix_text(text)


def test_verify_candidates():
    mats = search_grams(SearchConfig(7, 4 * 64)).candidates
    rep = verify_candidates(mats, 7, 4 * 64)
    assert rep.ok and rep.classes == len(mats) and rep.duplicates == 0
    bad = mats[0].copy()
    bad[0, 1] = bad[1, 0] = 1
    rep = verify_candidates([bad] + mats[1:], 7, 4 * 64)
    assert not rep.ok
    assert "congruence" in rep.checks[0].failures()


def test_verify_flags_duplicates():
    rep = verify_candidates([G7, G7[::-1, ::-1].copy()], 7, 1)
    assert rep.duplicates == 1 and not rep.ok


def test_ledger_append(tmp_path):
    path = tmp_path / "ledger.jsonl"
    append_ledger(path, RunLedgerEntry("x", "abc", nodes=3))
    append_ledger(path, RunLedgerEntry("y", "def"))
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["command"] for r in rows] == ["x", "y"]
    append_ledger(None, RunLedgerEntry("z", "ghi"))


@pytest.mark.parametrize("n,dn", [(3, 4), (5, 48), (7, 576)])
def test_pipeline_small(n, dn):
    s = run_pipeline(n, 1, classes=True)
    assert s.complete and s.d_n == dn
    assert s.design_classes[dn >> (n - 1)] >= 1


def test_pipeline_injected_candidates():
    cands = search_grams(SearchConfig(7, 8 * 64)).candidates
    s = run_pipeline(7, 8 * 64, candidates=cands)
    assert s.d_n == 576 and s.values == [8, 9]
