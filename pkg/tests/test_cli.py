import csv
import io

import pytest

from markov_tail.chain import build_cycle, save_chain
from markov_tail.cli import parse_grid, run
from markov_tail.observable import format_observable, random_observable


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectral():
    code, out, _ = call("spectral", "--chain", "hypercube:5")
    assert code == 0
    assert "\r" not in out
    (row,) = rows(out)
    assert float(row["gap"]) == pytest.approx(1 / 3)


def test_sample_size_headline():
    code, out, _ = call("sample-size", "--chain", "complete:32", "--eps", "0.01", "--target", "0.05")
    assert code == 0
    assert rows(out)[0]["N_required"] == "3774334"


def test_bound_with_gap_override_and_variant():
    code, out, _ = call(
        "bound", "--chain", "cycle:33", "--eps", "0.01", "--N", "1000000",
        "--gap-override", "0.5", "--variant", "literal",
    )
    assert code == 0
    row = rows(out)[0]
    assert row["method"] == "kargin-literal" and float(row["g"]) == 0.5


def test_table1_csv():
    code, out, _ = call("table1")
    assert code == 0
    table = rows(out)
    assert len(table) == 18
    assert out.splitlines()[0].startswith("method,chain,m,N_required,N_required_millions_rounded")


def test_verify_small_chain():
    code, out, _ = call("verify", "--chain", "cycle:4", "--trials", "2", "--m", "2")
    assert code == 0
    assert all(r["pass"] == "true" for r in rows(out))


def test_simulate_with_files(tmp_path):
    chain = build_cycle(5)
    save_chain(chain, tmp_path / "c.txt")
    (tmp_path / "f.txt").write_text(format_observable(random_observable(chain, 2, 1.0, 0)))
    code, out, _ = call(
        "simulate", "--chain", str(tmp_path / "c.txt"), "--observable", str(tmp_path / "f.txt"),
        "--N", "50", "--replicas", "2000", "--eps-grid", "0.1:0.3:0.1",
    )
    assert code == 0
    table = rows(out)
    assert [float(r["epsilon"]) for r in table] == [0.1, 0.2, 0.3]
    assert all(r["dominated"] == "true" for r in table)


@pytest.mark.parametrize(
    "argv, code",
    [
        (("spectral", "--chain", "/no/such/file"), "io-error"),
        (("spectral", "--chain", "cycle:2"), "invalid-parameter"),
        (("bound", "--chain", "complete:4", "--eps", "0.1"), "usage"),
        (("bound", "--chain", "complete:4", "--eps", "0.1", "--N", "5", "--gap-override", "3"), "invalid-gap"),
        (("bound", "--chain", "complete:4", "--eps", "0.1", "--N", "5", "--method", "gillman", "--m", "3"), "wrong-method"),
    ],
)
def test_errors_exit_2(argv, code):
    status, out, err = call(*argv)
    assert status == 2
    assert out == ""
    assert err.startswith(f"error[{code}]:")
    assert err.count("\n") == 1


def test_parse_error_from_file(tmp_path):
    (tmp_path / "bad.txt").write_text("2\n0.5 0.6\n0.5 0.5\n")
    status, _, err = call("spectral", "--chain", str(tmp_path / "bad.txt"))
    assert status == 2 and err.startswith("error[non-stochastic-row]")


def test_parse_grid():
    assert parse_grid("0.02:0.2:0.02") == pytest.approx([0.02 * i for i in range(1, 11)])
    assert len(parse_grid("0.02:0.2:0.02")) == 10
    assert parse_grid("0.1,0.3") == [0.1, 0.3]
