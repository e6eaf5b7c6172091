import json
import shutil

import pytest
from hypothesis import given, settings, strategies as st

from vert.batch import COLUMN_TITLES, BatchReport, ProgramResult, run_batch
from vert.cli import main
from vert.pipeline import STATUSES

from conftest import CANDIDATES, PROGRAMS, SUITE, make_config, needs_toolchain

SUBSET = ("full_pass", "bounded_cex", "non_compiling")


@pytest.fixture
def bench(tmp_path):
    d = tmp_path / "bench"
    for name in SUBSET:
        shutil.copytree(SUITE / name, d / name)
    return d


@needs_toolchain
def test_three_program_batch(bench, tmp_path):
    cfg = make_config(tmp_path, default_unwind_bound=4)
    serial = run_batch(bench, cfg, jobs=1, out_dir=tmp_path / "out")
    t = serial.totals()
    assert (t["total"], t["compiled"], t["pbt_pass"], t["bounded_pass"]) == (3, 2, 2, 1)
    assert t["full_pass"] <= 1
    assert serial.chain_holds()
    assert (tmp_path / "out" / "batch.report.json").is_file()
    assert (tmp_path / "out" / "full_pass.report.json").is_file()
    parallel = run_batch(bench, make_config(tmp_path / "p", default_unwind_bound=4), jobs=4)
    assert parallel.to_json(timings=False) == serial.to_json(timings=False)


def test_empty_bench(tmp_path):
    report = run_batch(tmp_path, make_config(tmp_path))
    assert set(report.totals().values()) == {0}
    assert report.chain_holds()
    assert "All" in report.render_table()


def test_malformed_program_is_a_failed_row(tmp_path):
    d = tmp_path / "bench" / "weird"
    d.mkdir(parents=True)
    (d / "source.zig").write_text("fn f() {}\n")
    (d / "entry.zig").write_text("f();\n")
    report = run_batch(tmp_path / "bench", make_config(tmp_path))
    (row,) = report.programs
    assert row.status == "Failed" and row.error
    assert report.totals()["total"] == 1


_results = st.builds(ProgramResult, program_id=st.text("abc", min_size=1, max_size=4),
                     language=st.sampled_from(["C", "CPP", "Go"]), status=st.sampled_from(STATUSES),
                     compiled=st.booleans(), timings=st.just({"pbt": 1.0}))


@settings(max_examples=200)
@given(st.lists(_results, max_size=12))
def test_chain_holds_for_consistent_rows(results):
    # a program past PBT necessarily compiled
    for r in results:
        r.compiled = r.compiled or r.status != "Failed"
    report = BatchReport.aggregate(results)
    assert report.chain_holds()
    assert report.totals()["total"] == len(results)


def test_table_columns():
    report = BatchReport.aggregate([ProgramResult("a", "C", "VerifiedBounded", True, {"pbt": 2.0})])
    header, _, c_row, all_row = report.render_table().splitlines()[:4]
    assert header.split() == ["Language", *COLUMN_TITLES]
    assert c_row.split() == ["C", "1", "1", "1", "1", "0"]
    assert all_row.split() == ["All", "1", "1", "1", "1", "0"]


# -- command line --------------------------------------------------------------------------

def _cli(tmp_path, *args):
    return main(["run", *args, "--fixtures", str(CANDIDATES), "--workspace", str(tmp_path / "ws"),
                 "--out", str(tmp_path / "out")])


@needs_toolchain
def test_cli_run_reverse(tmp_path, capsys):
    code = _cli(tmp_path, str(PROGRAMS / "reverse"), "--unwind", "2", "--no-full")
    assert code == 0
    data = json.loads((tmp_path / "out" / "reverse.report.json").read_text())
    assert len(data["attempts"]) == 2
    assert (tmp_path / "out" / "reverse.report.txt").is_file()
    assert data["status"] in capsys.readouterr().out


def test_cli_missing_entry_is_a_usage_error(tmp_path):
    d = tmp_path / "prog"
    d.mkdir()
    shutil.copy(PROGRAMS / "reverse" / "source.c", d / "source.c")
    with pytest.raises(SystemExit) as e:
        _cli(tmp_path, str(d))
    assert e.value.code == 2


@needs_toolchain
def test_cli_single_attempt_failure(tmp_path):
    code = _cli(tmp_path, str(SUITE / "pbt_fail"), "--max-attempts", "1", "--unwind", "4")
    assert code != 0
    data = json.loads((tmp_path / "out" / "pbt_fail.report.json").read_text())
    assert len(data["attempts"]) == 1 and data["status"] == "Failed"
