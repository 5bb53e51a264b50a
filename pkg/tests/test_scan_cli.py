import csv
import json
import subprocess
import sys

import pytest

from statgenus.cli import main
from statgenus.scan import (
    MATCH,
    MISMATCH,
    UNCOVERED,
    ConfigError,
    ScanConfig,
    ScanRecord,
    TableError,
    compare_with_scan,
    ingest_class_table,
    read_csv,
    scan_to_files,
)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- configuration -------------------------------------------------------------------


def test_config_roundtrip(tmp_path):
    cfg = ScanConfig(group="3x3", block="1", levels=(2, 1), bound=500, threshold="4", workers=2, seed=3,
                     csv_path=str(tmp_path / "a.csv"), json_path=str(tmp_path / "a.json"))
    assert cfg.levels == (1, 2)
    assert ScanConfig.from_text(cfg.to_text()) == cfg
    path = tmp_path / "c.ini"
    path.write_text(cfg.to_text())
    assert ScanConfig.from_file(str(path)) == cfg


def test_config_defaults():
    cfg = ScanConfig.from_text("")
    assert cfg == ScanConfig()
    assert cfg.threshold_value() > 1


@pytest.mark.parametrize(
    "text",
    [
        "[extra]\nx = 1\n",
        "[scan]\nspeed = 3\n",
        "[scan]\nbound = many\n",
        "[scan]\nlevels = 2\n",  # Z/3 has r = 1
        "[scan]\nthreshold = 0.5\n",
        "[scan]\nthreshold = soon\n",
        "[group]\ngroup = 6\n",
        "[group]\nblock = 4\n",
        "[scan]\nworkers = 0\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ScanConfig.from_text(text)


def test_print_config(capsys, tmp_path):
    code, out, _ = _run(capsys, "selmer-scan", "--group", "9", "--levels", "1,2", "--bound", "50", "--print-config")
    assert code == 0
    cfg = ScanConfig.from_text(out)
    assert cfg.group == "9" and cfg.levels == (1, 2) and cfg.bound == 50


def test_bad_config_exit_code(capsys, tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[nope]\n")
    code, _, err = _run(capsys, "selmer-scan", "--config", str(path))
    assert code == 2 and "nope" in err


# -- scans ---------------------------------------------------------------------------


def _scan(tmp_path, name="s", **kw):
    kw.setdefault("threshold", "1")
    cfg = ScanConfig(csv_path=str(tmp_path / f"{name}.csv"), json_path=str(tmp_path / f"{name}.json"), **kw)
    summary = scan_to_files(cfg)
    return cfg, summary


def test_tiny_scan(tmp_path):
    cfg, summary = _scan(tmp_path, bound=10)
    rows = read_csv(cfg.csv_path)
    assert [r.encoding for r in rows] == ["1:3", "2:3", "1:7", "2:7"]
    assert summary.records == 4
    doc = json.loads(open(cfg.json_path).read())
    assert set(doc) == {"schema_version", "config", "summary", "records"}
    assert len(doc["records"]) == 4
    assert doc["summary"]["prediction_match_proportion"] == 1.0


def test_empty_scan_writes_header_only(tmp_path):
    cfg, summary = _scan(tmp_path, bound=2)
    lines = open(cfg.csv_path).read().splitlines()
    assert lines == [",".join(ScanRecord.COLUMNS)]
    assert summary.records == 0


def test_record_row_roundtrip(tmp_path):
    cfg, _ = _scan(tmp_path, group="9", levels=(1, 2), bound=400)
    for r in read_csv(cfg.csv_path):
        assert ScanRecord.from_row(r.to_row()) == r


def test_workers_do_not_change_output(tmp_path):
    a, _ = _scan(tmp_path, "one", bound=1500, workers=1)
    b, _ = _scan(tmp_path, "two", bound=1500, workers=2)
    assert open(a.csv_path).read() == open(b.csv_path).read()
    ja = json.loads(open(a.json_path).read())
    jb = json.loads(open(b.json_path).read())
    assert ja["records"] == jb["records"] and ja["summary"] == jb["summary"]


def test_resume_is_byte_identical(tmp_path):
    full, _ = _scan(tmp_path, "full", bound=1500)
    whole = open(full.csv_path).read()
    cut = whole[: len(whole) * 2 // 3]  # ends mid-line
    part = tmp_path / "part.csv"
    part.write_text(cut)
    cfg = ScanConfig(bound=1500, threshold="1", csv_path=str(part), json_path=str(tmp_path / "part.json"))
    scan_to_files(cfg, resume=True)
    assert part.read_text() == whole
    assert json.loads(open(cfg.json_path).read())["records"] == json.loads(open(full.json_path).read())["records"]


def test_scan_cli(capsys, tmp_path):
    code, out, _ = _run(capsys, "selmer-scan", "--group", "3", "--bound", "100", "--threshold", "1",
                        "--csv", str(tmp_path / "x.csv"), "--json", str(tmp_path / "x.json"))
    assert code == 0
    assert json.loads(out)["summary"]["records"] == len(read_csv(str(tmp_path / "x.csv")))


def test_report_cli(capsys, tmp_path):
    cfg, _ = _scan(tmp_path, bound=200)
    code, out, _ = _run(capsys, "report", "--group", "3", "--scan", cfg.csv_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["records"] == json.loads(open(cfg.json_path).read())["records"]


# -- class-table ingestion -----------------------------------------------------------


def _table(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_ingest_empty(tmp_path):
    res = ingest_class_table(_table(tmp_path, ""))
    assert res.rows == () and res.errors == ()


def test_ingest_missing_columns(tmp_path, capsys):
    path = _table(tmp_path, "conductor,label\n7,1:7\n")
    with pytest.raises(TableError):
        ingest_class_table(path)
    code, _, _ = _run(capsys, "ingest", "--group", "3", "--table", path)
    assert code == 2


def test_ingest_bad_rows_are_not_fatal(tmp_path):
    res = ingest_class_table(_table(tmp_path, "conductor;label;invariants\n7;1:7;1\nseven;x;1\n9;;3\n13;1:13;0\n"))
    assert len(res.rows) == 1 and [e[0] for e in res.errors] == [3, 4, 5]


def test_compare_verdicts(tmp_path):
    cfg, _ = _scan(tmp_path, bound=100)
    recs = read_csv(cfg.csv_path)
    res = ingest_class_table(_table(tmp_path, "conductor,label,invariants\n7,1:7,1\n91,x,3;3\n91,1:7;2:13,3\n10007,y,1\n"))
    verdicts = {(c.conductor, c.label): c.verdict for c in compare_with_scan(res, recs, 3)}
    # at 91 the labelled record predicts rank 1; the unlabelled row falls back to the conductor
    assert verdicts[(7, "1:7")] == MATCH
    assert verdicts[(91, "1:7;2:13")] == MATCH
    assert verdicts[(10007, "y")] == UNCOVERED
    assert verdicts[(91, "x")] in (MISMATCH, UNCOVERED)


def test_ingest_cli_exit_codes(tmp_path, capsys):
    cfg, _ = _scan(tmp_path, bound=100)
    good = _table(tmp_path, "conductor,label,invariants\n7,1:7,1\n", "good.csv")
    bad = _table(tmp_path, "conductor,label,invariants\n7,1:7,3\n", "bad.csv")
    assert _run(capsys, "ingest", "--group", "3", "--table", good, "--scan", cfg.csv_path)[0] == 0
    code, out, _ = _run(capsys, "ingest", "--group", "3", "--table", bad, "--scan", cfg.csv_path)
    assert code == 1 and MISMATCH in out
    assert _run(capsys, "ingest", "--group", "3", "--table", bad, "--scan", cfg.csv_path, "--lenient")[0] == 0


def test_ingest_cli_reports_bad_rows(tmp_path, capsys):
    path = _table(tmp_path, "conductor,label,invariants\nx,1:7,1\n")
    code, out, err = _run(capsys, "ingest", "--group", "3", "--table", path)
    assert code == 0 and "line 2" in err
    assert list(csv.reader(out.splitlines())) == [["conductor", "label", "observed_rank", "predicted_rank", "verdict"]]


# -- other commands ------------------------------------------------------------------


def test_enumerate_cli(capsys):
    code, out, _ = _run(capsys, "enumerate", "--group", "3", "--bound", "10")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 4


def test_info_commands(capsys):
    assert _run(capsys, "ring-info", "--group", "9")[0] == 0
    assert _run(capsys, "cohomology", "--group", "3", "--level", "1", "--degree", "1")[0] == 0
    code, out, _ = _run(capsys, "predict", "--group", "3", "--tuple", "1:7;2:13", "--level", "1")
    block = json.loads(out)["blocks"][0]
    assert code == 0 and block["predicted_rank"] == block["read_off_rank"] == 1


def test_charsum_cli(capsys, tmp_path):
    code, out, _ = _run(capsys, "charsum", "--group", "3", "--level", "1", "--bound", "500", "--csv", str(tmp_path / "c.csv"))
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = _run(capsys, "charsum", "--group", "3", "--level", "1", "--bound", "1000", "--mode", "outer", "--threshold", "sqrtlog")
    assert code == 0 and json.loads(out)["results"][0]["members"] == 0


def test_unlinked_cli(capsys):
    code, out, _ = _run(capsys, "unlinked", "--group", "3x3", "--block", "0", "--level", "2", "--samples", "50")
    doc = json.loads(out)
    assert code == 0 and doc["ok"]
    assert doc["results"][0]["no_verdict"] == 0


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["enumerate", "--group", "3"])
    assert exc.value.code == 2
    assert _run(capsys, "predict", "--group", "3", "--tuple", "1:5", "--level", "1")[0] == 2
    assert _run(capsys, "charsum", "--group", "3", "--level", "2", "--bound", "10")[0] == 2


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "statgenus.cli", "enumerate", "--group", "3", "--bound", "8"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "1:7" in res.stdout
