import json
from pathlib import Path

import numpy as np
import pytest

from planefield import output
from planefield.__version__ import __version__
from planefield.schemas import ComparisonReport, GridSpec, PointSet, Rect, ResidualGrid, RunConfig

CONFIG = RunConfig(command="verify", check="covariance", seed=3)


def _report(value: float, **details: str) -> ComparisonReport:
    return ComparisonReport(
        statistic_name="ks", value=value, threshold=0.5, n_samples=10, details=details
    )


def test_format_cell():
    assert output.format_cell(0.1) == "0.10000000000000001"
    assert output.format_cell(np.float64(0.5)) == "0.5"
    assert output.format_cell(True) == "true"
    assert output.format_cell(None) == ""
    assert output.format_cell(7) == "7"
    assert output.format_cell("prf") == "prf"


def test_provenance():
    echo = output.provenance(CONFIG)
    assert next(iter(echo)) == "planefield"
    assert echo["planefield"] == __version__
    assert echo["seed"] == "3"
    assert echo["params.lam"] == "1"
    assert echo["scales"] == "5,20,100"
    assert echo["compounding"] == ""


def test_provenance_header():
    lines = output.provenance_header(CONFIG).splitlines()
    assert lines[0] == f"# planefield {__version__}"
    assert "# command=verify" in lines
    assert "# check=covariance" in lines
    assert all(line.startswith("# ") for line in lines)


def test_points_table():
    points = PointSet(points=np.array([[0.5, 0.25], [1.0, 2.0]]), rect=Rect(t1=2, t2=2), lam=1.0)
    assert output.points_table(points) == output.Table(
        ("x1", "x2"), [(0.5, 0.25), (1.0, 2.0)]
    )
    marked = output.points_table(points, np.array([3.0, -1.0]))
    assert marked.columns == ("x1", "x2", "mark")
    assert marked.rows[1] == (1.0, 2.0, -1.0)


def test_grid_table():
    grid = GridSpec(t1_max=1.0, t2_max=2.0, n1=2, n2=1)
    values = np.arange(6).reshape(3, 2)
    table = output.grid_table(grid, values)
    assert table.columns == ("t1", "t2", "value")
    assert len(table.rows) == 6
    assert table.rows[0] == (0.0, 0.0, 0)
    assert table.rows[-1] == (1.0, 2.0, 5)


def test_samples_table():
    table = output.samples_table(np.array([1.5, 2.5]))
    assert table.rows == [(0, 1.5), (1, 2.5)]


def test_residual_table():
    residual = ResidualGrid(
        grid=GridSpec(t1_max=1.0, t2_max=1.0, n1=4, n2=4),
        name="prf",
        states=(0, 1),
        axis1=np.array([0.25, 0.5]),
        axis2=np.array([0.75]),
        values=np.array([[[1.0], [2.0]], [[3.0], [4.0]]]),
    )
    table = output.residual_table([residual])
    assert table.columns == ("system", "n", "axis1", "axis2", "residual")
    assert table.rows == [
        ("prf", 0, 0.25, 0.75, 1.0),
        ("prf", 0, 0.5, 0.75, 2.0),
        ("prf", 1, 0.25, 0.75, 3.0),
        ("prf", 1, 0.5, 0.75, 4.0),
    ]


def test_reports_table():
    reports = [_report(0.25, check="timechange", variant="sfprf"), _report(1.0)]
    table = output.reports_table(reports)
    assert table.columns == output.REPORT_FIELDS
    assert table.rows[0] == ("timechange", "sfprf", "ks", 0.25, 0.5, 10, True)
    assert table.rows[1] == ("", "", "ks", 1.0, 0.5, 10, False)


def test_render_csv():
    text = output.render_csv(CONFIG, output.samples_table(np.array([0.1, 2.0])))
    header, body = text.split("index,value\n")
    assert header == output.provenance_header(CONFIG)
    assert body == "0,0.10000000000000001\n1,2\n"


def test_render_json():
    document = json.loads(output.render_json(CONFIG, [_report(0.25, check="covariance")]))
    assert sorted(document) == ["provenance", "reports"]
    assert document["provenance"]["seed"] == "3"
    assert document["reports"][0]["passed"] is True
    table = output.Table(("a",), [(1,)])
    document = json.loads(output.render_json(CONFIG, [], table))
    assert document["table"] == {"columns": ["a"], "rows": [[1]]}


def test_write_artifact_to_file(tmp_path: Path):
    path = tmp_path / "nested" / "out.csv"
    config = CONFIG.model_copy(update={"output_path": str(path)})
    output.write_artifact(config, [_report(0.25)])
    assert path.read_text(encoding="utf-8") == output.render_csv(
        config, output.reports_table([_report(0.25)])
    )


def test_write_artifact_to_stdout(capsys: pytest.CaptureFixture[str]):
    config = CONFIG.model_copy(update={"format": "json"})
    output.write_artifact(config, [_report(0.25)])
    assert capsys.readouterr().out == output.render_json(config, [_report(0.25)])


def test_format_table():
    rows = [{"name": "prf", "value": 0.5}, {"name": "fprf"}]
    table = output.format_table(rows, ["name", "value"])
    lines = table.splitlines()
    assert lines[0] == "name │ value"
    assert lines[1] == "─────┼──────"
    assert lines[2] == " prf │   0.5"
    assert lines[3] == "fprf │  None"
