import json

import numpy as np
import pydantic
import pytest

from planefield.schemas import (
    ComparisonReport,
    FieldParams,
    GridSpec,
    PointSet,
    Rect,
    RunConfig,
    SampleBatch,
    WrightSpec,
)


def test_rect():
    rect = Rect(s1=1.0, t1=3.0, s2=0.5, t2=1.0)
    assert rect.area == 1.0
    assert rect.translated(1.0, 2.0) == Rect(s1=2.0, t1=4.0, s2=2.5, t2=3.0)
    assert rect.same_shape(rect.translated(5.0, 0.0))
    assert not rect.same_shape(Rect(t1=1.0, t2=1.0))
    assert rect.is_disjoint(rect.translated(2.0, 0.0))
    assert not rect.is_disjoint(rect.translated(1.0, 0.25))
    with pytest.raises(pydantic.ValidationError):
        Rect(s1=2.0, t1=1.0, t2=1.0)
    with pytest.raises(pydantic.ValidationError):
        Rect(t1=-1.0, t2=1.0)


def test_grid_spec():
    grid = GridSpec.from_step(2.0, 1.0, 0.25)
    assert (grid.n1, grid.n2) == (8, 4)
    assert grid.h1 == grid.h2 == 0.25
    assert grid.cell_area == 0.0625
    assert grid.nodes1()[-1] == 2.0
    t1, t2 = grid.mesh()
    assert t1.shape == t2.shape == (9, 5)
    assert t1[3, 0] == 0.75
    assert t2[0, 3] == 0.75
    assert grid.refined() == GridSpec(t1_max=2.0, t2_max=1.0, n1=16, n2=8)
    assert GridSpec.from_step(1.0, 1.0, 4.0).n1 == 1


def test_field_params():
    assert FieldParams().is_plain
    params = FieldParams(lam=2.0, alpha1=0.5, alpha2=0.25)
    assert not params.is_plain
    assert params.time_scale(4.0, 16.0) == pytest.approx(4.0)
    with pytest.raises(pydantic.ValidationError):
        FieldParams(alpha1=1.5)
    with pytest.raises(pydantic.ValidationError):
        FieldParams(beta=0.0)
    with pytest.raises(pydantic.ValidationError):
        FieldParams(lam=0.0)
    with pytest.raises(pydantic.ValidationError):
        FieldParams(gamma=0.5)  # pyright: ignore[reportCallIssue]


def test_wright_spec():
    spec = WrightSpec(upper=((1.0, 0.5),), lower=((2.0, 0.25), (1.0, 1.0)))
    assert spec.shifted() == WrightSpec(upper=((1.5, 0.5),), lower=((2.25, 0.25), (2.0, 1.0)))
    with pytest.raises(pydantic.ValidationError, match="nonzero"):
        WrightSpec(upper=((1.0, 0.0),), lower=())


def test_point_set():
    points = PointSet(points=[[0.5, 0.5]], rect=Rect(t1=1.0, t2=1.0), lam=1.0)
    assert len(points) == 1
    empty = PointSet(points=np.empty((0, 2)), rect=Rect(t1=1.0, t2=1.0), lam=1.0)
    assert len(empty) == 0
    with pytest.raises(pydantic.ValidationError):
        PointSet(points=[0.5, 0.5], rect=Rect(t1=1.0, t2=1.0), lam=1.0)


def test_sample_batch():
    batch = SampleBatch(seed=1, values=[1, 2, 3], descriptor="counts")
    assert batch.n == 3
    assert batch.model_dump(mode="json")["values"] == [1, 2, 3]


def test_comparison_report():
    report = ComparisonReport(
        statistic_name="tv", value=0.01, threshold=0.02, n_samples=100, details={"check": "pmf"}
    )
    assert report.passed
    assert report.summary() == "PASS pmf: tv=0.01 threshold=0.02 n=100"
    failing = ComparisonReport(statistic_name="tv", value=0.03, threshold=0.02, n_samples=100)
    assert not failing.passed
    assert failing.summary().startswith("FAIL tv:")
    document = json.loads(report.to_json())
    assert list(document) == sorted(document)
    assert document["details"] == {"check": "pmf"}


def test_comparison_report_ignores_given_verdict():
    report = ComparisonReport(
        statistic_name="tv", value=1.0, threshold=0.5, n_samples=1, passed=True
    )
    assert not report.passed


def test_run_config():
    config = RunConfig(command="pmf", family="prf")
    assert config.format == "csv"
    assert config.output_path == "-"
    assert config.scales == (5, 20, 100)
    with pytest.raises(pydantic.ValidationError):
        RunConfig(command="plot")  # pyright: ignore[reportArgumentType]
    with pytest.raises(pydantic.ValidationError):
        RunConfig(command="pmf", unknown=1)  # pyright: ignore[reportCallIssue]
