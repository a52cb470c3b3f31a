import numpy as np
import pytest

from planefield import pdecheck
from planefield.errors import DomainError
from planefield.schemas import FieldParams, GridSpec, ResidualGrid

UNIT_16 = GridSpec(t1_max=1.0, t2_max=1.0, n1=16, n2=16)


def _constant_residual(grid: GridSpec) -> ResidualGrid:
    value = grid.h1
    return ResidualGrid(
        grid=grid,
        name="constant",
        states=(0,),
        axis1=np.array([0.5]),
        axis2=np.array([0.5]),
        values=np.full((1, 1, 1), value),
    )


def test_residual_prf_analytic():
    residual = pdecheck.residual_prf_system(5, UNIT_16, 1.5, method="analytic")
    assert residual.states == (0, 1, 2, 3, 4, 5)
    assert residual.values.shape == (6, 15, 15)
    assert residual.norm <= 1e-12


def test_residual_prf_finite_differences():
    grid = GridSpec.from_step(1.0, 1.0, 1 / 128)
    residual = pdecheck.residual_prf_system(5, grid, 1.0)
    assert residual.norm < 1e-4
    coarse = pdecheck.residual_prf_system(5, GridSpec.from_step(1.0, 1.0, 1 / 32), 1.0)
    assert residual.norm < coarse.norm


def test_residual_window():
    residual = pdecheck.residual_prf_system(2, UNIT_16, 1.0, window=(0.5, 0.25))
    assert residual.axis1[0] == pytest.approx(0.5)
    assert residual.axis2[0] == pytest.approx(0.25)
    assert residual.values.shape == (3, residual.axis1.shape[0], residual.axis2.shape[0])
    with pytest.raises(DomainError):
        pdecheck.residual_prf_system(2, UNIT_16, 1.0, window=1.0)


def test_residual_states_domain():
    with pytest.raises(DomainError):
        pdecheck.residual_prf_system(-1, UNIT_16, 1.0)


def test_sfprf_lambda_derivatives_agree():
    series = pdecheck.residual_sfprf_system(4, UNIT_16, 0.6, 1.0, lambda_derivative="series")
    difference = pdecheck.residual_sfprf_system(4, UNIT_16, 0.6, 1.0, lambda_derivative="fd")
    assert np.max(np.abs(series.values - difference.values)) < 1e-6


def test_sfprf_order_one_is_prf():
    space = pdecheck.residual_sfprf_system(3, UNIT_16, 1.0, 1.2)
    plain = pdecheck.residual_prf_system(3, UNIT_16, 1.2)
    assert np.allclose(space.values, plain.values, atol=1e-9)


def test_subordinator_density_domain():
    grid = GridSpec.from_step(*pdecheck.SUBORDINATOR_EXTENT, 1 / 16)
    with pytest.raises(DomainError):
        pdecheck.residual_subordinator_density(grid, alpha=0.7)
    with pytest.raises(DomainError):
        pdecheck.residual_subordinator_density(grid, window=(0.0, 0.5))


def test_exp_compound_axis_domain():
    grid = GridSpec.from_step(*pdecheck.EXP_EXTENT, 1 / 16)
    params = FieldParams(alpha1=0.8, alpha2=0.9)
    with pytest.raises(DomainError):
        pdecheck.residual_exp_compound(grid, params)


def test_refinement_grids():
    grids = pdecheck.refinement_grids(UNIT_16, 2)
    assert [grid.n1 for grid in grids] == [16, 32, 64]
    assert grids[-1].h1 == pytest.approx(1 / 64)


def test_refinement_ratios():
    ratios = pdecheck.refinement_ratios(_constant_residual, pdecheck.refinement_grids(UNIT_16, 2))
    assert ratios == pytest.approx([0.5, 0.5])


def test_residual_grid_norms():
    residual = ResidualGrid(
        grid=UNIT_16,
        name="test",
        states=(0, 1),
        axis1=np.array([0.25, 0.5]),
        axis2=np.array([0.5]),
        values=np.array([[[1.0], [-3.0]], [[0.5], [0.25]]]),
    )
    assert residual.norm == 3.0
    assert residual.state_norms() == {0: 3.0, 1: 0.5}
    with pytest.raises(ValueError, match="does not match"):
        ResidualGrid(
            grid=UNIT_16,
            name="test",
            states=(0,),
            axis1=np.array([0.5]),
            axis2=np.array([0.5]),
            values=np.zeros((2, 1, 1)),
        )


def test_check_residual_unknown():
    with pytest.raises(DomainError):
        pdecheck.check_residual("unknown")


def test_check_residual_prf():
    residuals, report = pdecheck.check_residual("prf")
    assert report.passed, report.summary()
    assert report.statistic_name == "residual_norm"
    assert report.threshold == pytest.approx(4e-4)
    assert len(residuals) == 1


def test_check_residual_subordinator():
    residuals, report = pdecheck.check_residual("subordinator", h=1 / 32)
    assert report.passed, report.summary()
    assert residuals[0].name == "subordinator"
    assert residuals[0].axis1[0] >= 0.5


def test_check_residual_exp_compound_plain():
    residuals, report = pdecheck.check_residual("exp_compound", h=1 / 32, params=FieldParams())
    assert report.passed, report.summary()
    assert [residual.name for residual in residuals] == ["exp_compound:t1", "exp_compound:t2"]


@pytest.mark.slow
@pytest.mark.parametrize(
    ("check", "params"),
    [
        ("fprf", FieldParams(lam=1.0, alpha1=0.8, alpha2=0.9)),
        ("sfprf", FieldParams(lam=1.0, beta=0.6)),
        ("stfprf", FieldParams(lam=1.0, alpha1=0.8, alpha2=0.9, beta=0.7)),
        ("exp_compound", FieldParams(lam=1.0, alpha2=0.8)),
    ],
)
def test_check_residual_refinement(check: str, params: FieldParams):
    residuals, report = pdecheck.check_residual(check, h=1 / 16, params=params, n_max=3)
    assert report.statistic_name == "refinement_ratio"
    assert len(residuals) == 3
    assert report.passed, report.summary()


def test_residual_fprf_window():
    params = FieldParams(alpha1=0.8, alpha2=0.9)
    residual = pdecheck.residual_fprf_system(2, UNIT_16, params)
    assert residual.name == "fprf"
    assert residual.states == (0, 1, 2)
    assert residual.axis1[0] >= 0.25
    assert residual.axis2[0] >= 0.25
    assert np.all(np.isfinite(residual.values))


def test_stfprf_order_one_in_space_is_fprf():
    params = FieldParams(lam=1.2, alpha1=0.8, alpha2=0.9)
    space_time = pdecheck.residual_stfprf_system(3, UNIT_16, params)
    time = pdecheck.residual_fprf_system(3, UNIT_16, params)
    assert space_time.axis1.tolist() == time.axis1.tolist()
    assert np.allclose(space_time.values, time.values, atol=1e-8)
