"""Acceptance criteria for the bundled two-wing case study.

Each test prints one PASS line when its criterion holds; tolerances are
pinned here and nowhere else.  Criteria 2-4 carry a 25% tolerance: the
attitude-only plant reduction and the unpublished mounting geometry mean
the reference random-process and drive-disturbance transfers are only
reproducible to that level (exact reproduction is explicitly not a
goal, see criterion 9).
"""

import filecmp
import math
import time
from statistics import NormalDist

import numpy as np
import pytest
from scipy.optimize import brentq

from pointbudget.combine import CorrelationSpec, combine_advanced
from pointbudget.linsys import h2_norm, hinf_norm, ss
from pointbudget.pipeline import run
from pointbudget.report import emit
from pointbudget.sources import SourceKind
from pointbudget.spacecraft import UncertainParameter
from pointbudget.transfer import ContributionRecord, Representation
from pointbudget.worstcase import wc_dc_gain, wc_variance

# -- pinned expectations -----------------------------------------------------

ORBITAL_MEAN = 0.7692            # per axis, +/- 0.0005
SADM_SIGMA = {"x": 2.74e-5, "y": 0.546e-5, "z": 81.3e-5}        # +/- 25%
STAR_SIGMA = {"x": 9.95e-2, "y": 7.55e-2, "z": 1.95e-2}         # +/- 25%
GYRO_SIGMA = {"x": 2.64e-2, "y": 3.47e-2, "z": 0.537e-2}        # +/- 25%
TOTALS = {"x": 1.0535, "y": 0.9976, "z": 0.825}                 # +/- 25%
PLANT_TOL = 0.25
CROSS_CHECK_TOL = 0.02

ANALYSIS_I_RUNTIME_S = 5.0
NORM_RUNTIME_S = 1.0
WC_RUNTIME_S = 600.0
WC_MAX_EVALUATIONS = 20_000

TWO_UNIFORM_QUANTILE = 2.0 - math.sqrt(4.0 * (1.0 - 0.997))  # 1.89046 (0.0015/tail)

DRIVE_FREQ_HZ = 3.8
MASS_LOWER = 800.0
IZZ_LOWER = 64.0


def ok(criterion: str, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {detail}")


@pytest.fixture(scope="module")
def analysis_one(ape_config):
    t0 = time.monotonic()
    report = run(ape_config)
    elapsed = time.monotonic() - t0
    return report, elapsed


@pytest.fixture(scope="module")
def analysis_two(rpe_wc_config):
    t0 = time.monotonic()
    report = run(rpe_wc_config)
    elapsed = time.monotonic() - t0
    return report, elapsed


def _record(report, source: str, axis: str) -> ContributionRecord:
    for rec in report.budget.contributions:
        if rec.source_name == source and rec.axis == axis:
            return rec
    raise AssertionError(f"missing record {source}/{axis}")


def test_criterion_01_time_constant_row_and_runtime(analysis_one):
    report, elapsed = analysis_one
    for axis in ("x", "y", "z"):
        rec = _record(report, "Orbital disturbances", axis)
        assert rec.mean == pytest.approx(ORBITAL_MEAN, abs=5e-4)
        assert rec.std == 0.0
    assert elapsed < ANALYSIS_I_RUNTIME_S
    ok("1", f"orbital mean 0.7692 on all axes; runtime {elapsed:.2f} s < 5 s")


def test_criterion_02_periodic_contributions(analysis_one):
    report, _ = analysis_one
    worst = 0.0
    for source in ("SADM1 disturbance", "SADM2 disturbance"):
        for axis, expected in SADM_SIGMA.items():
            got = _record(report, source, axis).std
            rel = abs(got / expected - 1.0)
            worst = max(worst, rel)
            assert rel <= PLANT_TOL, f"{source}/{axis}: {got:.3e} vs {expected:.3e}"
    ok("2", f"drive-disturbance sigmas within 25% (worst {worst:.1%})")


def test_criterion_03_random_process_contributions(analysis_one):
    report, _ = analysis_one
    worst = 0.0
    for source, table in (("Star sensor noise", STAR_SIGMA), ("Gyro noise", GYRO_SIGMA)):
        for axis, expected in table.items():
            got = _record(report, source, axis).std
            rel = abs(got / expected - 1.0)
            worst = max(worst, rel)
            assert rel <= PLANT_TOL, f"{source}/{axis}: {got:.3e} vs {expected:.3e}"
    # internal consistency: closed-form variance vs grid integration
    for source in ("Star sensor noise", "Gyro noise"):
        for axis in ("x", "y", "z"):
            rec = _record(report, source, axis)
            grid_sigma = math.sqrt(2.0 * np.trapezoid(np.asarray(rec.psd_level_out),
                                                      np.asarray(rec.psd_grid_hz)))
            assert grid_sigma == pytest.approx(rec.std, rel=CROSS_CHECK_TOL)
    ok("3", f"noise sigmas within 25% (worst {worst:.1%}); grid cross-check within 2%")


def test_criterion_04_totals_and_orderings(analysis_one):
    report, _ = analysis_one
    for axis, expected in TOTALS.items():
        got = report.budget.axis(axis).total
        assert got == pytest.approx(expected, rel=PLANT_TOL)
    totals = {axis: report.budget.axis(axis).total for axis in TOTALS}
    assert totals["x"] > 1.0
    margins = {axis: report.budget.axis(axis).margin for axis in TOTALS}
    assert margins["z"] == max(margins.values())
    for axis in TOTALS:
        subs = report.budget.axis(axis).category_subtotals
        assert subs["time_constant"] == max(subs.values())
    ok("4", "totals " + ", ".join(f"{a}={totals[a]:.4f}" for a in ("x", "y", "z"))
       + "; x exceeds 1.0, z has the largest margin, constants dominate")


def _rec(name, mean, std, hint):
    return ContributionRecord(source_name=name, axis="x", mean=mean, std=std,
                              kind=SourceKind.TIME_CONSTANT,
                              representation=Representation.SCALAR_MOMENTS,
                              sample_hint=hint)


def test_criterion_05_advanced_vs_analytic():
    # all-Gaussian pair against the closed-form quantile of |N(mu, sigma)|
    mu, sigma = 0.3 + 0.2, math.hypot(1.0, 0.7)
    nd = NormalDist()
    oracle = brentq(lambda x: nd.cdf((x - mu) / sigma) - nd.cdf((-x - mu) / sigma) - 0.997,
                    0.0, mu + 10 * sigma, xtol=1e-12)
    adv = combine_advanced(
        [_rec("g1", 0.3, 1.0, "gaussian"), _rec("g2", 0.2, 0.7, "gaussian")],
        CorrelationSpec(), 0.997, 10**6, seed=2026,
    ).axis("x").total
    assert adv == pytest.approx(oracle, rel=0.01)

    # two uniform(-1, 1) sources against the triangular-convolution quantile
    u_std = 1.0 / math.sqrt(3.0)
    adv_u = combine_advanced(
        [_rec("u1", 0.0, u_std, "uniform"), _rec("u2", 0.0, u_std, "uniform")],
        CorrelationSpec(), 0.997, 10**6, seed=2027,
    ).axis("x").total
    assert adv_u == pytest.approx(TWO_UNIFORM_QUANTILE, rel=0.01)
    ok("5", f"gaussian pair {adv:.4f} vs {oracle:.4f}; "
            f"uniform pair {adv_u:.4f} vs {TWO_UNIFORM_QUANTILE:.4f} (both within 1%)")


def test_criterion_06_norm_oracles():
    t0 = time.monotonic()
    # ||1/(s+1)||_2 = 1/sqrt(2); ||1/(s+2)||_2 = 1/2
    g1 = ss([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    g2 = ss([[-2.0]], [[1.0]], [[1.0]], [[0.0]])
    assert h2_norm(g1) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-6)
    assert h2_norm(g2) == pytest.approx(0.5, rel=1e-6)
    # second order wn=1 zeta=0.5 unity numerator wn^2: sqrt(wn/(4 zeta))
    wn, zeta = 1.0, 0.5
    g3 = ss([[0.0, 1.0], [-wn * wn, -2 * zeta * wn]], [[0.0], [1.0]],
            [[wn * wn, 0.0]], [[0.0]])
    assert h2_norm(g3) == pytest.approx(math.sqrt(wn / (4 * zeta)), rel=1e-6)
    # peak gains: static 3; resonance 1/(2 zeta sqrt(1-zeta^2)); lag peak 1
    from pointbudget.linsys import static_gain

    assert hinf_norm(static_gain(3.0)) == pytest.approx(3.0, rel=1e-4)
    z = 0.1
    g4 = ss([[0.0, 1.0], [-1.0, -2 * z]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    assert hinf_norm(g4) == pytest.approx(1.0 / (2 * z * math.sqrt(1 - z * z)), rel=1e-4)
    assert hinf_norm(g1) == pytest.approx(1.0, rel=1e-4)
    elapsed = time.monotonic() - t0
    assert elapsed < NORM_RUNTIME_S
    ok("6", f"H2 within 1e-6 and peak gain within 1e-4 of analytic values; "
            f"runtime {elapsed:.3f} s < 1 s")


def test_criterion_07_worst_case_toys():
    box = [UncertainParameter("k", 1.5, 1.0, 2.0)]

    def family(point):
        return ss([[-1.0]], [[1.0]], [[point["k"]]], [[0.0]])

    res = wc_variance(family, box, budget=600, seed=3)
    assert res.lower_bound == pytest.approx(math.sqrt(2.0), abs=1e-4)
    assert res.config["k"] == pytest.approx(2.0, abs=1e-6)

    def family2(point):
        return ss([[-point["a"]]], [[1.0]], [[point["k"]]], [[0.0]])

    box2 = [UncertainParameter("k", 1.0, 0.5, 1.5),
            UncertainParameter("a", 1.5, 1.0, 2.0)]
    res2 = wc_dc_gain(family2, box2, budget=600, seed=3)
    assert res2.lower_bound == 1.5  # corner enumeration evaluates it exactly
    ok("7", f"variance toy -> {res.lower_bound:.5f} at k=2; "
            f"steady-state toy -> 1.5 exactly at the (1.5, 1.0) corner")


def test_criterion_08_worst_case_case_study(analysis_two):
    report, elapsed = analysis_two
    nominal = report.budget
    envelope = report.envelope

    # (a) every envelope category subtotal >= its nominal counterpart
    for axis in ("x", "y", "z"):
        nom = nominal.axis(axis).category_subtotals
        env = envelope.axis(axis).category_subtotals
        for cat, val in nom.items():
            assert env[cat] >= val - 1e-12, f"{axis}/{cat}"

    # (b) z-axis worst-case total breaks the requirement by > 4x; x, y hold
    z_total = envelope.axis("z").total
    assert z_total > 4.0
    assert envelope.axis("x").total <= 1.0
    assert envelope.axis("y").total <= 1.0

    # (c) the peak-gain configuration parks a closed-loop resonance of the
    # drive-to-z channel on the drive frequency
    peak = report.worst_case["gain"].peak_frequency_hz["z"]
    assert peak == pytest.approx(DRIVE_FREQ_HZ, rel=0.05)

    # (d) the steady-state-gain search drives bus mass and z inertia to
    # their lower bounds
    dc_cfg = report.worst_case["dc_gain"].result.config
    assert dc_cfg["body_mass"] == pytest.approx(MASS_LOWER, abs=1e-6)
    assert dc_cfg["body_inertia_zz"] == pytest.approx(IZZ_LOWER, abs=1e-6)

    evals = sum(o.result.evaluations for o in report.worst_case.values())
    assert evals <= WC_MAX_EVALUATIONS
    assert elapsed < WC_RUNTIME_S
    ok("8", f"envelope dominates nominal; z total {z_total:.2f} > 4 with x,y <= 1; "
            f"z resonance at {peak:.3f} Hz; steady-state config at (800, 64); "
            f"{evals} evaluations in {elapsed:.0f} s")


def test_criterion_09_no_exact_reproduction_required(analysis_two):
    # exact reproduction of the reference worst-case configurations and
    # 4-digit process sigmas is out of scope; the bounded-tolerance and
    # property checks of criteria 2-4 and 8 stand in for it
    report, _ = analysis_two
    assert report.worst_case["gain"].result.converged
    assert report.worst_case["variance"].result.converged
    ok("9", "bounded-tolerance substitutes in force; searches converged")


def test_criterion_10_byte_identical_reports(ape_config, tmp_path):
    dirs = []
    for name in ("first", "second"):
        report = run(ape_config, samples=100_000)
        outdir = tmp_path / name
        emit(report, outdir, formats=("json", "text", "plotdata"))
        dirs.append(outdir)
    names = ["report.json", "budget.txt", "scenario_resolved.json"]
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    assert not mismatch and not errors
    plot_names = sorted(p.name for p in (dirs[0] / "plotdata").iterdir())
    for name in plot_names:
        assert (dirs[0] / "plotdata" / name).read_bytes() == \
            (dirs[1] / "plotdata" / name).read_bytes()
    ok("10", f"reports byte-identical across reruns ({len(names) + len(plot_names)} files)")
