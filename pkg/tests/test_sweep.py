import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entswap.errors import ConfigError, IoError
from entswap.measures import concurrence_pure, l1_coherence, predictability
from entswap.qstate import partial_trace
from entswap.sweep import (
    CONFIG_TEMPLATE,
    CSV_HEADER,
    Record,
    SweepConfig,
    build_config,
    emit,
    marginal_bloch,
    parse_config_text,
    prepare_pair,
    read_csv,
    run_fig1,
    run_fig2,
    table_lookup,
    to_csv,
)

GRID = tuple(np.round(np.linspace(0.03, 0.97, 11), 12))


def theory(**kw):
    return SweepConfig(modes=("theory",), **kw)


# ---------------------------------------------------------------- config


def test_default_grid_and_clamp():
    cfg = SweepConfig()
    assert len(cfg.q_values) == 21
    assert cfg.q_values[0] == 0.03 and cfg.q_values[-1] == 0.97
    assert cfg.q_values[10] == pytest.approx(0.5)
    t = theory()
    assert t.q_values[0] == 0.0 and t.q_values[-1] == 1.0


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"q_values": ()}, "q_values"),
        ({"q_values": (0.2, 1.2)}, "q_values"),
        ({"preparation": "x"}, "preparation"),
        ({"p_rule": "?"}, "p_rule"),
        ({"p_rule": "explicit", "p_values": (0.1,), "q_values": (0.1, 0.2)}, "p_values"),
        ({"modes": ("theory", "magic")}, "modes"),
        ({"modes": ()}, "modes"),
        ({"shots": 0}, "shots"),
        ({"workers": 0}, "workers"),
    ],
)
def test_config_validation(kw, field):
    with pytest.raises(ConfigError) as e:
        SweepConfig(**kw)
    assert e.value.field == field


def test_p_rules():
    assert SweepConfig(q_values=(0.3,), modes=("theory",)).p_of(0) == pytest.approx(0.7)
    assert SweepConfig(q_values=(0.3,), modes=("theory",), p_rule="q").p_of(0) == 0.3
    cfg = SweepConfig(q_values=(0.3,), modes=("theory",), p_rule="explicit", p_values=(0.9,))
    assert cfg.p_of(0) == 0.9


@pytest.mark.parametrize("prep", ["computational", "hadamard"])
@given(p=st.floats(0, 1))
def test_marginal_bloch_matches_prepared_state(prep, p):
    s = prepare_pair(p, prep)
    for q in (0, 1):
        red = partial_trace(s, {q})
        b = marginal_bloch(p, prep)
        assert abs(predictability(red) - abs(b.r_z)) <= 1e-12
        assert abs(l1_coherence(red) - math.hypot(b.r_x, b.r_y)) <= 1e-12
    assert abs(concurrence_pure(s) - 2 * math.sqrt(p * (1 - p))) <= 1e-12


# ---------------------------------------------------------------- fig1 theory


def test_fig1_theory_examples():
    tab = run_fig1(theory(q_values=(0.5, 0.9)))
    assert table_lookup(tab, 0.5, "C_C", "theory").value == pytest.approx(0, abs=1e-15)
    assert table_lookup(tab, 0.5, "E_AC", "theory").value == pytest.approx(1, abs=1e-15)
    assert table_lookup(tab, 0.9, "C_C", "theory").value == pytest.approx(0.8, abs=1e-12)
    assert table_lookup(tab, 0.9, "E_AC", "theory").value == pytest.approx(0.6, abs=1e-12)
    assert table_lookup(tab, 0.9, "P_C", "theory").value == 0
    assert all(r.stderr is None for r in tab)


def test_fig1_theory_computational_swaps_roles():
    tab = run_fig1(theory(q_values=(0.2,), preparation="computational"))
    assert table_lookup(tab, 0.2, "P_C", "theory").value == pytest.approx(0.6, abs=1e-12)
    assert table_lookup(tab, 0.2, "C_C", "theory").value == 0


def test_fig1_theory_whole_grid():
    tab = run_fig1(theory(q_values=GRID))
    for q in GRID:
        assert abs(table_lookup(tab, q, "C_C", "theory").value - abs(2 * q - 1)) <= 1e-12
        assert table_lookup(tab, q, "P_C", "theory").value == 0
        assert abs(table_lookup(tab, q, "E_AC", "theory").value - 2 * math.sqrt(q * (1 - q))) <= 1e-12


def test_fig1_noisy_point_q025():
    cfg = SweepConfig(q_values=(0.25,), modes=("noisy_sim",), seed=3)
    r = table_lookup(run_fig1(cfg), 0.25, "C_C", "noisy_sim")
    assert abs(r.value - 0.5) <= 0.05
    assert r.stderr is not None and 0 < r.stderr < 0.05


# ---------------------------------------------------------------- fig2 theory


def test_fig2_theory_examples():
    tab = run_fig2(theory(q_values=(0.25, 0.5)))
    for name in ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"):
        assert table_lookup(tab, 0.5, f"E_{name}", "theory").value == pytest.approx(1, abs=1e-12)
    assert table_lookup(tab, 0.5, "prob_identity", "theory").value == pytest.approx(0, abs=1e-12)
    assert table_lookup(tab, 0.25, "E_PhiMinus", "theory").value == pytest.approx(0.6, abs=1e-12)
    assert table_lookup(tab, 0.25, "E_PsiMinus", "theory").value == pytest.approx(0.6, abs=1e-12)
    assert table_lookup(tab, 0.25, "prob_identity", "theory").value == pytest.approx(0.25, abs=1e-12)


@given(q=st.floats(0.001, 0.999))
def test_fig2_theory_invariants(q):
    tab = run_fig2(theory(q_values=(q,)))
    q = tab[0].q
    # exact up to a few ulps of the floating-point evaluation
    assert abs(table_lookup(tab, q, "E_PhiPlus", "theory").value - 1) <= 1e-15
    assert abs(table_lookup(tab, q, "E_PsiPlus", "theory").value - 1) <= 1e-15
    e = 2 * q * (1 - q) / (q * q + (1 - q) ** 2)
    assert abs(table_lookup(tab, q, "E_PhiMinus", "theory").value - e) <= 1e-12
    ident = table_lookup(tab, q, "prob_identity", "theory").value
    assert abs(ident - table_lookup(tab, q, "C_C_sq", "theory").value) <= 1e-12
    assert abs(ident - (2 * q - 1) ** 2) <= 1e-12


def test_fig2_theory_endpoint_outcomes_absent():
    tab = run_fig2(theory(q_values=(0.0,)))
    # product inputs: the maximally entangled outcomes never occur
    for name in ("PhiPlus", "PsiPlus"):
        r = table_lookup(tab, 0.0, f"E_{name}", "theory")
        assert r.value is None and "absent" in r.flags
        assert table_lookup(tab, 0.0, f"Pr_{name}", "theory").value == pytest.approx(0, abs=1e-15)
    assert table_lookup(tab, 0.0, "E_PhiMinus", "theory").value == 0


def test_fig2_ideal_q025():
    cfg = SweepConfig(q_values=(0.25,), modes=("ideal_sim",), seed=0)
    tab = run_fig2(cfg)
    assert table_lookup(tab, 0.25, "E_PhiPlus", "ideal_sim").value >= 0.95
    assert abs(table_lookup(tab, 0.25, "E_PhiMinus", "ideal_sim").value - 0.6) <= 0.07
    r = table_lookup(tab, 0.25, "Pr_PhiPlus", "ideal_sim")
    assert abs(r.value - 0.1875) <= 4 * r.stderr


def test_fig2_low_statistics_flag_keeps_value():
    cfg = SweepConfig(q_values=(0.03,), modes=("ideal_sim",), shots=400, seed=1)
    tab = run_fig2(cfg)
    # Pr(Phi+) ~ 0.015 at q=0.03, so ~6 of 400 shots per setting land there
    r = table_lookup(tab, 0.03, "E_PhiPlus", "ideal_sim")
    assert "low_statistics" in r.flags and r.value is not None
    assert "low_statistics" not in table_lookup(tab, 0.03, "E_PhiMinus", "ideal_sim").flags


@pytest.mark.slow
def test_shots_convergence_median_error():
    q, target = 0.25, 0.6
    err = {}
    for shots in (2**13, 2**17):
        errs = []
        for seed in range(100):
            cfg = SweepConfig(q_values=(q,), modes=("ideal_sim",), shots=shots, seed=seed, jackknife_blocks=2)
            errs.append(abs(table_lookup(run_fig2(cfg), q, "E_PhiMinus", "ideal_sim").value - target))
        err[shots] = np.median(errs)
    assert err[2**17] < err[2**13]


def test_workers_do_not_change_output():
    cfg = SweepConfig(q_values=(0.1, 0.5, 0.8), modes=("theory", "ideal_sim"), shots=512, seed=5, jackknife_blocks=2)
    one = to_csv(run_fig2(cfg))
    two = to_csv(run_fig2(SweepConfig(**{**cfg.__dict__, "workers": 2})))
    assert one == two


def test_determinism_and_seed_sensitivity():
    cfg = SweepConfig(q_values=(0.3,), modes=("noisy_sim",), shots=1024, seed=7)
    assert to_csv(run_fig1(cfg)) == to_csv(run_fig1(cfg))
    other = SweepConfig(q_values=(0.3,), modes=("noisy_sim",), shots=1024, seed=8)
    assert to_csv(run_fig1(cfg)) != to_csv(run_fig1(other))


def test_rows_sorted():
    tab = run_fig2(SweepConfig(q_values=(0.9, 0.1), modes=("theory", "ideal_sim"), shots=256, jackknife_blocks=2))
    assert tab == sorted(tab, key=Record.sort_key)


# ---------------------------------------------------------------- emit


def test_emit_empty_is_header_only():
    assert emit([], "csv", None) == ",".join(CSV_HEADER) + "\n"


def test_emit_one_theory_row():
    text = emit([Record(0.5, "C_C", "theory", 0.0)], "csv", "-")
    lines = text.splitlines()
    assert len(lines) == 2 and lines[1] == "0.5,C_C,theory,0,,"


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20))
def test_csv_round_trip_12_digits(values):
    tab = [Record(0.25, "x", "ideal_sim", v, abs(v) / 7, ("low_statistics",)) for v in values]
    back = read_csv(to_csv(tab))
    for a, b in zip(tab, back):
        assert b.value == float(format(a.value, ".12g"))
        assert b.stderr == float(format(a.stderr, ".12g"))
        assert b.flags == a.flags
    assert to_csv(back) == to_csv(tab)


def test_json_mirrors_csv():
    tab = run_fig2(theory(q_values=(0.0, 0.4)))
    recs = json.loads(emit(tab, "json", None))
    csv_back = read_csv(to_csv(tab))
    assert len(recs) == len(csv_back)
    for j, c in zip(recs, csv_back):
        assert (j["q"], j["quantity"], j["mode"], j["value"], j["stderr"], tuple(j["flags"])) == (
            c.q, c.quantity, c.mode, c.value, c.stderr, c.flags)


def test_emit_writes_file_and_reports_io_errors(tmp_path):
    out = tmp_path / "t.csv"
    text = emit([Record(0.5, "C_C", "theory", 0.0)], "csv", out)
    assert out.read_text() == text
    with pytest.raises(IoError):
        emit([], "csv", tmp_path / "missing" / "t.csv")
    with pytest.raises(ConfigError):
        emit([], "xml", None)


# ---------------------------------------------------------------- config files


def test_template_parses_to_defaults():
    cfg = build_config(parse_config_text(CONFIG_TEMPLATE))
    assert cfg == SweepConfig()


def test_config_explicit_values_and_overrides():
    text = "[sweep]\nq_values = 0.1, 0.2\nmodes = theory\n[run]\nseed = 4\n[noise]\neps01 = 0.01\n"
    cfg = build_config(parse_config_text(text))
    assert cfg.q_values == (0.1, 0.2) and cfg.seed == 4
    assert cfg.modes == ("theory",) and cfg.noise.eps10 == 0.04


def test_config_unknown_key_reports_line():
    text = "[sweep]\nq_min = 0\n\n[run]\nshotz = 10\n"
    with pytest.raises(ConfigError) as e:
        parse_config_text(text)
    assert e.value.line == 5 and e.value.field == "run.shotz"
    assert "line 5" in str(e.value)


def test_config_bad_value_reports_line():
    with pytest.raises(ConfigError) as e:
        parse_config_text("[run]\nseed = 0\nshots = lots\n")
    assert e.value.line == 3 and e.value.field == "run.shots"


def test_config_semantic_error_points_at_file_line():
    with pytest.raises(ConfigError) as e:
        build_config(parse_config_text("[sweep]\npreparation = diagonal\n"))
    assert e.value.line == 2 and e.value.field == "sweep.preparation"
    with pytest.raises(ConfigError) as e:
        build_config(parse_config_text("[run]\n\n[noise]\neps10 = 0.7\n"))
    assert e.value.line == 4


def test_config_malformed_and_unknown_section():
    with pytest.raises(ConfigError):
        parse_config_text("no section header\n")
    with pytest.raises(ConfigError) as e:
        parse_config_text("[plot]\ncolor = red\n")
    assert e.value.field == "plot"
