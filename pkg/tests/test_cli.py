"""End-to-end command-line runs against real document files.

Each test builds a small workspace under tmp_path, invokes ``run`` with
argv lists, and checks the exit status plus the artifacts on disk.  The
taxonomy under test: exit 0 = command completed and every check passed,
exit 1 = ran to completion but a verdict/check failed (reports are still
written), exit 2 = bad inputs of any kind.
"""

import json
import math
import os

import pytest

from thermoshift import (
    MarkovMeasure,
    TableMeasure,
    TransitionSystem,
    doubling_map,
    dump_map,
    dump_measure,
    dump_potential,
    dump_system,
    enumerate_words,
    golden_mean_linear,
    load_measure,
    perturbed_doubling,
)
from thermoshift.cli import run
from thermoshift.potentials import LocallyConstantPotential

GOLDEN = TransitionSystem(((1, 1), (1, 0)))
FULL2 = TransitionSystem.full_shift(2)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path.name


def write_config(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"version": 1, **payload}, indent=2, sort_keys=True) + "\n")
    return str(p)


def zero_potential(ts):
    return LocallyConstantPotential(ts, 1, {(s,): 0.0 for s in range(1, ts.k + 1)})


def result_of(out_dir):
    with open(os.path.join(out_dir, "result.json"), encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# sft-check


def test_sft_check_passes_on_mixing_system(tmp_path, capsys):
    sys_name = write(tmp_path / "sys.txt", dump_system(GOLDEN))
    cfg = write_config(tmp_path, {"system": sys_name, "n_max": 6})
    out = str(tmp_path / "out")
    assert run(["sft-check", "--config", cfg, "--out", out]) == 0
    assert "mixing" in capsys.readouterr().out
    res = result_of(out)
    assert res["passed"] is True
    assert res["summary"]["mixing_exponent"] is not None
    with open(os.path.join(out, "counts.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "n,admissible_words,periodic_points"
    assert len(lines) == 7
    # golden mean counts follow the Fibonacci recursion
    assert lines[1] == "1,2,1" and lines[2] == "2,3,3" and lines[3] == "3,5,4"


def test_sft_check_fails_on_periodic_system(tmp_path, capsys):
    sys_name = write(tmp_path / "sys.txt", dump_system(TransitionSystem(((0, 1), (1, 0)))))
    cfg = write_config(tmp_path, {"system": sys_name})
    out = str(tmp_path / "out")
    assert run(["sft-check", "--config", cfg, "--out", out]) == 1
    assert "NOT mixing" in capsys.readouterr().out
    res = result_of(out)
    assert res["passed"] is False
    assert res["summary"]["mixing_exponent"] is None
    # the counts table is still written for a failing verdict
    assert os.path.exists(os.path.join(out, "counts.csv"))


def test_sft_check_n_max_flag_overrides_config(tmp_path):
    sys_name = write(tmp_path / "sys.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": sys_name, "n_max": 12})
    out = str(tmp_path / "out")
    assert run(["sft-check", "--config", cfg, "--out", out, "--n-max", "3"]) == 0
    with open(os.path.join(out, "counts.csv"), encoding="utf-8") as fh:
        assert len(fh.read().splitlines()) == 4


# ---------------------------------------------------------------------------
# pressure


def pressure_workspace(tmp_path):
    sys_name = write(tmp_path / "sys.txt", dump_system(GOLDEN))
    pot_name = write(tmp_path / "phi.txt", dump_potential(zero_potential(GOLDEN)))
    return sys_name, pot_name


def test_pressure_three_routes_agree(tmp_path, capsys):
    sys_name, pot_name = pressure_workspace(tmp_path)
    cfg = write_config(
        tmp_path, {"system": sys_name, "potential": pot_name, "n_max": 24}
    )
    out = str(tmp_path / "out")
    assert run(["pressure", "--config", cfg, "--out", out]) == 0
    res = result_of(out)
    golden_ratio = (1 + math.sqrt(5)) / 2
    for method in ("cylinder", "periodic", "spectral"):
        assert res["summary"][method]["extrapolated"] == pytest.approx(
            math.log(golden_ratio), abs=1e-5
        )
    assert set(res["agreement_gaps"]) == {"cylinder", "periodic"}
    with open(os.path.join(out, "pressure_summary.csv"), encoding="utf-8") as fh:
        assert len(fh.read().splitlines()) == 4
    with open(os.path.join(out, "pressure_finite_n.csv"), encoding="utf-8") as fh:
        body = fh.read().splitlines()[1:]
    assert len(body) == 2 * 24  # spectral contributes no finite-n rows
    assert capsys.readouterr().out.count("pressure[") == 3


def test_pressure_single_method(tmp_path):
    _, pot_name = pressure_workspace(tmp_path)
    cfg = write_config(
        tmp_path, {"potential": pot_name, "method": "spectral"}
    )
    out = str(tmp_path / "out")
    assert run(["pressure", "--config", cfg, "--out", out]) == 0
    res = result_of(out)
    assert list(res["summary"]) == ["spectral"]
    assert res["agreement_gaps"] == {}


def test_pressure_rejects_unknown_method(tmp_path, capsys):
    _, pot_name = pressure_workspace(tmp_path)
    cfg = write_config(tmp_path, {"potential": pot_name, "method": "transfer"})
    assert run(["pressure", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "input error" in capsys.readouterr().err


def test_pressure_rejects_mismatched_system(tmp_path, capsys):
    _, pot_name = pressure_workspace(tmp_path)
    other = write(tmp_path / "full.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": other, "potential": pot_name})
    assert run(["pressure", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "disagrees" in capsys.readouterr().err


def test_pressure_runs_are_byte_identical(tmp_path):
    sys_name, pot_name = pressure_workspace(tmp_path)
    cfg = write_config(
        tmp_path, {"system": sys_name, "potential": pot_name, "n_max": 12}
    )
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert run(["pressure", "--config", cfg, "--out", out1]) == 0
    assert run(["pressure", "--config", cfg, "--out", out2]) == 0
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out2)) and names
    for name in names:
        with open(os.path.join(out1, name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(out2, name), "rb") as fh:
            assert first == fh.read(), name


# ---------------------------------------------------------------------------
# gibbs-build


def test_gibbs_build_emits_a_loadable_measure(tmp_path, capsys):
    table = {(1, 1): 0.0, (1, 2): 1.0, (2, 1): 0.0, (2, 2): 3.0}
    phi = LocallyConstantPotential(FULL2, 2, table)
    pot_name = write(tmp_path / "phi.txt", dump_potential(phi))
    cfg = write_config(tmp_path, {"potential": pot_name, "certify_n_max": 8})
    out = str(tmp_path / "out")
    assert run(["gibbs-build", "--config", cfg, "--out", out]) == 0
    assert "verdict gibbs" in capsys.readouterr().out
    res = result_of(out)
    assert res["passed"] is True
    assert res["summary"]["gibbs_constant"] >= 1.0
    with open(os.path.join(out, "rpf_measure.txt"), encoding="utf-8") as fh:
        rebuilt = load_measure(fh.read())
    assert rebuilt.potential.table == table
    with open(os.path.join(out, "kstar.csv"), encoding="utf-8") as fh:
        assert len(fh.read().splitlines()) == 9


# ---------------------------------------------------------------------------
# weakgibbs-certify


def certify_workspace(tmp_path, pressure):
    mu_name = write(
        tmp_path / "mu.txt", dump_measure(MarkovMeasure.maximal_entropy(GOLDEN))
    )
    pot_name = write(tmp_path / "phi.txt", dump_potential(zero_potential(GOLDEN)))
    return write_config(
        tmp_path,
        {"measure": mu_name, "potential": pot_name, "pressure": pressure, "n_max": 14},
    )


def test_certify_parry_measure_for_zero_potential(tmp_path, capsys):
    golden_ratio = (1 + math.sqrt(5)) / 2
    cfg = certify_workspace(tmp_path, math.log(golden_ratio))
    out = str(tmp_path / "out")
    assert run(["weakgibbs-certify", "--config", cfg, "--out", out]) == 0
    assert "verdict: gibbs" in capsys.readouterr().out
    res = result_of(out)
    assert res["summary"]["verdict"] == "gibbs"
    assert res["summary"]["gibbs_constant"] == pytest.approx(math.sqrt(5), rel=1e-6)


def test_certify_wrong_pressure_is_a_failed_check(tmp_path, capsys):
    golden_ratio = (1 + math.sqrt(5)) / 2
    cfg = certify_workspace(tmp_path, math.log(golden_ratio) + 0.05)
    out = str(tmp_path / "out")
    assert run(["weakgibbs-certify", "--config", cfg, "--out", out]) == 1
    assert "rejected" in capsys.readouterr().out
    res = result_of(out)
    assert res["passed"] is False
    assert res["summary"]["implied_pressure_shift"] == pytest.approx(0.05, rel=0.25)
    # a failed verdict still leaves the evidence behind
    assert os.path.exists(os.path.join(out, "kstar.csv"))


def test_certify_reports_corrupted_masses_as_input_error(tmp_path, capsys):
    masses = {}
    for n in range(1, 6):
        for w in enumerate_words(FULL2, n):
            masses[w] = MarkovMeasure.bernoulli(FULL2, (0.3, 0.7)).mass(w)
    table = TableMeasure(FULL2, 5, masses)
    table.masses[(1, 2)] += 1e-5
    mu_name = write(tmp_path / "mu.txt", dump_measure(table))
    pot_name = write(tmp_path / "phi.txt", dump_potential(zero_potential(FULL2)))
    cfg = write_config(tmp_path, {"measure": mu_name, "potential": pot_name, "pressure": 0.0})
    out = str(tmp_path / "out")
    assert run(["weakgibbs-certify", "--config", cfg, "--out", out]) == 2
    err = capsys.readouterr().err
    assert "masses are not additive at word" in err and "gap" in err
    res = result_of(out)
    assert res["error"] == "measure oracle failed validation"
    assert res["validation"]["additivity_witness"] is not None


def test_certify_rejects_system_mismatch(tmp_path, capsys):
    mu_name = write(
        tmp_path / "mu.txt", dump_measure(MarkovMeasure.bernoulli(FULL2, (0.3, 0.7)))
    )
    pot_name = write(tmp_path / "phi.txt", dump_potential(zero_potential(GOLDEN)))
    cfg = write_config(tmp_path, {"measure": mu_name, "potential": pot_name})
    assert run(["weakgibbs-certify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "different systems" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# psi-verify


def test_psi_verify_markov_measure_passes_all_checks(tmp_path, capsys):
    mu_name = write(
        tmp_path / "mu.txt", dump_measure(MarkovMeasure.maximal_entropy(GOLDEN))
    )
    cfg = write_config(tmp_path, {"measure": mu_name, "n_max": 10})
    out = str(tmp_path / "out")
    assert run(["psi-verify", "--config", cfg, "--out", out]) == 0
    stdout = capsys.readouterr().out
    assert stdout.count("pass") == 5 and "FAIL" not in stdout
    res = result_of(out)
    assert res["passed"] is True
    assert set(res["summary"]["checks"]) == {
        "gibbs_one",
        "pressure_zero",
        "sandwich",
        "asymptotic_additivity",
        "almost_additivity",
    }
    assert all(res["summary"]["checks"].values())
    for artifact in (
        "kstar.csv",
        "pressure_zero.csv",
        "sandwich.csv",
        "asymptotic_additivity.csv",
        "checks.csv",
        "result.json",
    ):
        assert os.path.exists(os.path.join(out, artifact)), artifact
    with open(os.path.join(out, "checks.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 6
    assert all(line.split(",")[1] == "true" for line in lines[1:])


def test_psi_verify_rpf_measure(tmp_path):
    from thermoshift import build_rpf

    table = {(1, 1): 0.0, (1, 2): 1.0, (2, 1): 0.0, (2, 2): 3.0}
    data = build_rpf(LocallyConstantPotential(FULL2, 2, table))
    mu_name = write(tmp_path / "mu.txt", dump_measure(data))
    cfg = write_config(tmp_path, {"measure": mu_name, "n_max": 8, "pressure_n_max": 12})
    out = str(tmp_path / "out")
    assert run(["psi-verify", "--config", cfg, "--out", out]) == 0
    assert result_of(out)["passed"] is True


def test_psi_verify_needs_a_structured_measure(tmp_path, capsys):
    mu = MarkovMeasure.bernoulli(FULL2, (0.5, 0.5))
    masses = {}
    for n in range(1, 7):
        for w in enumerate_words(FULL2, n):
            masses[w] = mu.mass(w)
    mu_name = write(tmp_path / "mu.txt", dump_measure(TableMeasure(FULL2, 6, masses)))
    cfg = write_config(tmp_path, {"measure": mu_name})
    assert run(["psi-verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "reference potential" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# map-check


def test_map_check_linear_map_is_certified(tmp_path, capsys):
    map_name = write(tmp_path / "map.txt", dump_map(golden_mean_linear()))
    cfg = write_config(tmp_path, {"map": map_name, "n_max": 10})
    out = str(tmp_path / "out")
    assert run(["map-check", "--config", cfg, "--out", out]) == 0
    assert "nonincreasing tail" in capsys.readouterr().out
    res = result_of(out)
    assert res["summary"]["kind"] == "piecewise_linear"
    assert res["summary"]["certified"] is True
    with open(os.path.join(out, "ujr.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "n,m_value"
    assert len(lines) == 11


def test_map_check_general_map_samples_with_seed(tmp_path):
    map_name = write(
        tmp_path / "map.txt",
        dump_map(perturbed_doubling(0.8), builtin="perturbed-doubling", params={"c": 0.8}),
    )
    cfg = write_config(
        tmp_path, {"map": map_name, "n_max": 12, "sample_size": 20, "seed": 5}
    )
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert run(["map-check", "--config", cfg, "--out", out1]) == 0
    assert run(["map-check", "--config", cfg, "--out", out2]) == 0
    res = result_of(out1)
    assert res["summary"]["kind"] == "general"
    assert res["summary"]["certified"] is False
    assert res["summary"]["last_m"] > 0.0
    with open(os.path.join(out1, "ujr.csv"), encoding="utf-8") as fh:
        header = fh.readline().rstrip()
    assert header == "n,m_value,sampling_spread"
    for name in ("ujr.csv", "result.json"):
        with open(os.path.join(out1, name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(out2, name), "rb") as fh:
            assert first == fh.read(), name


# ---------------------------------------------------------------------------
# spectrum


def spectrum_workspace(tmp_path):
    map_name = write(tmp_path / "map.txt", dump_map(doubling_map()))
    mu_name = write(
        tmp_path / "mu.txt", dump_measure(MarkovMeasure.bernoulli(FULL2, (0.3, 0.7)))
    )
    return map_name, mu_name


def test_spectrum_with_alpha_count_crosschecks_legendre(tmp_path, capsys):
    map_name, mu_name = spectrum_workspace(tmp_path)
    cfg = write_config(
        tmp_path,
        {
            "map": map_name,
            "measures": [mu_name],
            "alpha_count": 3,
            "step": 0.01,
            "delta": 0.01,
        },
    )
    out = str(tmp_path / "out")
    assert run(["spectrum", "--config", cfg, "--out", out]) == 0
    assert "max deviation vs legendre" in capsys.readouterr().out
    res = result_of(out)
    assert res["summary"]["legendre_p"] == 0.3
    assert res["summary"]["max_deviation_vs_legendre"] < 0.05
    assert res["summary"]["comparison_flagged"] is False
    with open(os.path.join(out, "spectrum.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    # one variational and one legendre row per level
    assert len(lines) == 1 + 2 * 3
    assert sum(",variational," in ln for ln in lines) == 3
    assert sum(",legendre," in ln for ln in lines) == 3


def test_spectrum_with_explicit_alpha_grid(tmp_path):
    map_name, mu_name = spectrum_workspace(tmp_path)
    cfg = write_config(
        tmp_path,
        {
            "map": map_name,
            "measures": [mu_name],
            "alpha_grid": [1.0, 0.4],
            "step": 0.01,
            "delta": 0.01,
        },
    )
    out = str(tmp_path / "out")
    assert run(["spectrum", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "spectrum.csv"), encoding="utf-8") as fh:
        rows = [ln.split(",") for ln in fh.read().splitlines()[1:]]
    variational = [r for r in rows if r[2] == "variational"]
    assert variational[0][3] == "true"  # alpha = 1 is attainable
    assert variational[1][3] == "false"  # alpha = 0.4 is below the spectrum
    assert variational[1][1] == ""


def test_spectrum_alpha_grid_arity_must_match_measures(tmp_path, capsys):
    map_name, mu_name = spectrum_workspace(tmp_path)
    cfg = write_config(
        tmp_path,
        {"map": map_name, "measures": [mu_name], "alpha_grid": [[1.0, 0.9]]},
    )
    assert run(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "one level per measure" in capsys.readouterr().err


def test_spectrum_needs_alpha_information(tmp_path, capsys):
    map_name, _ = spectrum_workspace(tmp_path)
    mu_name = write(
        tmp_path / "mk.txt", dump_measure(MarkovMeasure.maximal_entropy(GOLDEN))
    )
    gm = write(tmp_path / "gm.txt", dump_map(golden_mean_linear()))
    cfg = write_config(
        tmp_path, {"map": gm, "measures": [mu_name], "alpha_count": 3}
    )
    assert run(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "alpha_grid" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# argument and config plumbing


@pytest.mark.parametrize(
    "flag,value,fragment",
    [
        ("--threads", "0", "--threads"),
        ("--n-max", "0", "--n-max"),
        ("--tol", "0.0", "--tol"),
    ],
)
def test_flag_validation(tmp_path, capsys, flag, value, fragment):
    sys_name = write(tmp_path / "sys.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": sys_name})
    assert run(["sft-check", "--config", cfg, flag, value]) == 2
    assert fragment in capsys.readouterr().err


def test_threads_flag_is_accepted(tmp_path):
    sys_name = write(tmp_path / "sys.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": sys_name})
    assert run(["sft-check", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "4"]) == 0


def test_missing_config_is_an_input_error(tmp_path, capsys):
    assert run(["sft-check", "--config", str(tmp_path / "nope.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_missing_document_reference(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n_max": 3})
    assert run(["sft-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "missing the 'system' document" in capsys.readouterr().err


def test_unreadable_document(tmp_path, capsys):
    cfg = write_config(tmp_path, {"system": "ghost.txt"})
    assert run(["sft-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "cannot read system document" in capsys.readouterr().err


def test_malformed_document_is_an_input_error(tmp_path, capsys):
    sys_name = write(tmp_path / "sys.txt", "thermoshift-system v1\nalphabet 2\nrow 1\n")
    cfg = write_config(tmp_path, {"system": sys_name})
    assert run(["sft-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "system document" in capsys.readouterr().err


def test_default_out_dir_sits_beside_config(tmp_path):
    nest = tmp_path / "work"
    nest.mkdir()
    sys_name = write(nest / "sys.txt", dump_system(FULL2))
    cfg = write_config(nest, {"system": sys_name, "n_max": 2})
    assert run(["sft-check", "--config", cfg]) == 0
    assert (nest / "thermoshift-out" / "result.json").exists()


def test_config_out_field_is_respected(tmp_path):
    sys_name = write(tmp_path / "sys.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": sys_name, "n_max": 2, "out": "here"})
    assert run(["sft-check", "--config", cfg]) == 0
    assert (tmp_path / "here" / "result.json").exists()


def test_result_json_records_input_hashes(tmp_path):
    sys_name = write(tmp_path / "sys.txt", dump_system(FULL2))
    cfg = write_config(tmp_path, {"system": sys_name, "n_max": 2})
    out = str(tmp_path / "out")
    assert run(["sft-check", "--config", cfg, "--out", out]) == 0
    res = result_of(out)
    assert set(res["inputs"]) == {"cfg.json", "sys.txt"}
    assert all(len(h) == 64 for h in res["inputs"].values())
