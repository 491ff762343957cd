from pathlib import Path

import pytest

from figures import MissingColumn, plot_mass_ledger, plot_schlieren, plot_sod_profiles
from figures.cli import main

SAMPLES = Path(__file__).resolve().parents[1] / "samples"
LEDGERS = [SAMPLES / f"ledger_{n}.csv" for n in ("godunov", "mol", "frd", "no_sync")]
PROFILES = [SAMPLES / f"profile_sod_{n}.csv" for n in (96, 192, 384)]
SCHLIEREN = SAMPLES / "schlieren_cylinder_64.csv"


def test_three_kinds_render(tmp_path):
    assert plot_mass_ledger(LEDGERS, tmp_path / "m.png").stat().st_size > 0
    assert plot_sod_profiles(PROFILES, tmp_path / "s.png").stat().st_size > 0
    assert plot_schlieren(SCHLIEREN, tmp_path / "c.png").stat().st_size > 0


def test_sync_separates_from_no_sync():
    import pandas as pd

    on = max(pd.read_csv(p)["defect_mass"].abs().max() for p in LEDGERS[:3])
    off = pd.read_csv(LEDGERS[3])["defect_mass"].abs().max()
    assert on < 1e-12 < off


def test_output_is_reproducible(tmp_path):
    a = plot_mass_ledger(LEDGERS, tmp_path / "a.png").read_bytes()
    b = plot_mass_ledger(LEDGERS, tmp_path / "b.png").read_bytes()
    assert a == b


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "ledger.csv"
    bad.write_text("step,time,dt\n1,0.1,0.1\n")
    with pytest.raises(MissingColumn, match="'mass'"):
        plot_mass_ledger([bad], tmp_path / "x.png")


def test_empty_ledger_is_an_error(tmp_path):
    empty = tmp_path / "ledger.csv"
    empty.write_text(LEDGERS[0].read_text().splitlines()[0] + "\n")
    with pytest.raises(ValueError, match="no rows"):
        plot_mass_ledger([empty], tmp_path / "x.png")


def test_cli(tmp_path, capsys):
    assert main(["sod_profiles", "--in", str(PROFILES[0]), "--out", str(tmp_path / "p.png")]) == 0
    assert main(["mass_ledger", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "q.png")]) == 2
    assert "no such file" in capsys.readouterr().err
