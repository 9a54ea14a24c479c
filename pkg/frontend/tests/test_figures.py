import numpy as np
import pytest

from hjbfigures import CsvError, read_table
from hjbfigures.figures import (
    FIGURE_KINDS,
    convergence_curve,
    nonradial_contours,
    radial_profiles,
    regime_trajectories,
    render,
    surface_compare,
    trajectories,
)

from conftest import write_csv


class TestReadTable:
    def test_roundtrip(self, convergence_csv):
        tab = read_table(convergence_csv, required=("R_n", "error"))
        assert tab["R_n"].tolist() == [4.0, 6.0, 8.0, 10.0]

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvError, match="no such file"):
            read_table(tmp_path / "absent.csv")

    def test_missing_column(self, convergence_csv):
        with pytest.raises(CsvError, match="missing column 'zzz'"):
            read_table(convergence_csv, required=("zzz",))

    def test_bad_cell_reports_line(self, tmp_path):
        p = write_csv(tmp_path / "bad.csv", ["a", "b"], [(1, 2), (3, "oops")])
        with pytest.raises(CsvError, match=r"bad\.csv:3: non-numeric"):
            read_table(p)

    def test_short_row_reports_line(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text("a,b\n1,2\n7\n")
        with pytest.raises(CsvError, match=r"short\.csv:3: expected 2 fields"):
            read_table(p)


class TestRadialProfiles:
    def test_grid_is_rows_by_four(self, radial_csvs):
        fig = radial_profiles(radial_csvs)
        assert len(fig.axes) == 3 * 4
        gs = fig.axes[0].get_gridspec()
        assert (gs.nrows, gs.ncols) == (3, 4)

    def test_single_profile(self, radial_csvs):
        fig = radial_profiles(radial_csvs[:1])
        assert fig.axes[0].get_gridspec().nrows == 1


class TestGrid2DFigures:
    def test_surface_compare(self, grid2d_csv):
        fig = surface_compare([grid2d_csv])
        ax = fig.axes[0]
        assert ax.name == "3d"
        # one solid surface plus one wireframe overlay
        assert len(ax.collections) >= 2

    def test_surface_rejects_nan_exact(self, tmp_path):
        rows = [(0.0, 0.0, 1.0, float("nan"), 0.0), (0.0, 1.0, 1.0, 1.0, 0.0),
                (1.0, 0.0, 1.0, 1.0, 0.0), (1.0, 1.0, 1.0, 1.0, 0.0)]
        p = write_csv(tmp_path / "g.csv", ["x", "y", "u", "exact", "abs_err"], rows)
        with pytest.raises(CsvError, match="non-finite"):
            surface_compare([p])

    def test_contours(self, grid2d_csv):
        fig = nonradial_contours([grid2d_csv])
        assert fig.axes[0].get_aspect() == 1.0

    def test_incomplete_grid_rejected(self, tmp_path):
        rows = [(0.0, 0.0, 1.0, 1.0, 0.0), (1.0, 1.0, 1.0, 1.0, 0.0)]
        p = write_csv(tmp_path / "g.csv", ["x", "y", "u", "exact", "abs_err"], rows)
        with pytest.raises(CsvError, match="full"):
            nonradial_contours([p])


class TestTrajectories:
    def test_fan_has_one_line_per_path(self, paths_csv):
        fig = trajectories([paths_csv])
        # 8 paths plus the zero reference line
        assert len(fig.axes[0].lines) == 8 + 1

    def test_regime_figure_two_panels_with_shading(self, regime_paths_csv):
        fig = regime_trajectories([regime_paths_csv])
        assert len(fig.axes) == 2
        for ax in fig.axes:
            assert len(ax.patches) > 0, "background must be shaded by regime"
            assert len(ax.lines) == 5

    def test_regime_figure_rejects_unlabeled(self, paths_csv):
        with pytest.raises(CsvError, match="no regime labels"):
            regime_trajectories([paths_csv])


class TestConvergenceCurve:
    def test_fit_slope_recovered(self, convergence_csv):
        fig = convergence_curve([convergence_csv])
        ax = fig.axes[0]
        assert ax.get_yscale() == "log"
        labels = [ln.get_label() for ln in ax.lines]
        fit = [s for s in labels if s.startswith("fit slope")]
        assert fit and abs(float(fit[0].split()[-1]) + 1.2) < 1e-6


class TestRender:
    @pytest.mark.parametrize("ext", ["png", "pdf"])
    def test_writes_image(self, convergence_csv, tmp_path, ext):
        out = tmp_path / f"fig.{ext}"
        render("convergence_curve", [convergence_csv], out)
        assert out.stat().st_size > 0

    def test_all_kinds_render(
        self, radial_csvs, grid2d_csv, paths_csv, regime_paths_csv, convergence_csv, tmp_path
    ):
        jobs = {
            "radial_profiles": radial_csvs,
            "surface_compare": [grid2d_csv],
            "nonradial_contours": [grid2d_csv],
            "trajectories": [paths_csv],
            "regime_trajectories": [regime_paths_csv],
            "convergence_curve": [convergence_csv],
        }
        assert sorted(jobs) == sorted(FIGURE_KINDS)
        for kind, inputs in jobs.items():
            out = tmp_path / f"{kind}.png"
            render(kind, inputs, out)
            assert out.stat().st_size > 0

    def test_unknown_kind(self, convergence_csv, tmp_path):
        with pytest.raises(CsvError, match="unknown figure kind"):
            render("heatmap", [convergence_csv], tmp_path / "x.png")

    def test_empty_inputs(self, tmp_path):
        with pytest.raises(CsvError, match="at least one"):
            render("trajectories", [], tmp_path / "x.png")


class TestCli:
    def test_success(self, convergence_csv, tmp_path, capsys):
        from hjbfigures.cli import main

        out = tmp_path / "c.png"
        assert main(["--job", "convergence_curve", "--in", convergence_csv, "--out", str(out)]) == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_missing_csv_exits_nonzero(self, tmp_path, capsys):
        from hjbfigures.cli import main

        rc = main(
            ["--job", "trajectories", "--in", str(tmp_path / "gone.csv"), "--out", str(tmp_path / "x.png")]
        )
        assert rc == 2
        err = capsys.readouterr().err
        assert "gone.csv" in err and "no such file" in err

    def test_garbled_csv_names_file_and_line(self, tmp_path, capsys):
        from hjbfigures.cli import main

        p = write_csv(tmp_path / "bad.csv", ["t", "path_id", "x1", "regime"], [(0.0, 0, "x", 1)])
        rc = main(["--job", "trajectories", "--in", str(p), "--out", str(tmp_path / "x.png")])
        assert rc == 2
        assert "bad.csv:2" in capsys.readouterr().err
