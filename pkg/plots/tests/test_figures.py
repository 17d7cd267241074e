"""Figure rendering from step CSVs."""

import math

import pytest

from nudgeplot.figures import FigureSpec, plot_timeseries, read_series

HEADER = "step,t,chi,err_l2,rel_err,proj_err,rel_proj_err,grad_v_sq,repeats"


def write_step_csv(path, n=20, chi=2.0):
    lines = [HEADER]
    for i in range(n):
        t = i * 0.01
        e = math.exp(-3 * t)
        lines.append(f"{i},{t},{chi},{e},{e / 2},{e / 3},{e / 6},{1.0},{0}")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestReadSeries:
    def test_reads_columns(self, tmp_path):
        p = write_step_csv(tmp_path / "a.csv")
        xs, ys = read_series(str(p), "t", "rel_err")
        assert len(xs) == 20
        assert ys[0] == pytest.approx(0.5)

    def test_missing_column_named(self, tmp_path):
        p = write_step_csv(tmp_path / "a.csv")
        with pytest.raises(ValueError, match="'vorticity' not found"):
            read_series(str(p), "t", "vorticity")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError, match="no.csv"):
            read_series(str(tmp_path / "no.csv"), "t", "chi")


class TestPlotTimeseries:
    def test_single_csv_log_scale(self, tmp_path):
        p = write_step_csv(tmp_path / "a.csv")
        out = tmp_path / "fig.png"
        spec = FigureSpec(inputs=[(str(p), "run a")], y_field="chi",
                          out_path=str(out), log_scale=True)
        plot_timeseries(spec)
        assert out.exists() and out.stat().st_size > 0

    def test_three_overlaid_runs_have_three_legend_entries(self, tmp_path):
        inputs = []
        for i, name in enumerate(("algo1", "algo2", "constant")):
            inputs.append((str(write_step_csv(tmp_path / f"{name}.csv", chi=float(i + 1))), name))
        out = tmp_path / "overlay.png"
        spec = FigureSpec(inputs=inputs, y_field="rel_err", out_path=str(out))
        # count legend entries through the axes object by re-plotting
        import matplotlib.pyplot as plt

        plot_timeseries(spec)
        assert out.exists() and out.stat().st_size > 0
        fig, ax = plt.subplots()
        try:
            for path, label in spec.inputs:
                xs, ys = read_series(path, "t", "rel_err")
                ax.plot(xs, ys, label=label)
            handles, labels = ax.get_legend_handles_labels()
            assert labels == ["algo1", "algo2", "constant"]
        finally:
            plt.close(fig)

    def test_tampered_csv_missing_column(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("step,t,err_l2\n0,0.0,1.0\n")
        spec = FigureSpec(inputs=[(str(p), "bad")], y_field="chi", out_path=str(tmp_path / "x.png"))
        with pytest.raises(ValueError, match="'chi' not found"):
            plot_timeseries(spec)

    def test_refuses_overwrite_without_force(self, tmp_path):
        p = write_step_csv(tmp_path / "a.csv")
        out = tmp_path / "fig.png"
        out.write_bytes(b"sentinel")
        spec = FigureSpec(inputs=[(str(p), "a")], y_field="chi", out_path=str(out))
        with pytest.raises(FileExistsError, match="already exists"):
            plot_timeseries(spec)
        assert out.read_bytes() == b"sentinel"
        plot_timeseries(FigureSpec(inputs=[(str(p), "a")], y_field="chi",
                                   out_path=str(out), force=True))
        assert out.stat().st_size > 100

    def test_inputs_never_modified(self, tmp_path):
        p = write_step_csv(tmp_path / "a.csv")
        before = p.read_bytes()
        plot_timeseries(FigureSpec(inputs=[(str(p), "a")], y_field="rel_err",
                                   out_path=str(tmp_path / "y.png")))
        assert p.read_bytes() == before
