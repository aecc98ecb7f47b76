"""Golden-data regression: each script renders its fixture and the plotted
series must match the frozen expectations extracted from the figure."""

import json

import numpy as np
import pytest
from conftest import FIXTURES

import plot_attack_surface
import plot_deflection_heatmap
import plot_shap_overlay
import plot_shap_trace
import plot_training_curves
from common import SchemaError, load_csv


def test_training_curves_golden(tmp_path):
    rows = load_csv(FIXTURES / "training_log.csv", plot_training_curves.REQUIRED)
    fig = plot_training_curves.build_figure(rows)
    ax1, ax2 = fig.axes
    reward_line = ax1.lines[0]
    assert list(reward_line.get_xdata()) == [1, 2, 3, 4, 5, 6]
    assert reward_line.get_ydata() == pytest.approx([-1.5, 3.25, 12.0, 15.5, 16.25, 17.0])
    assert ax2.lines[0].get_ydata() == pytest.approx([0.0, 0.0, 0.333, 0.5, 0.6, 0.667])


def test_training_curves_empty_log_renders(tmp_path):
    empty = tmp_path / "log.csv"
    empty.write_text("episode,steps,total_steps,reward,success,rolling_success\n")
    out = tmp_path / "fig.png"
    rc = plot_training_curves.main(["--in", str(empty), "--out", str(out)])
    assert rc == 0
    assert out.exists()
    fig = plot_training_curves.build_figure([])
    assert all(len(ax.lines) == 0 for ax in fig.axes)


def test_training_curves_schema_mismatch_names_columns(tmp_path, capsys):
    bad = tmp_path / "log.csv"
    bad.write_text("episode,reward\n1,2\n")
    rc = plot_training_curves.main(["--in", str(bad), "--out", str(tmp_path / "x.png")])
    assert rc == 1
    assert "rolling_success" in capsys.readouterr().err


def test_attack_surface_golden():
    rows = load_csv(FIXTURES / "sweep.csv", plot_attack_surface.REQUIRED)
    fig = plot_attack_surface.build_figure(rows)
    ax = fig.axes[0]
    assert len(ax.lines) == 2  # one curve per eps
    labels = [line.get_label() for line in ax.lines]
    assert labels == ["eps = 0.5", "eps = 1"]
    assert list(ax.lines[1].get_xdata()) == [1, 10, 20]
    assert ax.lines[1].get_ydata() == pytest.approx([15.0, 45.0, 60.0])


def test_shap_trace_golden():
    rows = load_csv(FIXTURES / "shap_trace.csv", plot_shap_trace.REQUIRED)
    fig = plot_shap_trace.build_figure(rows)
    ax = fig.axes[0]
    by_label = {line.get_label(): line for line in ax.lines if not line.get_label().startswith("_")}
    assert set(by_label) == {"depth image", "bearing", "distance to goal", "yaw rate"}
    assert by_label["depth image"].get_ydata() == pytest.approx([0.01, 0.45, 0.3, -0.05])
    assert by_label["yaw rate"].get_ydata() == pytest.approx([0.21, 0.35, 0.05, 0.10])


def test_deflection_heatmap_golden():
    rows = load_csv(FIXTURES / "probe.csv", plot_deflection_heatmap.REQUIRED)
    fig = plot_deflection_heatmap.build_figure(rows)
    ax = fig.axes[0]
    grid = np.asarray(ax.images[0].get_array())
    assert grid.shape == (3, 3)
    assert np.allclose(grid[0], [0.0, 0.0, 0.0])  # closest gap row
    assert np.allclose(grid[1], [61.5, 62.1, 62.4])


def test_shap_overlay_golden(tmp_path):
    header, records = plot_shap_overlay.read_records(FIXTURES / "full_attributions.uava")
    assert header["count"] == 2
    fig = plot_shap_overlay.build_figure(records[0])
    rgb = np.asarray(fig.axes[0].images[0].get_array())
    frame = records[0][-1]
    pos = np.maximum(frame, 0)
    neg = np.maximum(-frame, 0)
    assert np.allclose(rgb[..., 0], pos / pos.max(), atol=1e-6)  # positive -> red
    assert np.allclose(rgb[..., 1], neg / neg.max(), atol=1e-6)  # negative -> green
    assert np.all(rgb[..., 2] == 0)


def test_scripts_write_images_and_inputs_untouched(tmp_path):
    cases = [
        (plot_training_curves, "training_log.csv"),
        (plot_attack_surface, "sweep.csv"),
        (plot_shap_trace, "shap_trace.csv"),
        (plot_deflection_heatmap, "probe.csv"),
        (plot_shap_overlay, "full_attributions.uava"),
    ]
    for mod, fixture in cases:
        src = FIXTURES / fixture
        before = src.read_bytes()
        out = tmp_path / f"{fixture}.png"
        rc = mod.main(["--in", str(src), "--out", str(out)])
        assert rc == 0 and out.exists() and out.stat().st_size > 0
        assert src.read_bytes() == before  # renders never mutate inputs
