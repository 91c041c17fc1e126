import json

import numpy as np
import pandas as pd
import pytest

from pdquant.main import main
from pdquant.models.mask import BinaryMask, PixelState

pytestmark = pytest.mark.integration


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"


@pytest.fixture
def cli(out_dir):
    """Run the CLI in-process against ``out_dir``."""

    def _run(*argv: str) -> int:
        return main([argv[0], *argv[1:], "-o", str(out_dir)])

    return _run


def read_manifest(out_dir, command):
    return json.loads((out_dir / f"{command}_manifest.json").read_text())


class TestMetricsCommand:
    """Integration tests for the metrics command."""

    def test_all_dry_frame(self, cli, out_dir, write_mask):
        """Test a frame without WET pixels."""
        # Arrange
        path = write_mask(BinaryMask.filled(4, 4, PixelState.DRY, resolution=12.6), "dry.pgm")

        # Act
        code = cli("metrics", str(path))

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "metrics.csv")
        assert frame["theta_dry"].tolist() == [1.0]
        assert frame["rho_cl_pixel"].tolist() == [0.0]
        assert read_manifest(out_dir, "metrics")["exit_code"] == 0

    def test_missing_file_is_reported_and_skipped(self, cli, out_dir, write_mask, block_mask, tmp_path):
        """Test partial failure with one unreadable input."""
        # Arrange
        first = write_mask(block_mask, "a.pgm")
        third = write_mask(block_mask, "c.csv")

        # Act
        code = cli("metrics", str(first), str(tmp_path / "b.pgm"), str(third))

        # Assert
        assert code == 1
        frame = pd.read_csv(out_dir / "metrics.csv")
        assert frame["frame_id"].tolist() == ["a.pgm", "c.csv"]
        manifest = read_manifest(out_dir, "metrics")
        assert manifest["exit_code"] == 1
        assert manifest["errors"][0]["source"].endswith("b.pgm")

    def test_directory_is_read_in_name_order(self, cli, out_dir, write_mask, block_mask, tmp_path):
        """Test directory input with JSON output."""
        # Arrange
        for name in ("f2.pgm", "f1.pgm", "f3.pgm"):
            write_mask(block_mask, f"frames/{name}")

        # Act
        code = cli("metrics", str(tmp_path / "frames"), "--resolution", "2", "--json")

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "metrics.csv")
        assert frame["frame_id"].tolist() == ["f1.pgm", "f2.pgm", "f3.pgm"]
        assert frame["rho_cl_physical"].tolist() == pytest.approx([0.16] * 3)
        payload = json.loads((out_dir / "metrics.json").read_text())
        assert payload["summary"]["frames"] == 3


class TestBubblesCommand:
    """Integration tests for the bubbles command."""

    def test_block_bubble(self, cli, out_dir, write_mask, block_mask):
        """Test one square bubble and its histogram."""
        # Arrange
        path = write_mask(block_mask.with_resolution(10.0), "block.pgm")

        # Act
        code = cli("bubbles", str(path), "--bins", "1")

        # Assert
        assert code == 0
        bubbles = pd.read_csv(out_dir / "bubbles.csv")
        assert bubbles["area_px"].tolist() == [9]
        assert bubbles["perimeter_px"].tolist() == [8]
        histogram = pd.read_csv(out_dir / "histogram.csv")
        assert histogram["count"].tolist() == [1]
        assert histogram["unit"].tolist() == ["um"]

    def test_svg_does_not_change_tables(self, cli, out_dir, write_mask, block_mask):
        """Test that charts are additive."""
        # Arrange
        path = write_mask(block_mask, "block.pgm")
        cli("bubbles", str(path))
        before = (out_dir / "bubbles.csv").read_bytes()

        # Act
        code = cli("bubbles", str(path), "--svg")

        # Assert
        assert code == 0
        assert (out_dir / "histogram.svg").read_text().lstrip().startswith("<?xml")
        assert (out_dir / "bubbles.csv").read_bytes() == before

    def test_groups(self, cli, out_dir, write_mask, block_mask):
        """Test grouped distributions across two labels."""
        # Arrange
        low = write_mask(block_mask, "low.pgm")
        high = write_mask(BinaryMask.from_rows([[1, 0, 1, 1], [0, 0, 1, 1]]), "high.pgm")

        # Act
        code = cli("bubbles", "--group", f"low={low}", "--group", f"high={high}", "--bins", "2")

        # Assert
        assert code == 0
        grouped = pd.read_csv(out_dir / "grouped.csv")
        assert list(grouped.columns) == ["bin_lo", "bin_hi", "low", "high"]
        assert grouped["low"].sum() == 1
        assert grouped["high"].sum() == 2

    def test_json_output(self, cli, out_dir, write_mask, block_mask):
        """Test bubble records, histogram and classes in JSON."""
        # Arrange
        path = write_mask(block_mask.with_resolution(10.0), "block.pgm")

        # Act
        code = cli("bubbles", str(path), "--bins", "1", "--classes", "10", "--json")

        # Assert
        assert code == 0
        payload = json.loads((out_dir / "bubbles.json").read_text())
        assert [b["area_px"] for b in payload["bubbles"]] == [9]
        assert payload["histogram"]["counts"] == [1]
        assert payload["size_classes"]["counts"] == [0, 1]
        assert str(out_dir / "bubbles.json") in read_manifest(out_dir, "bubbles")["outputs"]

    def test_malformed_csv_is_reported_and_skipped(self, cli, out_dir, write_mask, block_mask, tmp_path):
        """Test that a CSV with a non-ASCII digit fails alone."""
        # Arrange
        good = write_mask(block_mask, "a.pgm")
        bad = tmp_path / "b.csv"
        bad.write_text("0,1\n1,\u00b2\n", encoding="utf-8")

        # Act
        code = cli("bubbles", str(good), str(bad))

        # Assert
        assert code == 1
        assert pd.read_csv(out_dir / "bubbles.csv")["frame_id"].tolist() == ["a.pgm"]
        manifest = read_manifest(out_dir, "bubbles")
        assert manifest["errors"][0]["source"].endswith("b.csv")
        assert manifest["errors"][0]["details"]["line"] == 2

    def test_bad_group_label(self, cli, write_mask, block_mask):
        """Test rejection of a label with a space."""
        # Arrange
        path = write_mask(block_mask, "block.pgm")

        # Act & Assert
        assert cli("bubbles", "--group", f"a b={path}") == 2


class TestSimulateCommand:
    """Integration tests for the simulate command."""

    def test_error_matrix(self, cli, out_dir):
        """Test a single-N sweep over 40 radii."""
        # Act
        code = cli("simulate", "--cells", "12.6", "--radii", "5:200:5", "--iters", "20", "--seed", "7", "--json")

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "error_matrix.csv")
        assert len(frame) == 40
        assert frame["R"].tolist() == [5.0 * k for k in range(1, 41)]
        assert set(frame["iterations"]) == {20}
        manifest = read_manifest(out_dir, "simulate")
        assert manifest["seed"] == 7
        assert manifest["config"]["iterations"] == 20

    def test_thread_count_does_not_change_output(self, tmp_path):
        """Test byte-identical matrices for 1 and 3 threads."""
        # Arrange
        argv = ["simulate", "--cells", "10,20", "--radii", "10:50:10", "--iters", "30", "--seed", "3"]

        # Act
        main([*argv, "--threads", "1", "-o", str(tmp_path / "one")])
        main([*argv, "--threads", "3", "-o", str(tmp_path / "three")])

        # Assert
        assert (tmp_path / "one" / "error_matrix.csv").read_bytes() == (tmp_path / "three" / "error_matrix.csv").read_bytes()

    @pytest.mark.parametrize("flags", [["--radii", "5:1:1"], ["--cells", "300"], ["--radii", "600"], ["--iters", "0"]])
    def test_invalid_ranges(self, cli, out_dir, flags):
        """Test usage errors before any compute."""
        # Act
        code = cli("simulate", *flags)

        # Assert
        assert code == 2
        assert read_manifest(out_dir, "simulate")["exit_code"] == 2

    def test_config_file(self, cli, out_dir, tmp_path):
        """Test a sweep configured from a file with a flag override."""
        # Arrange
        config = tmp_path / "run.cfg"
        config.write_text("cell_sizes = 12.6\nradii = 20,40\niterations = 5\nseed = 1\n")

        # Act
        code = cli("simulate", "--config", str(config), "--boundary", "erode")

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "error_matrix.csv")
        assert len(frame) == 2
        assert set(frame["mode"]) == {"erode"}

    def test_unknown_config_key(self, cli, tmp_path):
        """Test rejection of a config file with an unknown key."""
        # Arrange
        config = tmp_path / "run.cfg"
        config.write_text("colour = red\n")

        # Act & Assert
        assert cli("simulate", "--config", str(config)) == 2


class TestConvergenceCommand:
    """Integration tests for the convergence command."""

    def test_trace(self, cli, out_dir):
        """Test one row per milestone with chart and JSON."""
        # Act
        code = cli("convergence", "--cells", "12.6", "--radii", "50", "--milestones", "10,20,30,40", "--svg", "--json")

        # Assert
        assert code == 0
        payload = json.loads((out_dir / "convergence.json").read_text())
        assert [p["iterations"] for p in payload["trace"]] == [10, 20, 30, 40]
        assert (payload["cell_size"], payload["radius"]) == (12.6, 50.0)
        frame = pd.read_csv(out_dir / "convergence.csv")
        assert frame["iterations"].tolist() == [10, 20, 30, 40]
        assert (out_dir / "convergence.svg").exists()

    def test_requires_single_pair(self, cli):
        """Test rejection of more than one (N, R) pair."""
        assert cli("convergence", "--cells", "10,12.6", "--radii", "50", "--milestones", "10") == 2


class TestCalibrateCommand:
    """Integration tests for the calibrate command."""

    @pytest.fixture
    def matrix_path(self, tmp_path):
        """Create a stored two-radius matrix at N = 12.6."""
        main(["simulate", "--cells", "12.6", "--radii", "20,40", "--iters", "10", "-o", str(tmp_path / "sim")])
        return tmp_path / "sim" / "error_matrix.csv"

    def test_histogram_with_matrix(self, cli, out_dir, matrix_path, tmp_path):
        """Test a one-bin histogram against a stored matrix."""
        # Arrange
        histogram = tmp_path / "h.csv"
        histogram.write_text("bin_lo,bin_hi,count\n35,45,3\n")

        # Act
        code = cli("calibrate", "--histogram", str(histogram), "--cell-size", "12.6", "--matrix", str(matrix_path))

        # Assert
        assert code == 0
        table = pd.read_csv(out_dir / "uncertainty_table.csv", dtype=str)
        assert table["S/N"].tolist() == ["1", "weighted_avg"]
        assert table["Matched R (um)"].iloc[0] == "40.0"
        assert float(table["Perimeter PRE (%)"].iloc[1]) == pytest.approx(float(table["Perimeter PRE (%)"].iloc[0]))

    def test_cell_size_missing_from_matrix(self, cli, matrix_path, tmp_path):
        """Test a usage error for an N the matrix lacks."""
        # Arrange
        histogram = tmp_path / "h.csv"
        histogram.write_text("bin_lo,bin_hi,count\n35,45,3\n")

        # Act & Assert
        assert cli("calibrate", "--histogram", str(histogram), "--cell-size", "10", "--matrix", str(matrix_path)) == 2

    def test_masks_with_inline_sweep(self, cli, out_dir, write_mask):
        """Test calibration of masks without a stored matrix."""
        # Arrange
        pixels = np.zeros((20, 20), dtype=bool)
        pixels[2:6, 2:6] = True
        pixels[10:18, 10:18] = True
        path = write_mask(BinaryMask(pixels, resolution=12.6), "frame.pgm")

        # Act
        code = cli("calibrate", str(path), "--radii", "20:60:20", "--iters", "10", "--bins", "2", "--json")

        # Assert
        assert code == 0
        assert (out_dir / "histogram.csv").exists()
        assert (out_dir / "error_matrix_none.csv").exists()
        table = pd.read_csv(out_dir / "uncertainty_table.csv", dtype=str)
        assert table["Frequency"].iloc[-1] == "2"

    def test_mask_without_resolution(self, cli, write_mask, block_mask):
        """Test a usage error when no resolution is known."""
        # Arrange
        path = write_mask(block_mask, "block.pgm")

        # Act & Assert
        assert cli("calibrate", str(path), "--radii", "20", "--iters", "5") == 2

    def test_inputs_are_exclusive(self, cli, write_mask, block_mask, tmp_path):
        """Test rejection of masks combined with a histogram."""
        # Arrange
        path = write_mask(block_mask, "block.pgm")

        # Act & Assert
        assert cli("calibrate", str(path), "--histogram", str(tmp_path / "h.csv"), "--cell-size", "5") == 2


class TestEvaluateCommand:
    """Integration tests for the evaluate command."""

    def test_identical_masks(self, cli, out_dir, write_mask, block_mask):
        """Test perfect agreement."""
        # Arrange
        pred = write_mask(block_mask, "pred.pgm")
        truth = write_mask(block_mask, "truth.csv")

        # Act
        code = cli("evaluate", "--pred", str(pred), "--truth", str(truth), "--json")

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "evaluation.csv")
        for name in ("accuracy", "precision", "recall", "specificity", "f1", "iou", "mcc"):
            assert frame[name].iloc[0] == 1.0
        assert (out_dir / "evaluation.json").exists()

    def test_hand_computed_pair(self, cli, out_dir, write_mask):
        """Test the seven-pixel example."""
        # Arrange
        pred = write_mask(BinaryMask.from_rows([[1, 1, 1, 0, 0, 0, 0]]), "pred.pgm")
        truth = write_mask(BinaryMask.from_rows([[1, 1, 0, 1, 0, 0, 0]]), "truth.pgm")

        # Act
        code = cli("evaluate", "--pred", str(pred), "--truth", str(truth))

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "evaluation.csv")
        assert frame["mcc"].iloc[0] == pytest.approx(0.41666, abs=1e-5)
        assert frame["iou"].iloc[0] == pytest.approx(0.5)

    def test_aggregate_rows(self, cli, out_dir, write_mask, block_mask, tmp_path):
        """Test macro statistics and undefined counts after the frame rows."""
        # Arrange
        wet = BinaryMask.filled(5, 5, PixelState.WET)
        for name, mask in (("a.pgm", wet), ("b.pgm", block_mask)):
            write_mask(mask, f"pred/{name}")
            write_mask(mask, f"truth/{name}")

        # Act
        code = cli("evaluate", "--pred", str(tmp_path / "pred"), "--truth", str(tmp_path / "truth"))

        # Assert
        assert code == 0
        frame = pd.read_csv(out_dir / "evaluation.csv", dtype=str, keep_default_na=False).set_index("frame_id")
        assert list(frame.index[2:]) == ["micro", "macro_mean", "macro_std", "macro_min", "macro_max", "macro_undefined"]
        assert frame.loc["macro_undefined", "mcc"] == "1"
        assert float(frame.loc["macro_min", "mcc"]) == 1.0

    def test_dimension_mismatch_is_reported(self, cli, out_dir, write_mask, block_mask):
        """Test that a mismatched pair fails alone with a diagnostic."""
        # Arrange
        pred = write_mask(block_mask, "pred.pgm")
        truth = write_mask(BinaryMask(np.zeros((4, 5))), "truth.pgm")

        # Act
        code = cli("evaluate", "--pred", str(pred), "--truth", str(truth))

        # Assert
        assert code == 1
        assert "dimensions differ" in read_manifest(out_dir, "evaluate")["errors"][0]["message"]

    def test_unequal_lists(self, cli, write_mask, block_mask):
        """Test a usage error for unpaired inputs."""
        # Arrange
        pred = write_mask(block_mask, "pred.pgm")

        # Act & Assert
        assert cli("evaluate", "--pred", str(pred), str(pred), "--truth", str(pred)) == 2


class TestRerunCommand:
    """Integration tests for replaying a run from its manifest."""

    def test_simulate_replays_byte_identically(self, tmp_path):
        """Test that a replayed sweep writes the same matrix."""
        # Arrange
        first = tmp_path / "first"
        main(["simulate", "--cells", "10,12.6", "--radii", "20,40", "--iters", "25", "--seed", "5", "-o", str(first)])

        # Act
        code = main(["rerun", str(first / "simulate_manifest.json"), "-o", str(tmp_path / "second")])

        # Assert
        assert code == 0
        original = (first / "error_matrix.csv").read_bytes()
        assert (tmp_path / "second" / "error_matrix.csv").read_bytes() == original
        assert read_manifest(tmp_path / "second", "simulate")["seed"] == 5

    def test_replay_uses_resolved_values_not_config_file(self, tmp_path):
        """Test a replay after the config file and environment defaults changed."""
        # Arrange
        config = tmp_path / "run.cfg"
        config.write_text("cell_sizes = 12.6\nradii = 30\niterations = 15\nseed = 2\n")
        first = tmp_path / "first"
        main(["simulate", "--config", str(config), "-o", str(first)])
        config.unlink()

        # Act
        code = main(["rerun", str(first / "simulate_manifest.json"), "-o", str(tmp_path / "second"), "--threads", "2"])

        # Assert
        assert code == 0
        original = (first / "error_matrix.csv").read_bytes()
        assert (tmp_path / "second" / "error_matrix.csv").read_bytes() == original

    def test_convergence_replay(self, tmp_path):
        """Test replaying a convergence trace."""
        # Arrange
        first = tmp_path / "first"
        main(["convergence", "--cells", "12.6", "--radii", "50", "--milestones", "10,20", "-o", str(first)])

        # Act
        code = main(["rerun", str(first / "convergence_manifest.json"), "-o", str(tmp_path / "second")])

        # Assert
        assert code == 0
        original = (first / "convergence.csv").read_bytes()
        assert (tmp_path / "second" / "convergence.csv").read_bytes() == original

    def test_missing_manifest(self, tmp_path):
        """Test a usage error for an absent manifest."""
        assert main(["rerun", str(tmp_path / "absent.json")]) == 2

    def test_invalid_manifest(self, tmp_path):
        """Test a usage error for a file that is not a manifest."""
        # Arrange
        path = tmp_path / "simulate_manifest.json"
        path.write_text("{\"command\": \"simulate\"}\n")

        # Act & Assert
        assert main(["rerun", str(path)]) == 2


class TestParser:
    """Integration tests for argument parsing."""

    def test_help(self, capsys):
        """Test that --help lists the commands and exits 0."""
        # Act
        code = main(["--help"])

        # Assert
        assert code == 0
        assert "simulate" in capsys.readouterr().out

    def test_unknown_command(self):
        """Test an unknown sub-command."""
        assert main(["frobnicate"]) == 2

    def test_missing_command(self):
        """Test an empty command line."""
        assert main([]) == 2
