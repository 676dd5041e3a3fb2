"""Tests for SVG figure output."""

import pytest


@pytest.fixture
def intra_only(standard_indices):
    from fieldgen.core.analysis import CurveSet, all_intra_curves

    return CurveSet(intra=all_intra_curves(standard_indices()))


class TestEmitPlots:
    """Tests for the figure set."""

    def test_one_panel_per_curve_plus_asymmetry(self, intra_only, tmp_path):
        from fieldgen.utils.plotting import emit_plots

        paths = emit_plots(tmp_path, intra_only)
        assert len(paths) == 9
        assert paths[0].name == "curve_intra_000.svg"
        assert paths[-1].name == "asymmetry.svg"
        assert all(p.read_text().lstrip().startswith("<?xml") for p in paths)

    def test_rerun_gives_identical_bytes(self, intra_only, tmp_path):
        from fieldgen.utils.plotting import emit_plots

        first = emit_plots(tmp_path / "a", intra_only)
        second = emit_plots(tmp_path / "b", intra_only)
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes(), a.name

    def test_fit_and_baseline_panels(self, standard_indices, tmp_path):
        from fieldgen.core.analysis import baseline_indices, build_curves
        from fieldgen.core.fitting import FitOptions, IndexDataset, PredictionContext, fit_model
        from fieldgen.utils.plotting import emit_plots

        indices = standard_indices(groups=[0, 90])
        fit = fit_model("standard", IndexDataset.from_indices(indices), PredictionContext(), FitOptions(restarts=2))
        paths = emit_plots(tmp_path, build_curves(indices), [fit], baseline_indices(indices))
        names = [p.name for p in paths]
        assert names == [
            "curve_intra_000.svg",
            "curve_intra_090.svg",
            "asymmetry.svg",
            "representation_standard.svg",
            "baseline_index.svg",
        ]

    def test_learning_and_stiffness_panels(self, template, tmp_path):
        from fieldgen.config import DEFAULT_BASELINE_PE_MM
        from fieldgen.core.controllers import ImpedanceScaling
        from fieldgen.core.trial import hand_impedance_profile
        from fieldgen.utils.plotting import emit_plots

        profile = hand_impedance_profile(template, ImpedanceScaling(0.7278, 0.0723))
        learning = {45: [(300, 0.2), (310, 0.5), (320, 0.7)], 90: []}
        paths = emit_plots(tmp_path, learning=learning, impedance=profile, peak_errors_mm=DEFAULT_BASELINE_PE_MM)
        assert [p.name for p in paths] == ["learning_curve.svg", "hand_stiffness.svg"]
        assert "mm" in paths[1].read_text()

    def test_empty_learning_series_are_skipped(self, template, tmp_path):
        from fieldgen.core.controllers import ImpedanceScaling
        from fieldgen.core.trial import hand_impedance_profile
        from fieldgen.utils.plotting import emit_plots

        profile = hand_impedance_profile(template, ImpedanceScaling())
        paths = emit_plots(tmp_path, learning={0: []}, impedance=profile)
        assert [p.name for p in paths] == ["hand_stiffness.svg"]

    def test_nothing_to_plot(self, tmp_path):
        from fieldgen.core.exceptions import EmptyDatasetError
        from fieldgen.utils.plotting import emit_plots

        with pytest.raises(EmptyDatasetError):
            emit_plots(tmp_path)
