"""Response-table ranking and effect summaries on the reference data."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpltaguchi.design import DesignMatrix, Factor
from rpltaguchi.exceptions import InvalidInputError
from rpltaguchi.fixtures import (
    REFERENCE_RESPONSE_TABLE,
    TOL_SNR_DELTA,
    TOL_SNR_MEAN,
)
from rpltaguchi.snr import SnrVector, snr_vector
from rpltaguchi.tables import effects, response_table


@pytest.fixture(scope="module")
def ref_snr(ref_values):
    return snr_vector([[v] for v in ref_values], "smaller")


class TestReferenceResponseTable:
    def test_level_means(self, ref_design, ref_snr):
        table = response_table(ref_design, ref_snr)
        for label, want in REFERENCE_RESPONSE_TABLE.items():
            row = table.factor(label)
            for got, mean in zip(row.level_means, want["means"]):
                assert got == pytest.approx(mean, abs=TOL_SNR_MEAN), label

    def test_deltas_and_ranks(self, ref_design, ref_snr):
        table = response_table(ref_design, ref_snr)
        for label, want in REFERENCE_RESPONSE_TABLE.items():
            row = table.factor(label)
            assert row.delta == pytest.approx(want["delta"], abs=TOL_SNR_DELTA), label
            assert row.rank == want["rank"], label
        assert not table.has_ties
        assert [f.label for f in table.by_rank] == ["C", "D", "B", "A", "E"]

    def test_metric_tag_and_text(self, ref_design, ref_snr):
        table = response_table(ref_design, ref_snr)
        assert table.metric == "smaller"
        text = table.to_text()
        assert "Response table" in text
        assert "Delta" in text
        rows = table.to_csv_rows()
        assert rows[0][:2] == ["factor", "name"]
        assert len(rows) == 6

    def test_unknown_factor(self, ref_design, ref_snr):
        with pytest.raises(KeyError):
            response_table(ref_design, ref_snr).factor("Z")


class TestRankingProperties:
    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=0.1, max_value=20.0),
            min_size=27,
            max_size=27,
        )
    )
    def test_rank_follows_descending_delta(self, ref_design, values):
        snr = snr_vector([[v] for v in values], "smaller")
        table = response_table(ref_design, snr)
        by_rank = table.by_rank
        assert [f.rank for f in by_rank] == list(range(1, 6))
        deltas = [f.delta for f in by_rank]
        assert deltas == sorted(deltas, reverse=True)

    def test_constant_snr_ties_flagged(self, ref_design):
        snr = SnrVector(metric="smaller", values=(1.5,) * 27)
        table = response_table(ref_design, snr)
        assert table.has_ties
        assert all(f.tied for f in table.factors)
        assert all(f.delta == 0.0 for f in table.factors)
        # equal deltas fall back to label order
        assert [f.label for f in table.by_rank] == ["A", "B", "C", "D", "E"]
        assert "tie" in table.to_text()

    def test_misaligned_snr(self, ref_design):
        with pytest.raises(InvalidInputError):
            response_table(ref_design, SnrVector(metric="smaller", values=(1.0,) * 26))


class TestEffects:
    def test_raw_level_means_of_dominant_factor(self, ref_design, ref_values):
        data = effects(ref_design, ref_values)
        eff = data.main("C")
        assert eff.level_values == (8, 12, 16)
        assert eff.level_counts == (9, 9, 9)
        assert eff.level_means == pytest.approx((3.4084, 1.4689, 1.2370), abs=1e-3)
        assert eff.level_mean_snr is None

    def test_snr_means_attached_when_given(self, ref_design, ref_values, ref_snr):
        data = effects(ref_design, ref_values, snr=ref_snr)
        eff = data.main("D")
        want = REFERENCE_RESPONSE_TABLE["D"]["means"]
        assert eff.level_mean_snr == pytest.approx(want, abs=TOL_SNR_MEAN)

    def test_grand_mean_identity(self, ref_design, ref_values):
        data = effects(ref_design, ref_values)
        grand = np.mean(ref_values)
        assert data.grand_mean == pytest.approx(grand, abs=1e-12)
        for label in ref_design.labels:
            eff = data.main(label)
            weighted = sum(
                n * m for n, m in zip(eff.level_counts, eff.level_means)
            ) / sum(eff.level_counts)
            assert weighted == pytest.approx(grand, abs=1e-9)

    def test_interaction_cells_cover_all_pairs(self, ref_design, ref_values):
        data = effects(ref_design, ref_values)
        inter = data.interaction("A", "B")
        assert len(inter.cells) == 9
        # a 27-run design crosses every 3x3 level pair exactly 3 times
        assert all(cell.count == 3 for cell in inter.cells)
        order_free = data.interaction("B", "A")
        assert order_free.cells == inter.cells

    def test_interaction_cell_mean_hand_checked(self, ref_design, ref_values):
        data = effects(ref_design, ref_values)
        inter = data.interaction("A", "B")
        cell = next(c for c in inter.cells if c.value_a == 20 and c.value_b == 5)
        assert cell.mean == pytest.approx(np.mean(ref_values[:3]), abs=1e-12)

    def test_empty_cell_reported_not_invented(self):
        factors = (
            Factor(label="A", name="a", levels=(1, 2)),
            Factor(label="B", name="b", levels=(10, 20)),
        )
        design = DesignMatrix.from_values(factors, [(1, 10), (1, 20), (2, 10)])
        data = effects(design, [5.0, 7.0, 9.0])
        inter = data.interaction("A", "B")
        missing = next(c for c in inter.cells if c.value_a == 2 and c.value_b == 20)
        assert missing.count == 0
        assert missing.mean is None

    def test_csv_row_builders(self, ref_design, ref_values, ref_snr):
        data = effects(ref_design, ref_values, snr=ref_snr)
        main_rows = data.main_effect_csv_rows()
        assert main_rows[0][0] == "factor"
        assert len(main_rows) == 1 + 5 * 3  # one row per factor level
        inter_rows = data.interaction_csv_rows()
        assert len(inter_rows) == 1 + 10 * 9  # C(5,2) pairs, 9 cells each

    def test_unknown_lookups(self, ref_design, ref_values):
        data = effects(ref_design, ref_values)
        with pytest.raises(KeyError):
            data.main("Z")
        with pytest.raises(KeyError):
            data.interaction("A", "Z")

    def test_misaligned_values(self, ref_design):
        with pytest.raises(InvalidInputError):
            effects(ref_design, [1.0] * 26)
