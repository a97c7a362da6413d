"""Array catalog tests with an independent brute-force balance oracle."""

import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpltaguchi.arrays import (
    L9,
    L27,
    OrthogonalArray,
    get_array,
    min_runs,
    select_array,
    verify_orthogonality,
)
from rpltaguchi.design import Factor
from rpltaguchi.exceptions import InvalidDesignError, NoFeasibleArrayError
from rpltaguchi.fixtures import REFERENCE_DESIGN_ROWS, REFERENCE_FACTORS


def brute_force_balanced(array, columns):
    """Independent oracle: count levels and level pairs by hand."""
    per_level = array.runs // array.levels
    per_pair = array.runs // array.levels**2
    for c in columns:
        counts = Counter(int(v) for v in array.column(c))
        if set(counts) != set(range(1, array.levels + 1)):
            return False
        if any(n != per_level for n in counts.values()):
            return False
    for ca, cb in itertools.combinations(columns, 2):
        pair_counts = Counter(zip(array.column(ca).tolist(), array.column(cb).tolist()))
        if len(pair_counts) != array.levels**2:
            return False
        if any(n != per_pair for n in pair_counts.values()):
            return False
    return True


def test_l9_shape():
    assert L9.runs == 9
    assert L9.columns == 4
    assert L9.levels == 3
    assert set(np.unique(L9.cells)) == {1, 2, 3}


def test_l27_shape():
    assert L27.runs == 27
    assert L27.columns == 13
    assert L27.levels == 3
    assert set(np.unique(L27.cells)) == {1, 2, 3}


def test_l9_fully_balanced_by_brute_force():
    assert brute_force_balanced(L9, range(1, L9.columns + 1))


def test_l27_fully_balanced_by_brute_force():
    assert brute_force_balanced(L27, range(1, L27.columns + 1))


def test_l27_first_columns_reproduce_reference_layout():
    # Mapping cells of columns 1..5 through the reference factor levels must
    # give the published 27-row design verbatim, including row order.
    rows = []
    for i in range(L27.runs):
        rows.append(
            tuple(
                REFERENCE_FACTORS[j].levels[int(L27.cells[i, j]) - 1]
                for j in range(5)
            )
        )
    assert tuple(rows) == REFERENCE_DESIGN_ROWS


def test_l9_matches_standard_tabulation():
    expected = [
        (1, 1, 1, 1),
        (1, 2, 2, 2),
        (1, 3, 3, 3),
        (2, 1, 2, 3),
        (2, 2, 3, 1),
        (2, 3, 1, 2),
        (3, 1, 3, 2),
        (3, 2, 1, 3),
        (3, 3, 2, 1),
    ]
    assert [tuple(int(v) for v in row) for row in L9.cells] == expected


def test_column_index_is_one_based():
    assert list(L9.column(1)) == [1, 1, 1, 2, 2, 2, 3, 3, 3]
    with pytest.raises(ValueError):
        L9.column(0)
    with pytest.raises(ValueError):
        L9.column(5)


def test_get_array_case_insensitive():
    assert get_array("l27") is L27
    assert get_array("L9") is L9
    with pytest.raises(NoFeasibleArrayError):
        get_array("L81")


def three_level_factors(n):
    return [
        Factor(label=chr(ord("A") + i), name=f"f{i}", levels=(1.0 + i, 2.0 + i, 3.0 + i))
        for i in range(n)
    ]


def test_min_runs_formula():
    assert min_runs(three_level_factors(5)) == 11
    assert min_runs(three_level_factors(2)) == 5
    assert min_runs(three_level_factors(1)) == 3
    with pytest.raises(InvalidDesignError):
        min_runs([])


def test_select_array_prefers_smallest_feasible():
    assert select_array(three_level_factors(2)) is L9
    assert select_array(three_level_factors(4)) is L9
    # Five 3-level factors need 11 runs, so L9 is infeasible.
    assert select_array(three_level_factors(5)) is L27
    assert select_array(three_level_factors(13)) is L27


def test_select_array_infeasible_cases():
    with pytest.raises(NoFeasibleArrayError):
        select_array(three_level_factors(14))
    two_level = [Factor(label="A", name="a", levels=(1.0, 2.0))]
    with pytest.raises(NoFeasibleArrayError):
        select_array(two_level)
    mixed = three_level_factors(2) + [Factor(label="Z", name="z", levels=(0.0, 1.0))]
    with pytest.raises(InvalidDesignError):
        select_array(mixed)


def test_verify_orthogonality_passes_catalog():
    for array in (L9, L27):
        report = verify_orthogonality(array)
        assert report.passed
        assert report.failures == ()
        assert report.array_name == array.name
        assert "balanced" in report.to_text()


def test_verify_orthogonality_detects_corruption():
    cells = np.array(L9.cells, copy=True)
    cells[0, 0] = 2  # break the level counts of column 1
    broken = OrthogonalArray(name="L9x", levels=3, cells=cells)
    report = verify_orthogonality(broken)
    assert not report.passed
    assert any("column 1" in msg for msg in report.failures)
    assert "NOT balanced" in report.to_text()


def test_verify_orthogonality_column_validation():
    with pytest.raises(ValueError):
        verify_orthogonality(L9, used_columns=[0, 1])
    with pytest.raises(ValueError):
        verify_orthogonality(L9, used_columns=[1, 1])
    with pytest.raises(ValueError):
        verify_orthogonality(L27, used_columns=[14])


@settings(max_examples=50, deadline=None)
@given(
    st.sets(st.integers(min_value=1, max_value=13), min_size=2, max_size=6).map(sorted)
)
def test_any_l27_column_subset_is_balanced(columns):
    report = verify_orthogonality(L27, used_columns=columns)
    assert report.passed
    assert brute_force_balanced(L27, columns)
