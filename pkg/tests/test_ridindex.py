import numpy as np
import pytest

from corpus import make_case, running_example
from ridjoin.errors import AlreadyIndexed, JoinsOnDifferentTables, RidOutOfRange
from ridjoin.ridindex import (
    build_extended_rid_index,
    build_rid_index,
    extended_neighbors,
    find_extended_index,
    find_rid_index,
    neighbors,
)
from ridjoin.ridmat import predefine_join, rid_column_of
from ridjoin.storage import Catalog, ColumnType


def test_csr_fixture_first_join():
    catalog = running_example(indices=True)
    idx = catalog.rid_indices[0]
    assert idx.offsets.tolist() == [0, 3, 4, 5, 5]
    assert idx.values.tolist() == [0, 2, 4, 3, 1]


def test_csr_fixture_second_join():
    catalog = running_example(indices=True)
    idx = catalog.rid_indices[1]
    assert idx.offsets.tolist() == [0, 0, 1, 3, 5]
    assert idx.values.tolist() == [0, 2, 3, 1, 4]


def test_neighbors_fixture():
    catalog = running_example(indices=True)
    idx = catalog.rid_indices[0]
    assert neighbors(idx, 0).tolist() == [0, 2, 4]
    assert neighbors(idx, 1).tolist() == [3]
    assert neighbors(idx, 3).tolist() == []
    with pytest.raises(RidOutOfRange):
        neighbors(idx, 4)
    with pytest.raises(RidOutOfRange):
        neighbors(idx, -1)


def test_extended_forward_fixture():
    catalog = running_example(extended=True)
    fwd = catalog.extended_rid_indices[0]
    f, far = extended_neighbors(fwd, 0)
    assert f.tolist() == [0, 2, 4]
    assert far.tolist() == [1, 2, 3]
    f, far = extended_neighbors(fwd, 1)
    assert f.tolist() == [3] and far.tolist() == [2]
    f, far = extended_neighbors(fwd, 3)
    assert f.tolist() == [] and far.tolist() == []


def test_extended_backward_fixture():
    catalog = running_example(extended=True)
    back = catalog.extended_rid_indices[1]
    f, far = extended_neighbors(back, 2)
    assert f.tolist() == [2, 3]
    assert far.tolist() == [0, 1]


def test_double_build_rejected():
    catalog = running_example(indices=True, extended=True)
    j1, j2 = catalog.predefined_joins
    with pytest.raises(AlreadyIndexed):
        build_rid_index(catalog, j1)
    with pytest.raises(AlreadyIndexed):
        build_extended_rid_index(catalog, j1, j2)


def test_extended_requires_shared_referencing_table():
    catalog = Catalog()
    catalog.create_table("P", [("k", ColumnType.INT64)]).extend([[1]])
    catalog.create_table("F", [("fk", ColumnType.INT64)]).extend([[1]])
    catalog.create_table("G", [("gk", ColumnType.INT64)]).extend([[1]])
    jf = predefine_join(catalog, "F", ("fk",), "P", ("k",))
    jg = predefine_join(catalog, "G", ("gk",), "P", ("k",))
    with pytest.raises(JoinsOnDifferentTables):
        build_extended_rid_index(catalog, jf, jg)


def test_find_helpers():
    catalog = running_example(indices=True)
    j1, j2 = catalog.predefined_joins
    assert find_rid_index(catalog, j1) is catalog.rid_indices[0]
    assert find_extended_index(catalog, j1, j2) is None
    build_extended_rid_index(catalog, j1, j2)
    assert find_extended_index(catalog, j1, j2) is not None
    assert find_extended_index(catalog, j2, j1) is None


def test_empty_referencing_table_index():
    catalog = Catalog()
    catalog.create_table("P", [("k", ColumnType.INT64)]).extend([[1, 2]])
    catalog.create_table("F", [("fk", ColumnType.INT64)])
    join = predefine_join(catalog, "F", ("fk",), "P", ("k",))
    idx = build_rid_index(catalog, join)
    assert idx.offsets.tolist() == [0, 0, 0]
    assert idx.values.tolist() == []


@pytest.mark.parametrize("seed", range(0, 40))
def test_csr_invariants_on_random_catalogs(seed):
    catalog = make_case(seed).catalog
    for idx in catalog.rid_indices:
        p_rows = catalog.table(idx.join.to_table).row_count
        f_rows = catalog.table(idx.join.from_table).row_count
        assert len(idx.offsets) == p_rows + 1
        assert (np.diff(idx.offsets) >= 0).all()
        assert sorted(idx.values.tolist()) == list(range(f_rows))
        pointers = rid_column_of(catalog, idx.join)
        for p_rid in range(p_rows):
            expect = np.nonzero(pointers == p_rid)[0]
            assert neighbors(idx, p_rid).tolist() == expect.tolist()
    for ext in catalog.extended_rid_indices:
        near = rid_column_of(catalog, ext.join_near)
        far = rid_column_of(catalog, ext.join_far)
        p_rows = catalog.table(ext.join_near.to_table).row_count
        assert sorted(ext.f_rids.tolist()) == list(range(len(near)))
        assert (ext.far_rids == far[ext.f_rids]).all()
        for p_rid in range(p_rows):
            f, fa = extended_neighbors(ext, p_rid)
            assert (near[f] == p_rid).all()
            assert (far[f] == fa).all()
