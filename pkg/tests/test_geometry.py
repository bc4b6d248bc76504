import math
from fractions import Fraction

import numpy as np
import pytest

from diamond_heat.errors import ConfigError, DomainError
from diamond_heat.geometry import (
    Address,
    PairConfig,
    PointArray,
    bundle,
    canonical,
    classify_pair,
    deepest_common_bundle,
    enumerate_cells,
    junction_angles,
    junction_groups,
    junction_level,
    locate,
    project,
    resolution,
    sample_point,
)
from diamond_heat.params import ParameterSequences

SEQ = ParameterSequences((2, 3, 2), (2, 3, 2))


def test_address_parsing_roundtrip():
    a = Address.parse("1/3:1,2")
    assert a.eta_pi == Fraction(1, 3) and a.branches == (1, 2)
    assert Address.from_json(a.to_json()) == a
    r = Address.parse("0.5:2")
    assert r.eta_pi is None and r.eta == 0.5
    assert Address.parse('{"eta_num": 3, "eta_den": 2, "w": [1]}').eta_pi == Fraction(3, 2)
    assert Address.exact(5, 2).eta_pi == Fraction(1, 2)


@pytest.mark.parametrize("text", ["x:1", "1/0:1", "0.3:a", "{bad"])
def test_address_parse_errors(text):
    with pytest.raises((ConfigError, ZeroDivisionError)):
        Address.parse(text)


def test_labels_start_at_one():
    with pytest.raises(DomainError):
        Address.radians(0.1, (0,))


def test_junction_levels():
    assert junction_level(SEQ, Address.exact(0)) == 0
    assert junction_level(SEQ, Address.exact(1, 2)) == 1
    assert junction_level(SEQ, Address.exact(1, 6)) == 2
    assert junction_level(SEQ, Address.radians(0.1)) is None
    assert junction_angles(SEQ, 1) == [Fraction(1, 2), Fraction(3, 2)]
    assert len(junction_angles(SEQ, 2, cumulative=True)) == 12


def test_resolution_of_junction_points():
    # A level-2 junction needs only w_1.
    x = Address.exact(1, 6, (2,))
    assert resolution(SEQ, x) == SEQ.depth
    assert resolution(SEQ, Address.radians(0.1, (1,))) == 1
    assert canonical(SEQ, Address.exact(1, 6, (2, 3, 1))).branches == (2,)


def test_locate_and_lexicographic_junction_cell():
    x = Address.exact(1, 6, (2,))
    c = locate(SEQ, x, 3)
    assert c.theta == 0.0
    assert c.cell.branches == (2, 1, 1) and c.cell.arc == 2
    y = Address.radians(0.1, (1, 2, 1))
    c = locate(SEQ, y, 2)
    assert c.cell.arc == 0 and c.theta == pytest.approx(0.1)
    with pytest.raises(DomainError):
        locate(SEQ, Address.radians(0.1, (1,)), 2)


def test_classification():
    x = Address.radians(0.1, (1, 2, 1))
    assert classify_pair(SEQ, x, Address.radians(0.2, (1, 2, 1)), 3) is PairConfig.SAME_STRAND
    assert classify_pair(SEQ, x, Address.radians(0.2, (1, 2, 2)), 3) is PairConfig.SAME_BUNDLE_DIFFERENT_STRAND
    assert classify_pair(SEQ, x, Address.radians(0.2, (1, 1, 2)), 3) is PairConfig.DIFFERENT_BUNDLE
    assert deepest_common_bundle(SEQ, x, Address.radians(0.2, (1, 1, 2))) == (2, False)
    assert deepest_common_bundle(SEQ, x, Address.radians(0.2, (2, 1, 2))) == (1, False)
    assert deepest_common_bundle(SEQ, x, Address.radians(0.2, (1, 2, 2))) == (3, False)
    assert deepest_common_bundle(SEQ, x, x) == (3, True)
    # Different level-1 arcs: only the base circle is shared.
    assert deepest_common_bundle(SEQ, x, Address.radians(2.0, (1, 2, 1))).level == 0


def test_bundle_and_enumeration():
    x = Address.radians(0.1, (1, 2))
    cells = bundle(SEQ, x, 2)
    assert len(cells) == 3 and all(c.branches[0] == 1 for c in cells)
    all_cells = enumerate_cells(SEQ, 2)
    assert len(all_cells) == SEQ.n_cells(2)
    assert all_cells[0].label(SEQ) == "0/1:1.1"


def test_project():
    x = Address.radians(0.1, (1, 2, 1))
    assert project(x, 1).branches == (1,)
    assert project(x, 5) is x


def test_point_array_matches_scalar_locate():
    rng = np.random.default_rng(4)
    pts = [sample_point(SEQ, rng) for _ in range(50)]
    arr = PointArray.from_addresses(SEQ, pts, 3)
    for k in range(4):
        arc, theta = arr.coords(k)
        for p, a, th, cid in zip(pts, arc, theta, arr.cell_id(k)):
            c = locate(SEQ, p, k)
            assert c.cell.arc == a
            assert th == pytest.approx(c.theta, abs=1e-12)
            assert enumerate_cells(SEQ, k)[cid] == c.cell


def test_junction_groups_counts():
    seq = ParameterSequences.constant(2, 2, 2)
    groups = junction_groups(seq, 1)
    assert len(groups) == 4 and all(g.degree == 4 for g in groups)
    groups = junction_groups(seq, 2)
    # Level-2 junctions glue 2 n_2 ends; older ones glue every strand.
    assert sorted(g.degree for g in groups) == [4] * 8 + [8] * 4
    ends = np.concatenate([np.concatenate([g.starts, g.ends]) for g in groups])
    assert np.array_equal(np.bincount(ends), np.full(seq.n_cells(2), 2))
