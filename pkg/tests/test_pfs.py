import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prevopt.errors import DimensionError, DomainError, FormatVersionError, RangeError, SchemaError
from prevopt.pfs import (
    PFN,
    FeatureDescriptor,
    FeatureSchema,
    as_vector,
    default_schema,
    encode_feature,
    pfn_distance,
    pfn_distance_array,
    sq_pair_distance2,
    squares,
    stack_vectors,
    vector_distance,
)


def reference_distance(a, b):
    """Distance written directly over (mu^2, nu^2, pi^2) triples."""
    (ma, na), (mb, nb) = a, b
    ta = (ma**2, na**2, 1 - ma**2 - na**2)
    tb = (mb**2, nb**2, 1 - mb**2 - nb**2)
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(ta, tb)) / 2)


@st.composite
def pfns(draw):
    mu = draw(st.floats(0, 1))
    nu = draw(st.floats(0, 1)) * math.sqrt(max(0.0, 1 - mu * mu))
    return (mu, nu)


class TestPFN:
    def test_valid(self):
        p = PFN(0.6, 0.8)
        assert p.hesitancy == pytest.approx(0.0, abs=1e-7)
        assert PFN(0, 0).pi == 1.0

    @pytest.mark.parametrize("mu,nu", [(0.8, 0.8), (-0.1, 0.2), (1.1, 0), (float("nan"), 0)])
    def test_invalid(self, mu, nu):
        with pytest.raises(DomainError):
            PFN(mu, nu)

    def test_boundary_tolerance(self):
        PFN(math.sqrt(0.5), math.sqrt(0.5))


class TestDistance:
    def test_identity(self):
        assert pfn_distance((0.3, 0.4), (0.3, 0.4)) == 0

    def test_opposites(self):
        assert pfn_distance(PFN(1, 0), PFN(0, 1)) == pytest.approx(1.0, abs=1e-15)

    def test_full_vs_hesitant(self):
        assert pfn_distance((0.6, 0.8), (0, 0)) == pytest.approx(math.sqrt(1.5392 / 2), abs=1e-12)
        assert pfn_distance((0.6, 0.8), (0, 0)) == pytest.approx(0.87727, abs=1e-5)

    def test_rejects_invalid(self):
        with pytest.raises(DomainError):
            pfn_distance((0.9, 0.9), (0, 0))

    @given(pfns(), pfns())
    def test_matches_reference(self, a, b):
        assert pfn_distance(a, b) == pytest.approx(reference_distance(a, b), abs=1e-12)

    @given(pfns(), pfns())
    def test_squared_space_form(self, a, b):
        d2 = sq_pair_distance2(squares(np.array(a)), squares(np.array(b)))
        assert float(d2) == pytest.approx(pfn_distance(a, b) ** 2, abs=1e-12)

    @given(pfns(), pfns(), pfns())
    def test_metric_properties(self, a, b, c):
        dab, dba = pfn_distance(a, b), pfn_distance(b, a)
        assert dab == dba
        assert 0 <= dab <= 1 + 1e-12
        assert dab <= pfn_distance(a, c) + pfn_distance(c, b) + 1e-9

    def test_array_matches_scalar(self):
        rng = np.random.default_rng(0)
        mu = rng.random(50)
        nu = rng.random(50) * np.sqrt(1 - mu**2)
        a = np.stack([mu, nu], -1)
        b = a[::-1]
        arr = pfn_distance_array(a, b)
        assert np.allclose(arr, [pfn_distance(x, y) for x, y in zip(a, b)], atol=1e-15)


class TestVectorDistance:
    def test_identical(self):
        v = [(0.1, 0.2), (0.5, 0.5)]
        assert vector_distance(v, v) == 0

    def test_single_dimension(self):
        assert vector_distance([(0.6, 0.8)], [(0, 0)]) == pytest.approx(pfn_distance((0.6, 0.8), (0, 0)))

    def test_opposite_vectors(self):
        assert vector_distance([PFN(1, 0), PFN(1, 0)], [PFN(0, 1), PFN(0, 1)]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            vector_distance([(0, 0)], [(0, 0), (1, 0)])

    def test_bad_shape(self):
        with pytest.raises(DimensionError):
            as_vector(np.zeros((2, 3)))

    def test_stack(self):
        arr = stack_vectors([[(0, 1)], [(1, 0)]])
        assert arr.shape == (2, 1, 2)
        with pytest.raises(DimensionError):
            stack_vectors([[(0, 1)], [(1, 0), (0, 0)]])
        with pytest.raises(DimensionError):
            stack_vectors([])


class TestEncoding:
    def test_missing(self):
        p = encode_feature("real", None)
        assert p.as_tuple() == (0.0, 0.0) and p.hesitancy == 1.0

    def test_real(self):
        p = encode_feature("real", 0.5)
        assert p.as_tuple() == (0.5, 0.5)
        assert p.hesitancy == pytest.approx(math.sqrt(0.5))

    def test_binary(self):
        assert encode_feature("binary", 1).as_tuple() == (1.0, 0.0)
        assert encode_feature("binary", 0).as_tuple() == (0.0, 1.0)

    @pytest.mark.parametrize("kind,value,err", [("real", 1.5, RangeError), ("binary", 2, RangeError),
                                                ("text", 0.1, SchemaError)])
    def test_errors(self, kind, value, err):
        with pytest.raises(err):
            encode_feature(kind, value)

    @given(st.floats(0, 1))
    def test_real_mapping_monotone_and_valid(self, v):
        p = encode_feature("real", v)
        assert p.mu == v and p.mu**2 + p.nu**2 <= 1 + 1e-12


class TestSchema:
    def test_default_shape(self):
        s = default_schema()
        assert len(s) == 64
        cats = {d.category for d in s.descriptors}
        assert len(cats) == 5

    def test_roundtrip(self, tmp_path):
        s = default_schema()
        path = tmp_path / "schema.json"
        path.write_text(s.dumps())
        assert FeatureSchema.load(path) == s
        assert path.read_text() == FeatureSchema.load(path).dumps()

    def test_version_rejected(self):
        doc = default_schema().to_dict()
        doc["format_version"] = 99
        with pytest.raises(FormatVersionError):
            FeatureSchema.from_dict(json.loads(json.dumps(doc)))

    def test_duplicates_rejected(self):
        d = FeatureDescriptor("a", "basic_health", "real")
        with pytest.raises(SchemaError):
            FeatureSchema((d, d))

    def test_encode_row(self):
        s = FeatureSchema((FeatureDescriptor("a", "basic_health", "real"),
                           FeatureDescriptor("b", "tcm_syndrome", "binary")))
        row = s.encode_row([None, 1])
        assert row.tolist() == [[0.0, 0.0], [1.0, 0.0]]
        with pytest.raises(DimensionError):
            s.encode_row([0.1])


@settings(max_examples=50)
@given(st.lists(pfns(), min_size=1, max_size=8))
def test_vector_distance_range(vals):
    other = [(b, a) if a * a + b * b <= 1 else (0, 0) for a, b in vals]
    assert 0 <= vector_distance(vals, other) <= 1 + 1e-12
