import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from negood.containers import (
    LabelSet,
    MatrixContainer,
    MatrixKind,
    cosine_matrix,
    load_labels,
    load_matrix,
    normalize_rows,
    save_labels,
    save_matrix,
)
from negood.errors import (
    BadMagic,
    DimMismatch,
    EmptyFile,
    EmptyLine,
    NormViolation,
    RangeViolation,
    TruncatedPayload,
    UnsupportedVersion,
    ZeroRow,
)

from oracles import triple_loop_cosine


def unit_rows(rows, dims, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((rows, dims))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return MatrixContainer(MatrixKind.EMBEDDINGS, v.astype(np.float32))


class TestContainerFormat:
    def test_roundtrip_identity(self, tmp_path):
        m = unit_rows(2, 3, seed=0)
        path = tmp_path / "m.negl"
        save_matrix(m, path)
        m2 = load_matrix(path)
        assert m2.kind == m.kind
        assert m2.rows == 2 and m2.dims == 3
        assert np.array_equal(m2.data, m.data)

    def test_header_layout(self, tmp_path):
        m = MatrixContainer(MatrixKind.SIMILARITIES, np.zeros((1, 1), np.float32))
        path = tmp_path / "m.negl"
        save_matrix(m, path)
        raw = path.read_bytes()
        assert len(raw) == 16 + 4
        assert raw[:4] == b"NEGL"
        assert raw[4] == 1  # version
        assert raw[5] == 1  # kind: similarities
        assert raw[6] == 1  # dtype: f32
        assert raw[7] == 0  # reserved
        assert int.from_bytes(raw[8:12], "little") == 1
        assert int.from_bytes(raw[12:16], "little") == 1
        assert raw[16:] == b"\x00\x00\x00\x00"

    def test_payload_size_matches_shape(self, tmp_path):
        m = unit_rows(100, 32, seed=1)
        path = tmp_path / "m.negl"
        save_matrix(m, path)
        assert path.stat().st_size == 16 + 100 * 32 * 4

    def test_analytic_unit_row_loads(self, tmp_path):
        m = MatrixContainer(
            MatrixKind.EMBEDDINGS, np.full((1, 4), 0.5, dtype=np.float32)
        )
        path = tmp_path / "m.negl"
        save_matrix(m, path)
        assert load_matrix(path).rows == 1

    def test_norm_violation_rejected(self, tmp_path):
        bad = MatrixContainer(
            MatrixKind.EMBEDDINGS, np.ones((1, 2), dtype=np.float32)
        )
        with pytest.raises(NormViolation):
            save_matrix(bad, tmp_path / "bad.negl")

    def test_similarity_range_checked(self, tmp_path):
        bad = MatrixContainer(
            MatrixKind.SIMILARITIES, np.array([[1.5]], dtype=np.float32)
        )
        with pytest.raises(RangeViolation):
            save_matrix(bad, tmp_path / "bad.negl")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.negl"
        path.write_bytes(b"XXXX" + bytes(16))
        with pytest.raises(BadMagic):
            load_matrix(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "bad.negl"
        good = tmp_path / "good.negl"
        save_matrix(unit_rows(1, 2, seed=2), good)
        raw = bytearray(good.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(UnsupportedVersion):
            load_matrix(path)

    def test_truncated_payload(self, tmp_path):
        good = tmp_path / "good.negl"
        save_matrix(unit_rows(2, 4, seed=3), good)
        trunc = tmp_path / "trunc.negl"
        trunc.write_bytes(good.read_bytes()[:-4])
        with pytest.raises(TruncatedPayload):
            load_matrix(trunc)

    @settings(max_examples=50, deadline=None)
    @given(
        rows=st.integers(1, 8),
        dims=st.integers(1, 16),
        seed=st.integers(0, 2**31),
    )
    def test_roundtrip_property(self, tmp_path_factory, rows, dims, seed):
        m = unit_rows(rows, dims, seed)
        path = tmp_path_factory.mktemp("rt") / "m.negl"
        save_matrix(m, path)
        again = load_matrix(path)
        assert np.array_equal(again.data, m.data)
        # and the bytes themselves are reproducible
        save_matrix(again, path.with_suffix(".2"))
        assert path.read_bytes() == path.with_suffix(".2").read_bytes()


class TestLabelFiles:
    def test_two_labels(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("cat\ndog\n", encoding="utf-8")
        assert load_labels(path).labels == ("cat", "dog")

    def test_roundtrip_preserves_order(self, tmp_path):
        labels = LabelSet(tuple(f"class_{i:03d}" for i in range(1000)))
        path = tmp_path / "labels.txt"
        save_labels(labels, path)
        assert load_labels(path).labels == labels.labels

    def test_blank_line_rejected(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("cat\n\ndog\n", encoding="utf-8")
        with pytest.raises(EmptyLine):
            load_labels(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyFile):
            load_labels(path)

    def test_bom_rejected(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_bytes(b"\xef\xbb\xbfcat\n")
        with pytest.raises(EmptyLine):
            load_labels(path)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.text(
                st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
                min_size=1,
                max_size=20,
            ),
            min_size=1,
            max_size=30,
        )
    )
    def test_unicode_roundtrip(self, tmp_path_factory, labels):
        path = tmp_path_factory.mktemp("lab") / "labels.txt"
        save_labels(LabelSet(tuple(labels)), path)
        assert list(load_labels(path)) == labels


class TestNormalize:
    def test_three_four_five(self):
        m = MatrixContainer(MatrixKind.EMBEDDINGS, np.array([[3.0, 4.0]], np.float32))
        out = normalize_rows(m)
        np.testing.assert_allclose(out.data, [[0.6, 0.8]], atol=1e-7)

    def test_idempotent(self):
        m = unit_rows(20, 8, seed=4)
        once = normalize_rows(m)
        twice = normalize_rows(once)
        np.testing.assert_allclose(twice.data, once.data, atol=1e-7)

    def test_zero_row(self):
        m = MatrixContainer(
            MatrixKind.EMBEDDINGS, np.array([[0.0, 0.0]], np.float32)
        )
        with pytest.raises(ZeroRow):
            normalize_rows(m)


class TestCosineMatrix:
    def test_same_vector_gives_one(self):
        a = unit_rows(1, 6, seed=5)
        sims = cosine_matrix(a, a)
        assert abs(sims.data[0, 0] - 1.0) <= 1e-6

    def test_orthogonal(self):
        data = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
        m = MatrixContainer(MatrixKind.EMBEDDINGS, data)
        sims = cosine_matrix(m, m)
        assert sims.data[0, 1] == 0.0

    def test_matches_triple_loop_oracle(self):
        a = unit_rows(5, 8, seed=6)
        b = unit_rows(7, 8, seed=7)
        got = cosine_matrix(a, b)
        expected = triple_loop_cosine(
            a.data.astype(np.float64), b.data.astype(np.float64)
        )
        np.testing.assert_allclose(got.data, expected, atol=1e-6)

    def test_self_similarity_symmetric_unit_diagonal(self):
        a = unit_rows(12, 24, seed=8)
        sims = cosine_matrix(a, a).data
        np.testing.assert_allclose(np.diag(sims), 1.0, atol=1e-6)
        np.testing.assert_allclose(sims, sims.T, atol=1e-6)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            cosine_matrix(unit_rows(2, 4, seed=9), unit_rows(2, 5, seed=10))

    def test_thread_count_invariance(self):
        a = unit_rows(33, 17, seed=11)
        b = unit_rows(29, 17, seed=12)
        base = cosine_matrix(a, b, threads=1, block_rows=8).data
        for threads, block in [(2, 8), (8, 8), (8, 3), (1, 100)]:
            other = cosine_matrix(a, b, threads=threads, block_rows=block).data
            assert np.array_equal(base, other)

    def test_output_is_valid_similarities(self):
        sims = cosine_matrix(unit_rows(6, 5, seed=13), unit_rows(4, 5, seed=14))
        assert sims.kind == MatrixKind.SIMILARITIES
        sims.validate()
