"""Hierarchical code error and the two evaluation protocols."""

from fractions import Fraction

import numpy as np
import pytest

from lrd import (
    Descriptor,
    build_index,
    evaluate_holidays,
    evaluate_irma,
    irma_error,
    parse_irma_code,
)

from _reference import reference_irma_error


def random_code(rng):
    chars = "0123456789abcdef*"
    return "".join(rng.choice(list(chars)) for _ in range(13))


class TestParse:
    def test_dashed_code_splits_into_axes(self):
        code = parse_irma_code("1121-127-700-500")
        assert code.axes == ("1121", "127", "700", "500")
        assert code.raw == "1121127700500"

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            parse_irma_code("112112770050")  # 12 characters

    def test_wildcard_accepted(self):
        code = parse_irma_code("112*-127-700-5**")
        assert code.axes[0] == "112*"

    def test_illegal_character_reported_with_position(self):
        with pytest.raises(ValueError, match="position 5"):
            parse_irma_code("11211#7700500")


class TestIrmaError:
    def test_identical_codes(self):
        code = parse_irma_code("1121-127-700-500")
        assert irma_error(code, code) == 0.0

    def test_all_first_positions_wrong_is_exactly_one(self):
        truth = parse_irma_code("1121-127-700-500")
        predicted = parse_irma_code("2121-227-800-600")
        assert irma_error(truth, predicted) == 1.0

    def test_single_late_axis_error_matches_hand_value(self):
        # axis 4 "500" vs "510": positions 2 and 3 wrong out of weights
        # (1, 1/2, 1/3) -> axis error (1/2 + 1/3) / (11/6) = 5/11; mean 5/44
        truth = parse_irma_code("1121-127-700-500")
        predicted = parse_irma_code("1121-127-700-510")
        expected = Fraction(5, 44)
        assert irma_error(truth, predicted) == pytest.approx(float(expected), abs=1e-15)

    def test_wildcard_half_penalty_matches_hand_value(self):
        # axis 1 "1121" vs "1*21": wildcard at position 2, no propagation:
        # 0.5 * (1/2) / (25/12) = 3/25; mean over axes = 3/100
        truth = parse_irma_code("1121-127-700-500")
        predicted = parse_irma_code("1*21-127-700-500")
        assert irma_error(truth, predicted) == pytest.approx(0.03, abs=1e-15)

    def test_bounded_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            a = parse_irma_code(random_code(rng))
            b = parse_irma_code(random_code(rng))
            err = irma_error(a, b)
            assert 0.0 <= err <= 1.0

    def test_matches_independent_oracle_on_random_pairs(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            a = random_code(rng)
            b = random_code(rng)
            got = irma_error(parse_irma_code(a), parse_irma_code(b))
            assert got == pytest.approx(reference_irma_error(a, b), abs=1e-12)

    def test_monotone_in_leading_errors(self):
        # corrupting one more leading position never decreases the error
        rng = np.random.default_rng(2)
        for _ in range(200):
            truth = random_code(rng).replace("*", "0")
            k = int(rng.integers(0, 13))
            base = list(truth)
            for i in range(k):
                base[i] = "z"
            more = list(base)
            if k < 13:
                more[k] = "z"
            e_base = irma_error(parse_irma_code(truth), parse_irma_code("".join(base)))
            e_more = irma_error(parse_irma_code(truth), parse_irma_code("".join(more)))
            assert e_more >= e_base - 1e-12

    def test_branching_validated(self):
        code = parse_irma_code("1121-127-700-500")
        with pytest.raises(ValueError):
            irma_error(code, code, branching=0.0)


def indexed_fixture(rng, codes, digest="eval|cfg"):
    descs = []
    for i, _ in enumerate(codes):
        descs.append(Descriptor(values=rng.random(16), params_digest=digest,
                                source_id=f"db{i:03d}"))
    return descs, build_index(descs, codes)


class TestEvaluateIrma:
    def test_verbatim_queries_score_zero(self):
        rng = np.random.default_rng(3)
        codes = ["1121-127-700-500", "2121-227-800-600", "1123-211-500-000"]
        descs, idx = indexed_fixture(rng, codes)
        queries = [Descriptor(values=d.values, params_digest=d.params_digest,
                              source_id=f"q{i}") for i, d in enumerate(descs)]
        report = evaluate_irma(idx, queries, codes)
        assert report.total_error == 0.0
        assert report.accuracy == 1.0

    def test_toy_ten_query_total_matches_hand_sum(self):
        rng = np.random.default_rng(4)
        base = "1121-127-700-500"
        # ten queries with controlled truth codes; each query duplicates one
        # indexed vector so its first match (and thus its error) is forced
        truths = ([base] * 3
                  + ["1121-127-700-510"] * 3       # error 5/44 each
                  + ["2121-227-800-600"] * 2       # error 1 each
                  + ["1*21-127-700-500"] * 2)      # error 3/100 each
        index_codes = [base] * 10
        descs, idx = indexed_fixture(rng, index_codes)
        queries = [Descriptor(values=d.values, params_digest=d.params_digest,
                              source_id=f"q{i}") for i, d in enumerate(descs)]
        report = evaluate_irma(idx, queries, truths)
        expected = float(3 * Fraction(5, 44) + 2 * 1 + 2 * Fraction(3, 100))
        assert report.total_error == pytest.approx(expected, abs=1e-12)
        assert report.accuracy == pytest.approx(1.0 - expected / 10.0, abs=1e-12)
        hand_sum = sum(reference_irma_error(t, base) for t in truths)
        assert report.total_error == pytest.approx(hand_sum, abs=1e-12)

    def test_missing_label_rejected(self):
        rng = np.random.default_rng(5)
        descs, idx = indexed_fixture(rng, ["1121-127-700-500"])
        with pytest.raises(ValueError):
            evaluate_irma(idx, [descs[0]], ["  "])


class TestEvaluateHolidays:
    def test_identical_partner_gives_full_rate(self):
        rng = np.random.default_rng(6)
        vectors = [rng.random(8) for _ in range(4)]
        db = [Descriptor(values=v, params_digest="c", source_id=f"db{i}")
              for i, v in enumerate(vectors)]
        idx = build_index(db, [str(i) for i in range(4)])
        queries = [Descriptor(values=v, params_digest="c", source_id=f"q{i}")
                   for i, v in enumerate(vectors)]
        report = evaluate_holidays(idx, queries, [str(i) for i in range(4)])
        assert report.true_retrieval_rate == 1.0

    def test_random_labels_near_null_rate(self):
        # with labels independent of geometry, the hit rate concentrates
        # around 1/categories
        rng = np.random.default_rng(7)
        categories = 5
        db_labels = [str(rng.integers(0, categories)) for _ in range(800)]
        db = [Descriptor(values=rng.random(12), params_digest="c", source_id=f"db{i:04d}")
              for i in range(800)]
        idx = build_index(db, db_labels)
        queries = [Descriptor(values=rng.random(12), params_digest="c", source_id=f"q{i:04d}")
                   for i in range(500)]
        q_labels = [str(rng.integers(0, categories)) for _ in range(500)]
        report = evaluate_holidays(idx, queries, q_labels)
        assert abs(report.true_retrieval_rate - 1.0 / categories) <= 0.05

    def test_hit_counting_matches_trivial_oracle(self):
        rng = np.random.default_rng(8)
        db = [Descriptor(values=rng.random(6), params_digest="c", source_id=f"db{i:03d}")
              for i in range(50)]
        db_labels = [str(rng.integers(0, 3)) for _ in range(50)]
        idx = build_index(db, db_labels)
        queries = [Descriptor(values=rng.random(6), params_digest="c", source_id=f"q{i:03d}")
                   for i in range(30)]
        q_labels = [str(rng.integers(0, 3)) for _ in range(30)]
        report = evaluate_holidays(idx, queries, q_labels)

        by_id = dict(zip(idx.ids, idx.labels))
        hits = 0
        for row, qlabel in zip(report.rows, q_labels):
            hits += by_id[row.match_id] == qlabel
        assert report.true_retrieval_rate == hits / 30

    def test_query_inside_index_rejected(self):
        rng = np.random.default_rng(9)
        db = [Descriptor(values=rng.random(6), params_digest="c", source_id="shared")]
        idx = build_index(db, ["0"])
        with pytest.raises(ValueError, match="self-match"):
            evaluate_holidays(idx, db, ["0"])


class TestReportOutput:
    def test_summary_mentions_all_columns(self):
        rng = np.random.default_rng(10)
        codes = ["1121-127-700-500"]
        descs, idx = indexed_fixture(rng, codes)
        queries = [Descriptor(values=descs[0].values, params_digest=descs[0].params_digest,
                              source_id="q0")]
        report = evaluate_irma(idx, queries, codes)
        text = report.summary_text()
        for token in ("total error", "accuracy", "descriptor length", "wall time"):
            assert token in text

    def test_json_and_csv_round_trip(self, tmp_path):
        import csv as csv_mod
        import json

        rng = np.random.default_rng(11)
        codes = ["1121-127-700-500", "1121-127-700-510"]
        descs, idx = indexed_fixture(rng, codes)
        queries = [Descriptor(values=d.values, params_digest=d.params_digest,
                              source_id=f"q{i}") for i, d in enumerate(descs)]
        report = evaluate_irma(idx, queries, codes)
        report.write_json(tmp_path / "r.json")
        report.write_csv(tmp_path / "r.csv")

        payload = json.loads((tmp_path / "r.json").read_text())
        assert payload["totals"]["query_count"] == 2
        assert "timing" in payload and "wall_time_s" in payload["timing"]
        with open(tmp_path / "r.csv", newline="") as fh:
            rows = list(csv_mod.DictReader(fh))
        assert len(rows) == 2
        assert set(rows[0]) == {"query_id", "match_id", "error", "distance"}
