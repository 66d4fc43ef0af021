import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolog import corpus
from evolog.errors import DataError

from conftest import make_entry, make_review, utc


def jsonl(*records) -> bytes:
    return ("\n".join(json.dumps(r) for r in records) + "\n").encode()


REC_1 = {"review_id": "r1", "app_id": "a", "body": "good",
         "created_at": "2021-01-01T00:00:00Z"}


class TestIngestReviews:
    def test_single_jsonl_record(self):
        rs = corpus.ingest_reviews(jsonl(REC_1), "jsonl")
        assert len(rs) == 1
        r = rs.reviews[0]
        assert (r.review_id, r.app_id, r.body) == ("r1", "a", "good")
        assert r.created_at == utc(2021, 1, 1)

    def test_duplicate_id_names_both_positions(self):
        with pytest.raises(DataError, match=r"records 1 and 2"):
            corpus.ingest_reviews(jsonl(REC_1, REC_1), "jsonl")

    def test_shuffled_timestamps_come_out_sorted(self):
        recs = [
            dict(REC_1, review_id=f"r{i}", created_at=f"2021-01-0{i}T00:00:00Z")
            for i in (1, 2, 3)
        ]
        for perm in itertools.permutations(recs):
            rs = corpus.ingest_reviews(jsonl(*perm), "jsonl")
            stamps = [r.created_at for r in rs.reviews]
            assert stamps == sorted(stamps)
            assert [r.review_id for r in rs.reviews] == ["r1", "r2", "r3"]

    def test_malformed_json_is_positioned(self):
        data = jsonl(REC_1) + b"{broken\n"
        with pytest.raises(DataError, match=r":2:"):
            corpus.ingest_reviews(data, "jsonl", source="reviews.jsonl")

    def test_missing_body_is_positioned(self):
        rec = {k: v for k, v in REC_1.items() if k != "body"}
        with pytest.raises(DataError, match="body"):
            corpus.ingest_reviews(jsonl(rec), "jsonl")

    def test_rating_out_of_range(self):
        with pytest.raises(DataError, match="rating"):
            corpus.ingest_reviews(jsonl(dict(REC_1, rating=6)), "jsonl")

    def test_unknown_format_is_usage_error(self):
        with pytest.raises(DataError, match="unknown review format"):
            corpus.ingest_reviews(b"", "xml")

    def test_csv_round_trip(self):
        csv_data = (
            "review_id,app_id,title,body,rating,created_at\n"
            "r1,a,Nice,Works well,5,2021-03-01T10:00:00Z\n"
            "r2,a,,Crashes on launch,,2021-02-01T10:00:00Z\n"
        ).encode()
        rs = corpus.ingest_reviews(csv_data, "csv")
        assert [r.review_id for r in rs.reviews] == ["r2", "r1"]
        assert rs.reviews[1].rating == 5
        assert rs.reviews[0].rating is None and rs.reviews[0].title is None

    def test_appstore_feed(self):
        feed = {
            "feed": {
                "id": {"label": "https://example.invalid/rss/customerreviews/id=123/json"},
                "entry": [
                    {
                        "id": {"label": "f1"},
                        "title": {"label": "Great"},
                        "content": {"label": "Love the widget"},
                        "im:rating": {"label": "5"},
                        "updated": {"label": "2021-05-01T07:00:00-07:00"},
                    }
                ],
            }
        }
        rs = corpus.ingest_reviews(json.dumps(feed).encode(), "appstore-feed-json")
        r = rs.reviews[0]
        assert r.app_id == "123"
        assert r.created_at == utc(2021, 5, 1, 14)  # normalized to UTC
        assert r.rating == 5

    def test_feed_without_app_id_errors(self):
        feed = {"feed": {"entry": []}}
        with pytest.raises(DataError, match="app id"):
            corpus.ingest_reviews(json.dumps(feed).encode(), "appstore-feed-json")


class TestStripDeveloperResponse:
    def test_chinese_marker(self, default_rules):
        body, resp = corpus.strip_developer_response(
            "Can't upload runs. 开发者回复:已修复", default_rules)
        assert body == "Can't upload runs."
        assert resp == "已修复"

    def test_no_marker_unchanged(self, default_rules):
        body, resp = corpus.strip_developer_response("Love the new dark mode", default_rules)
        assert body == "Love the new dark mode"
        assert resp is None

    def test_marker_at_start_empties_body(self, default_rules):
        body, resp = corpus.strip_developer_response("Developer Response: thanks!", default_rules)
        assert body == ""
        assert resp == "thanks!"

    def test_earliest_marker_wins(self):
        rules = corpus.NormalizationRules(response_markers=("AAA", "BB"))
        body, resp = corpus.strip_developer_response("x BB y AAA z", rules)
        assert body == "x"
        assert resp == "y AAA z"

    @given(st.text(max_size=200))
    def test_idempotent(self, body):
        rules = corpus.NormalizationRules()
        once_body, _ = corpus.strip_developer_response(body, rules)
        twice_body, twice_resp = corpus.strip_developer_response(once_body, rules)
        assert twice_body == once_body
        assert twice_resp is None


class TestNormalizeText:
    def test_emoji_removed(self, default_rules):
        assert corpus.normalize_text("@coach see my plan \U0001F600", default_rules) == \
            "@coach see my plan"

    def test_empty(self, default_rules):
        assert corpus.normalize_text("", default_rules) == ""

    def test_all_symbols_become_empty(self, default_rules):
        assert corpus.normalize_text("#### ^_^", default_rules) == ""

    def test_at_sign_survives(self, default_rules):
        assert "@" in corpus.normalize_text("mail me @support now", default_rules)

    def test_blocklist_cannot_hold_at_sign(self):
        with pytest.raises(ValueError):
            corpus.NormalizationRules(symbol_blocklist=("@",), keep_at_sign=True)

    def test_zwj_sequence_fully_removed(self, default_rules):
        family = "\U0001F468‍\U0001F469‍\U0001F467"
        assert corpus.normalize_text(f"nice {family} app", default_rules) == "nice app"

    def test_exposed_sequence_still_removed(self):
        # deleting the inner emoji exposes a new ^_^ occurrence
        rules = corpus.NormalizationRules()
        assert corpus.normalize_text("^_\U0001F600^ hello", rules) == "hello"

    @given(st.text(max_size=120))
    @settings(max_examples=200)
    def test_idempotent(self, text):
        rules = corpus.NormalizationRules()
        once = corpus.normalize_text(text, rules)
        assert corpus.normalize_text(once, rules) == once

    @given(st.text(alphabet="a@b c#*^_$😀", max_size=60))
    def test_at_sign_preserved_for_every_input(self, text):
        rules = corpus.NormalizationRules()
        if "@" in text:
            assert "@" in corpus.normalize_text(text, rules)


class TestTokenize:
    def test_latin_words(self):
        assert corpus.tokenize("Perfectly compatible with iOS 10") == \
            ["perfectly", "compatible", "with", "ios", "10"]

    def test_empty(self):
        assert corpus.tokenize("") == []

    def test_cjk_bigrams(self):
        assert corpus.tokenize("打开水印") == ["打开", "开水", "水印"]

    def test_single_cjk_char(self):
        assert corpus.tokenize("好") == ["好"]

    def test_mixed_scripts(self):
        assert corpus.tokenize("update 水印 now") == ["update", "水印", "now"]

    def test_edge_punctuation_stripped_interior_kept(self):
        assert corpus.tokenize("iPad, 10/10!") == ["ipad", "10/10"]

    def test_latin_mode_disables_bigrams(self):
        assert corpus.tokenize("打开水印", "latin") == ["打开水印"]

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            corpus.tokenize("x", "klingon")

    @given(st.text(max_size=120))
    def test_deterministic_and_total(self, text):
        assert corpus.tokenize(text) == corpus.tokenize(text)


class TestPreprocessLogs:
    def test_vague_default_pattern(self, default_rules):
        raw = [make_entry("e1", text="Fix some known bugs"),
               make_entry("e2", text="Add watermark toggle")]
        timeline, excluded = corpus.preprocess_logs(raw, default_rules)
        assert [e.entry_id for e in timeline.entries] == ["e2"]
        assert [e.entry_id for e in excluded] == ["e1"]
        assert excluded[0].vague

    def test_duplicate_keeps_lowest_version(self, default_rules):
        raw = [
            make_entry("e2", version="1.3", released=utc(2020, 2, 1), text="same text"),
            make_entry("e1", version="1.2", released=utc(2020, 1, 1), text="same text"),
        ]
        timeline, excluded = corpus.preprocess_logs(raw, default_rules)
        assert [e.entry_id for e in timeline.entries] == ["e1"]
        assert excluded[0].entry_id == "e2"
        assert excluded[0].duplicate_of == "e1"

    def test_empty_input(self, default_rules):
        timeline, excluded = corpus.preprocess_logs([], default_rules)
        assert len(timeline) == 0 and excluded == []

    def test_output_ordered_by_release_then_version(self, default_rules):
        raw = [
            make_entry("b", version="2.0", released=utc(2021, 1, 2), text="second"),
            make_entry("a", version="1.0", released=utc(2021, 1, 1), text="first"),
            make_entry("c", version="1.5", released=utc(2021, 1, 2), text="third"),
        ]
        timeline, _ = corpus.preprocess_logs(raw, default_rules)
        assert [e.entry_id for e in timeline.entries] == ["a", "c", "b"]

    def test_override_keep_beats_pattern(self, default_rules):
        raw = [make_entry("e1", text="Fix some known bugs")]
        timeline, _ = corpus.preprocess_logs(raw, default_rules, overrides={"e1": False})
        assert len(timeline) == 1

    def test_override_vague_forces_exclusion(self, default_rules):
        raw = [make_entry("e1", text="Add watermark toggle")]
        _, excluded = corpus.preprocess_logs(raw, default_rules, overrides={"e1": True})
        assert excluded[0].vague

    def test_empty_after_normalization_is_excluded(self, default_rules):
        raw = [make_entry("e1", text="#### ^_^")]
        timeline, excluded = corpus.preprocess_logs(raw, default_rules)
        assert len(timeline) == 0 and excluded[0].vague

    def test_excluded_count_never_negative(self, default_rules):
        raw = [make_entry(f"e{i}", text=f"feature {i}") for i in range(5)]
        timeline, excluded = corpus.preprocess_logs(raw, default_rules)
        assert len(timeline) + len(excluded) == len(raw)
        assert all(e.vague or e.duplicate_of for e in excluded)


class TestReviewWindow:
    def _timeline(self):
        return corpus.EntryTimeline(
            app_id="app",
            entries=[make_entry("e1", released=utc(2021, 6, 30))],
        )

    def test_review_inside_window_kept(self):
        rs = corpus.ReviewSet("app", [make_review(created=utc(2021, 12, 29))])
        out = corpus.apply_review_window(rs, self._timeline(), 183)
        assert len(out) == 1
        assert out.cutoff == utc(2021, 12, 30)

    def test_review_after_window_dropped(self):
        rs = corpus.ReviewSet("app", [make_review(created=utc(2022, 1, 5))])
        out = corpus.apply_review_window(rs, self._timeline(), 183)
        assert len(out) == 0

    def test_zero_window_keeps_only_pre_release(self):
        rs = corpus.ReviewSet("app", [
            make_review("r1", created=utc(2021, 6, 29)),
            make_review("r2", created=utc(2021, 6, 30)),
            make_review("r3", created=utc(2021, 7, 1)),
        ])
        out = corpus.apply_review_window(rs, self._timeline(), 0)
        assert [r.review_id for r in out.reviews] == ["r1", "r2"]

    def test_empty_timeline_errors(self):
        rs = corpus.ReviewSet("app", [make_review()])
        with pytest.raises(DataError, match="empty"):
            corpus.apply_review_window(rs, corpus.EntryTimeline("app", []), 183)


class TestPreprocessReviews:
    def test_empty_bodies_dropped_order_stable(self, default_rules):
        rs = corpus.ReviewSet("app", [
            make_review("r1", body="solid update", created=utc(2021, 1, 1)),
            make_review("r2", body="\U0001F600", created=utc(2021, 1, 2)),
            make_review("r3", body="@coach plan", created=utc(2021, 1, 3)),
        ])
        out, dropped = corpus.preprocess_reviews(rs, default_rules)
        assert dropped == 1
        assert [r.review_id for r in out.reviews] == ["r1", "r3"]

    def test_developer_response_captured(self, default_rules):
        rs = corpus.ReviewSet("app", [
            make_review("r1", body="Sync broken. Developer Response: fixed in 2.1"),
        ])
        out, _ = corpus.preprocess_reviews(rs, default_rules)
        assert out.reviews[0].body == "Sync broken."
        assert out.reviews[0].developer_response == "fixed in 2.1"


class TestVersionKey:
    @pytest.mark.parametrize("lower,higher", [
        ("1.2", "1.3"), ("1.9", "1.10"), ("1.2", "1.2.1"), ("2.0", "10.0"),
    ])
    def test_orders_numerically(self, lower, higher):
        assert corpus.version_key(lower) < corpus.version_key(higher)


class TestRulesFile:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "rules.conf"
        p.write_text(
            "response_marker = REPLY:\n"
            "symbol = ~\n"
            "symbol = ^_^\n"
            "vague_pattern = minor tweaks\n"
            "keep_at_sign = true\n",
            encoding="utf-8",
        )
        rules = corpus.load_rules(str(p))
        assert rules.response_markers == ("REPLY:",)
        assert rules.symbol_blocklist == ("~", "^_^")
        assert rules.is_vague("Minor tweaks everywhere")

    def test_override_file(self, tmp_path):
        p = tmp_path / "overrides.tsv"
        p.write_text("e1\tvague\ne2\tkeep\n", encoding="utf-8")
        assert corpus.load_vague_overrides(str(p)) == {"e1": True, "e2": False}

    def test_bad_override_line_positioned(self, tmp_path):
        p = tmp_path / "overrides.tsv"
        p.write_text("e1\tmaybe\n", encoding="utf-8")
        with pytest.raises(DataError, match=":1:"):
            corpus.load_vague_overrides(str(p))


class TestTimestamps:
    def test_z_suffix(self):
        assert corpus.parse_timestamp("2021-01-01T00:00:00Z") == utc(2021, 1, 1)

    def test_offset_normalized(self):
        assert corpus.parse_timestamp("2021-01-01T08:00:00+08:00") == utc(2021, 1, 1)

    def test_round_trip(self):
        assert corpus.format_timestamp(utc(2021, 5, 4, 3, 2, 1)) == "2021-05-04T03:02:01Z"
