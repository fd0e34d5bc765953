from __future__ import annotations

import csv
import io
import json
from random import Random

import pytest

from viewclean.errors import IngestError, NotFoundError, ParseError, RestoreError
from viewclean.model import export_csv, load_csv, scan
from viewclean.session import Session
from viewclean.views import ConditionAtom, ViewCondition

from oracles import rows_matching_conjunction


def cond(*atoms: tuple[str, str, str]) -> ViewCondition:
    return ViewCondition.of(ConditionAtom(a, op, v) for a, op, v in atoms)


class TestLoadCsv:
    def test_load_with_id_column(self, providers_sample_csv):
        table = load_csv(providers_sample_csv, name="sample", id_attribute="ID")
        assert sorted(table.rows) == [1, 2, 3, 4]
        assert table.rows[1].values["NP"] == "Omori Hiroki"

    def test_header_only(self):
        table = load_csv(b"A,B,C\r\n", name="empty")
        assert table.attributes == ["A", "B", "C"]
        assert len(table.rows) == 0

    def test_golden_fixture_has_twelve_rows(self, golden_metadata_csv):
        table = load_csv(golden_metadata_csv, name="metadata", id_attribute="ID")
        assert len(table.rows) == 12
        assert sorted(table.rows) == [1, 2, 3, 4, 5, 8, 12, 13, 20, 21, 34, 49]

    def test_empty_fields_become_null(self):
        table = load_csv(b"A,B\r\n1,\r\n,2\r\n")
        assert table.rows[1].values == {"A": "1", "B": None}
        assert table.rows[2].values == {"A": None, "B": "2"}

    def test_values_kept_verbatim(self):
        table = load_csv(b'A,B\r\n"  spaced  ",MiXeD\r\n')
        assert table.rows[1].values["A"] == "  spaced  "
        assert table.rows[1].values["B"] == "MiXeD"

    def test_no_header_generates_attribute_names(self):
        table = load_csv(b"x,y\r\n1,2\r\n", has_header=False)
        assert table.attributes == ["c1", "c2"]
        assert len(table.rows) == 2

    def test_duplicate_id_rejected(self):
        with pytest.raises(IngestError, match="7"):
            load_csv(b"ID,A\r\n7,x\r\n7,y\r\n", id_attribute="ID")

    def test_ragged_record_names_line(self):
        with pytest.raises(ParseError, match="line 3"):
            load_csv(b"A,B\r\n1,2\r\n1,2,3\r\n")

    def test_unbalanced_quote_is_parse_error(self):
        with pytest.raises(ParseError):
            load_csv(b'A,B\r\n"oops,2\r\nmore,"x\r\n')

    def test_unknown_id_attribute(self):
        with pytest.raises(IngestError, match="NOPE"):
            load_csv(b"A,B\r\n1,2\r\n", id_attribute="NOPE")

    def test_non_canonical_numeric_ids_stay_strings(self):
        table = load_csv(b"ID,A\r\n007,x\r\n8,y\r\n", id_attribute="ID")
        assert sorted(table.rows) == ["007", "8"]


class TestScan:
    def test_equality_scan_on_golden_rows(self, fixture_session):
        table = fixture_session.get_table("metadata")
        got = [r.row_id for r in scan(table, cond(("OP", "equals", "KU")))]
        assert got == [1, 2, 8, 12, 13, 34, 49]

    def test_no_condition_returns_all(self, fixture_session):
        table = fixture_session.get_table("metadata")
        assert len(scan(table)) == 12

    def test_no_match_is_empty(self, fixture_session):
        table = fixture_session.get_table("metadata")
        assert scan(table, cond(("Y", "equals", "1900"))) == []

    def test_null_never_matches(self):
        table = load_csv(b"A,B\r\n,x\r\n")
        assert scan(table, cond(("A", "equals", ""))) == []
        assert scan(table, cond(("A", "contains", "x"))) == []

    @pytest.mark.parametrize("seed", range(20))
    def test_conjunction_agrees_with_per_row_oracle(self, seed):
        from oracles import make_random_table

        rng = Random(seed)
        table = make_random_table(
            rng, n_rows=rng.randint(0, 30), attributes=["A", "B", "C"],
            alphabet=["a", "b", "c"], null_rate=0.2,
        )
        atoms = [
            ("A", "equals", rng.choice(["a", "b", "c"])),
            ("B", "equals", rng.choice(["a", "b", "c"])),
        ][: rng.randint(0, 2)]
        got = {r.row_id for r in scan(table, cond(*atoms))}
        assert got == rows_matching_conjunction(table, atoms)


class TestExport:
    def test_round_trip_is_record_equivalent(self, golden_metadata_csv):
        table = load_csv(golden_metadata_csv, name="metadata", id_attribute="ID")
        exported = export_csv(table)
        original = list(csv.reader(io.StringIO(golden_metadata_csv.decode("utf-8"))))
        reparsed = list(csv.reader(io.StringIO(exported.decode("utf-8"))))
        assert reparsed == original

    def test_null_round_trip(self):
        table = load_csv(b"A,B\r\nx,\r\n")
        again = load_csv(export_csv(table))
        assert again.rows[1].values == {"A": "x", "B": None}


class TestSnapshotRestore:
    def test_round_trip_equality(self, fixture_session):
        snap = fixture_session.snapshot()
        restored = Session.restore(snap)
        assert restored.snapshot() == snap

    def test_truncated_stream_fails_cleanly(self, fixture_session):
        snap = fixture_session.snapshot()
        with pytest.raises(RestoreError):
            Session.restore(snap[: len(snap) // 2])

    def test_not_a_snapshot(self):
        with pytest.raises(RestoreError):
            Session.restore(b'{"format":"something-else"}')

    def test_history_survives_restore(self, fixture_session):
        from viewclean.corrections import correct_cell, history
        from viewclean.model import CellRef
        from viewclean.views import create_view

        view = create_view(fixture_session, "metadata", cond())
        for rid in (1, 2, 8):
            correct_cell(fixture_session, view.id, CellRef("metadata", rid, "OP"), "Kyoto Univ.", "t")
        restored = Session.restore(fixture_session.snapshot())
        assert len(history(restored)) == 3
        assert restored.table_state_bytes() == fixture_session.table_state_bytes()


class TestChangelog:
    def test_every_mutation_appends_one_record(self, golden_metadata_csv):
        session = Session()
        assert len(session.changelog) == 0
        session.load_table(golden_metadata_csv, name="metadata", id_attribute="ID")
        assert len(session.changelog) == 1
        assert session.changelog[0]["kind"] == "ingest"
        assert session.changelog[0]["seq"] == 1

    def test_jsonl_shape(self, fixture_session):
        lines = fixture_session.changelog_jsonl().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert set(record) == {"seq", "kind", "payload", "timestamp"}

    @pytest.mark.parametrize("seed", range(10))
    def test_replay_reproduces_state(self, golden_metadata_csv, seed):
        """Randomized mark/view/correct/undo scripts replay byte-for-byte."""
        from viewclean.corrections import correct_values, undo
        from viewclean.marking import mark_cells, unmark
        from viewclean.model import CellRef
        from viewclean.views import create_view

        rng = Random(seed)
        session = Session()
        base = Session.restore(session.snapshot())

        session.load_table(golden_metadata_csv, name="metadata", id_attribute="ID")
        table = session.get_table("metadata")
        whole = create_view(session, "metadata", cond())
        entry_ids = []
        for _ in range(12):
            action = rng.choice(["mark", "unmark", "view", "correct", "undo"])
            if action == "mark":
                rid = rng.choice(table.sorted_ids())
                attr = rng.choice(table.attributes)
                mark_cells(session, [CellRef("metadata", rid, attr)], label=None)
            elif action == "unmark" and session.mark_sets:
                mid = rng.choice(sorted(session.mark_sets))
                victim = rng.choice(session.mark_sets[mid].cells)
                unmark(session, mid, [victim])
            elif action == "view":
                attr = rng.choice(table.attributes)
                value = rng.choice([r.values[attr] for r in table.iter_rows()]) or "x"
                create_view(session, "metadata", cond((attr, "equals", value)))
            elif action == "correct":
                attr = rng.choice(["NP", "OP", "OC"])
                value = rng.choice([r.values[attr] for r in table.iter_rows()])
                entry = correct_values(session, whole.id, attr, value, f"fix-{rng.randint(0, 9)}", "bot")
                entry_ids.append(entry.id)
            elif action == "undo" and entry_ids:
                target = rng.choice(entry_ids)
                try:
                    undo(session, target)
                except Exception:
                    pass

        for record in session.changelog:
            base.apply_changelog_record(record)
        assert base.table_state_bytes() == session.table_state_bytes()
        assert base.snapshot() == session.snapshot()


class TestRowIdentity:
    def test_corrections_never_change_row_ids(self, fixture_session):
        from viewclean.corrections import correct_values
        from viewclean.views import create_view

        before = list(fixture_session.get_table("metadata").sorted_ids())
        view = create_view(fixture_session, "metadata", cond())
        correct_values(fixture_session, view.id, "OP", "KU", "Kyoto Univ.", "t")
        correct_values(fixture_session, view.id, "OC", "ylab", "Yoshikawa Lab.", "t")
        assert list(fixture_session.get_table("metadata").sorted_ids()) == before

    def test_unknown_table_lookup(self, fixture_session):
        with pytest.raises(NotFoundError):
            fixture_session.get_table("nope")
