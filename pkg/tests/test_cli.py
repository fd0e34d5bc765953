from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from viewclean.api import SessionService, create_app
from viewclean.cli import main

KU_COND = '{"atoms":[{"attr":"OP","op":"equals","value":"KU"}]}'


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def workdir(tmp_path, monkeypatch) -> Path:
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def fixture_csv_file(workdir, golden_metadata_csv) -> Path:
    path = workdir / "metadata.csv"
    path.write_bytes(golden_metadata_csv)
    return path


def run_ok(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.stderr or result.stdout
    return result


def loaded(runner, fixture_csv_file):
    return run_ok(runner, ["load", str(fixture_csv_file), "--id-col", "ID"])


class TestBasics:
    def test_load_creates_session_file(self, runner, workdir, fixture_csv_file):
        result = loaded(runner, fixture_csv_file)
        assert json.loads(result.stdout) == {
            "table": "metadata",
            "attributes": ["ID", "NP", "OP", "OC", "Y"],
            "rows": 12,
        }
        assert (workdir / "viewclean-session.json").exists()

    def test_env_var_overrides_session_path(self, runner, workdir, fixture_csv_file, monkeypatch):
        monkeypatch.setenv("VIEWCLEAN_SESSION", str(workdir / "elsewhere.json"))
        loaded(runner, fixture_csv_file)
        assert (workdir / "elsewhere.json").exists()
        assert not (workdir / "viewclean-session.json").exists()

    def test_view_empty_condition_lists_all(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        result = run_ok(runner, ["view", "--cond", '{"atoms":[]}'])
        body = json.loads(result.stdout)
        assert body["total_count"] == 12
        assert "view: v1" in result.stderr

    def test_view_persists_across_invocations(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        result = run_ok(
            runner,
            ["correct", "--view", "v1", "--attr", "OP", "--old", "KU", "--new", "Kyoto Univ."],
        )
        entry = json.loads(result.stdout)
        assert len(entry["changes"]) == 7
        history = json.loads(run_ok(runner, ["history"]).stdout)
        assert len(history["entries"]) == 1

    def test_undo_round_trip(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        entry = json.loads(
            run_ok(
                runner,
                ["correct", "--view", "v1", "--attr", "OP", "--old", "KU", "--new", "Kyoto Univ."],
            ).stdout
        )
        compensating = json.loads(run_ok(runner, ["undo", str(entry["id"])]).stdout)
        assert compensating["undo_of"] == entry["id"]
        rows = json.loads(run_ok(runner, ["view", "--cond", KU_COND]).stdout)
        assert rows["total_count"] == 7

    def test_history_export_jsonl(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        run_ok(runner, ["correct", "--view", "v1", "--attr", "OP", "--old", "KU", "--new", "K2"])
        result = run_ok(runner, ["history", "--export"])
        lines = result.stdout_bytes.splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["id"] == 1

    def test_suggest_creates_marks_and_ranks(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        cells = '{"cells":[{"row":1,"attr":"OP"},{"row":2,"attr":"OP"}],"label":"KU-ambiguity"}'
        result = run_ok(runner, ["suggest", "--marks", cells])
        body = json.loads(result.stdout)
        assert body["suggestions"][0]["condition"] == {
            "atoms": [{"attr": "OP", "op": "equals", "value": "KU"}]
        }
        again = run_ok(runner, ["suggest", "--marks", "m1"])
        assert json.loads(again.stdout)["suggestions"] == body["suggestions"]

    def test_correct_preview_does_not_mutate(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        preview = json.loads(
            run_ok(
                runner,
                ["correct", "--view", "v1", "--attr", "OP", "--old", "KU",
                 "--new", "Kyoto Univ.", "--preview"],
            ).stdout
        )
        assert preview["preview"] is True and len(preview["changes"]) == 7
        rows = json.loads(run_ok(runner, ["view", "--cond", KU_COND]).stdout)
        assert rows["total_count"] == 7


class TestExitCodes:
    def test_usage_error_is_2(self, runner):
        assert runner.invoke(main, ["correct", "--view", "v1"]).exit_code == 2
        assert runner.invoke(main, ["detect", "fd-check"]).exit_code == 2

    def test_operational_error_is_1(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        result = runner.invoke(
            main, ["correct", "--view", "v99", "--attr", "OP", "--old", "a", "--new", "b"]
        )
        assert result.exit_code == 1
        assert "v99" in result.stderr

    def test_missing_session_file_is_1(self, runner, workdir):
        result = runner.invoke(main, ["history"])
        assert result.exit_code == 1
        assert "session" in result.stderr

    def test_bad_json_flag_is_2(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        assert runner.invoke(main, ["view", "--cond", "{broken"]).exit_code == 2


class TestDetectCommands:
    def test_removal_matches_engine(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        result = run_ok(runner, ["detect", "removal", "--fd", "OC -> OP"])
        assert json.loads(result.stdout) == {"remove": [20, 21], "certified_optimal": True}

    def test_variants_on_providers_sample(self, runner, workdir, providers_sample_csv):
        path = workdir / "sample.csv"
        path.write_bytes(providers_sample_csv)
        run_ok(runner, ["load", str(path), "--id-col", "ID"])
        result = run_ok(runner, ["detect", "variants", "--attr", "NP"])
        body = json.loads(result.stdout)
        assert len(body["groups"]) == 1
        assert {m["value"] for m in body["groups"][0]["members"]} == {
            "Omori Hiroki",
            "Hiroki OMORI",
        }

    def test_fd_discover(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        result = run_ok(runner, ["detect", "fd-discover", "--max-lhs", "1"])
        assert "ID -> NP" in json.loads(result.stdout)["fds"]

    def test_view_scope(self, runner, fixture_csv_file):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        result = run_ok(runner, ["detect", "fd-check", "--fd", "OC -> OP", "--view", "v1"])
        assert json.loads(result.stdout)["groups"] == []


class TestApiParity:
    """CLI stdout (sans trailing newline) is byte-identical to the API body."""

    @pytest.fixture
    def api(self, golden_metadata_csv):
        client = TestClient(create_app(SessionService()))
        sid = client.post("/sessions", json={}).json()["id"]
        client.post(
            f"/sessions/{sid}/tables",
            params={"name": "metadata", "id_attribute": "ID"},
            content=golden_metadata_csv,
        )
        return client

    def test_detect_removal_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        cli_out = run_ok(runner, ["detect", "removal", "--fd", "OC -> OP"]).stdout_bytes
        api_body = api.post(
            "/detect/fd/minimal-removal", json={"table": "metadata", "fd": "OC -> OP"}
        ).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_fd_check_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        cli_out = run_ok(runner, ["detect", "fd-check", "--fd", "OC -> OP"]).stdout_bytes
        api_body = api.post("/detect/fd/check", json={"table": "metadata", "fd": "OC -> OP"}).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_cfd_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        dependency = "OP -> OC :: (KU, Yoshikawa Lab.)"
        cli_out = run_ok(runner, ["detect", "cfd", "--cfd", dependency]).stdout_bytes
        api_body = api.post("/detect/cfd/check", json={"table": "metadata", "cfd": dependency}).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_variants_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        cli_out = run_ok(runner, ["detect", "variants", "--attr", "OC"]).stdout_bytes
        api_body = api.post(
            "/detect/variants", json={"table": "metadata", "attribute": "OC"}
        ).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_view_rows_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        cli_out = run_ok(runner, ["view", "--cond", KU_COND]).stdout_bytes
        vid = api.post(
            "/views",
            json={"table": "metadata", "atoms": [{"attr": "OP", "op": "equals", "value": "KU"}]},
        ).json()["id"]
        api_body = api.get(f"/views/{vid}/rows").content
        assert cli_out.rstrip(b"\n") == api_body

    def test_suggest_parity(self, runner, fixture_csv_file, api):
        loaded(runner, fixture_csv_file)
        cells = '{"cells":[{"row":1,"attr":"OP"},{"row":2,"attr":"OP"}]}'
        cli_out = run_ok(runner, ["suggest", "--marks", cells]).stdout_bytes
        mid = api.post(
            "/marks",
            json={
                "cells": [
                    {"table": "metadata", "row": 1, "attr": "OP"},
                    {"table": "metadata", "row": 2, "attr": "OP"},
                ]
            },
        ).json()["id"]
        api_body = api.post("/suggest/views", json={"marks": mid}).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_correct_parity_with_frozen_clock(self, runner, fixture_csv_file, api, frozen_clock):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        cli_out = run_ok(
            runner,
            ["correct", "--view", "v1", "--attr", "OP", "--old", "KU",
             "--new", "Kyoto Univ.", "--actor", "alice"],
        ).stdout_bytes
        vid = api.post(
            "/views",
            json={"table": "metadata", "atoms": [{"attr": "OP", "op": "equals", "value": "KU"}]},
        ).json()["id"]
        api_body = api.post(
            "/corrections",
            json={"view": vid, "attribute": "OP", "old": "KU", "new": "Kyoto Univ.", "actor": "alice"},
        ).content
        assert cli_out.rstrip(b"\n") == api_body

    def test_history_parity(self, runner, fixture_csv_file, api, frozen_clock):
        loaded(runner, fixture_csv_file)
        run_ok(runner, ["view", "--cond", KU_COND])
        run_ok(runner, ["correct", "--view", "v1", "--attr", "OP", "--old", "KU", "--new", "X"])
        cli_out = run_ok(runner, ["history"]).stdout_bytes
        vid = api.post(
            "/views",
            json={"table": "metadata", "atoms": [{"attr": "OP", "op": "equals", "value": "KU"}]},
        ).json()["id"]
        api.post("/corrections", json={"view": vid, "attribute": "OP", "old": "KU", "new": "X", "actor": "cli"})
        api_body = api.get("/history").content
        assert cli_out.rstrip(b"\n") == api_body
