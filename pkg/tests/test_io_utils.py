"""
Tests for CSV/JSONL output, manifests and config loading.
"""

import json
import os
import shutil
import tempfile
import unittest
from datetime import datetime
from pathlib import Path
from unittest import mock

import numpy as np

from jumpsync.io_utils import (MANIFEST_NAME, SPEED_COLUMNS, CSVWriter, JSONLReader,
                               JSONLWriter, append_manifest, build_manifest, default_workers,
                               format_float, generate_default_output_dir, load_config,
                               read_grid_csv, sha256_file, write_csv)
from jumpsync.models import RunConfig, RunManifest, TradeoffResult


class TestFormatFloat(unittest.TestCase):

    def test_values(self):
        cases = [
            (0.1 + 0.2, "0.3"),
            (1.0 / 3.0, "0.333333333"),
            (4.0, "4"),
            (np.float64(2.5), "2.5"),
            (1e-12, "1e-12"),
            (7, "7"),
            (True, "true"),
            (np.bool_(False), "false"),
            (None, ""),
            ("exp", "exp"),
        ]
        for value, expected in cases:
            with self.subTest(value=value):
                self.assertEqual(format_float(value), expected)


class TestWriters(unittest.TestCase):
    """CSV and JSONL writers."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_csv_header_and_rows(self):
        path = Path(self.temp_dir) / "nested" / "speed.csv"
        write_csv(str(path), SPEED_COLUMNS, [["exp", 1.0, 1.0, 0.5, 4.0, False]])
        lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines, ["law,lambda,mu,zeta_star,v_star,at_tail_boundary",
                                 "exp,1,1,0.5,4,false"])

    def test_csv_rejects_bad_rows(self):
        with CSVWriter(str(Path(self.temp_dir) / "a.csv"), ["x", "f"]) as writer:
            with self.assertRaises(ValueError):
                writer.write_row([1.0])
        with self.assertRaises(ValueError):
            CSVWriter(str(Path(self.temp_dir) / "b.csv"), ["x"]).write_row([1.0])

    def test_jsonl_records(self):
        path = str(Path(self.temp_dir) / "results.jsonl")
        records = [TradeoffResult(1 / 6, 2 / 3, 1.5, 2.0, 1.0, closed_form=True),
                   TradeoffResult(0.27, 0.46, 1.05, 2.0, 1.0)]
        with JSONLWriter(path) as writer:
            writer.write_records(records)
        loaded = JSONLReader(path, TradeoffResult).read_records()
        self.assertEqual(loaded, records)

    def test_jsonl_append_and_skip_invalid(self):
        path = str(Path(self.temp_dir) / "log.jsonl")
        with JSONLWriter(path) as writer:
            writer.write_record({"a": 1})
        with open(path, "a", encoding="utf-8") as f:
            f.write("not json\n\n")
        with JSONLWriter(path, append=True) as writer:
            writer.write_record({"a": 2})
        with self.assertLogs("jumpsync.io_utils", level="WARNING"):
            records = JSONLReader(path).read_records()
        self.assertEqual(records, [{"a": 1}, {"a": 2}])

    def test_reader_missing_file(self):
        self.assertEqual(JSONLReader(str(Path(self.temp_dir) / "none.jsonl")).read_records(), [])

    def test_read_grid_csv(self):
        path = str(Path(self.temp_dir) / "grid.csv")
        write_csv(path, ["x", "f"], [(0.0, 0.0), (1.0, 1.0)])
        xs, fs = read_grid_csv(path)
        np.testing.assert_array_equal(xs, [0.0, 1.0])
        np.testing.assert_array_equal(fs, [0.0, 1.0])
        bad = str(Path(self.temp_dir) / "bad.csv")
        write_csv(bad, ["x", "y"], [(0.0, 0.0)])
        with self.assertRaises(ValueError):
            read_grid_csv(bad)


class TestManifest(unittest.TestCase):
    """Provenance lines."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_manifest_hashes_outputs(self):
        out = str(Path(self.temp_dir) / "curve.csv")
        write_csv(out, ["zeta", "v"], [(0.5, 4.0)])
        config = RunConfig(lambda_=1.0, mu=1.0)
        manifest = build_manifest("speed", config, "1.0.0", datetime(2024, 1, 1), 0.25, [out])
        self.assertEqual(manifest.outputs, {out: sha256_file(out)})
        self.assertEqual(manifest.config["lambda"], 1.0)

        append_manifest(self.temp_dir, manifest)
        append_manifest(self.temp_dir, manifest)
        lines = JSONLReader(str(Path(self.temp_dir) / MANIFEST_NAME), RunManifest).read_records()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[0].subcommand, "speed")
        self.assertEqual(lines[0].started_at, "2024-01-01T00:00:00")

    def test_default_output_dir(self):
        path = generate_default_output_dir("mfl", root=self.temp_dir)
        self.assertTrue(os.path.isdir(path))
        self.assertTrue(Path(path).name.startswith("mfl_"))


class TestConfig(unittest.TestCase):
    """Flat JSON configs."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _write(self, data) -> str:
        path = str(Path(self.temp_dir) / "config.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path

    def test_defaults(self):
        config = load_config(None)
        self.assertEqual(config.law, "exp")
        self.assertIsNone(config.lambda_)
        self.assertEqual(config.dt, 0.01)

    def test_loads_known_keys(self):
        law = {"type": "empirical", "points": [[0.0, 0.0], [2.0, 1.0]]}
        config = load_config(self._write({"lambda": 0.2, "mu": 0.6, "n": 100, "law": law}))
        self.assertEqual((config.lambda_, config.mu, config.n), (0.2, 0.6, 100))
        self.assertEqual(config.law, law)

    def test_dist_is_an_alias_for_law(self):
        config = load_config(self._write({"dist": "uniform02", "lambda": 1.0}))
        self.assertEqual(config.law, "uniform02")
        with self.assertRaises(ValueError):
            load_config(self._write({"dist": "exp", "law": "det1"}))

    def test_rejects_unknown_keys(self):
        with self.assertRaises(ValueError):
            load_config(self._write({"lambda": 1.0, "speed": 3.0}))

    def test_rejects_non_objects(self):
        with self.assertRaises(ValueError):
            load_config(self._write([1, 2]))
        path = str(Path(self.temp_dir) / "broken.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write("{")
        with self.assertRaises(ValueError):
            load_config(path)

    def test_default_workers(self):
        with mock.patch.dict(os.environ, {"JUMPSYNC_WORKERS": "3"}):
            self.assertEqual(default_workers(), 3)
        with mock.patch.dict(os.environ, {"JUMPSYNC_WORKERS": "zero"}):
            with self.assertRaises(ValueError):
                default_workers()
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(default_workers(), min(32, (os.cpu_count() or 1) + 4))


if __name__ == '__main__':
    unittest.main()
