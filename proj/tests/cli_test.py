#!/usr/bin/env python3
"""End-to-end checks of the firctl command line: exit codes, CSV and SVG outputs."""

import csv
import io
import json
import os
import shutil
import subprocess
import sys
import unittest
import xml.etree.ElementTree as ET

EXE, DATA, WORK = sys.argv[1:4]
del sys.argv[1:4]

SVG_NS = "{http://www.w3.org/2000/svg}"
CSV_HEADER = ["order", "median_rho", "best_rho", "worst_rho", "runs", "evals"]


def run(*args, env=None, timeout=600):
    full_env = dict(os.environ)
    full_env.pop("FIRCTL_WORKERS", None)
    if env:
        full_env.update(env)
    return subprocess.run([EXE, *args], capture_output=True, text=True, env=full_env, timeout=timeout)


def data(name):
    return os.path.join(DATA, name)


def work(name):
    return os.path.join(WORK, name)


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class Analyze(unittest.TestCase):
    def test_siso_verdicts(self):
        r = run("analyze", data("system1.json"), "--json")
        self.assertEqual(r.returncode, 0, r.stderr)
        rep = json.loads(r.stdout)
        self.assertTrue(rep["stabilizable"])
        self.assertTrue(rep["detectable"])
        self.assertTrue(rep["pip"]["holds"])

        rep = json.loads(run("analyze", data("system2.json"), "--json").stdout)
        self.assertFalse(rep["pip"]["holds"])

    def test_mimo_and_text(self):
        r = run("analyze", data("system4.json"))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("stabilizable (PBH):     yes", r.stdout)
        self.assertEqual(run("analyze", "system3").returncode, 0)

    def test_bad_inputs(self):
        r = run("analyze", data("bad_ragged.json"))
        self.assertEqual(r.returncode, 1)
        self.assertIn("A[1]", r.stderr)
        self.assertEqual(run("analyze", data("does_not_exist.json")).returncode, 1)
        self.assertEqual(run("frobnicate").returncode, 1)


class Design(unittest.TestCase):
    def test_convex_exit_codes(self):
        self.assertEqual(run("design", data("system4.json"), "--order", "0", "--method", "convex").returncode, 0)
        self.assertEqual(run("design", data("system1.json"), "--order", "0", "--method", "convex").returncode, 2)

    def test_direct_search_writes_gains(self):
        out = work("system3_gains.json")
        r = run("design", data("system3.json"), "--order", "1", "--method", "direct", "--runs", "10", "--seed", "1",
                "--gains-out", out)
        self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
        with open(out) as f:
            doc = json.load(f)
        self.assertEqual(doc["kind"], "fir_gains")
        self.assertEqual(len(doc["gains"]), 2)

    def test_unstabilizable_and_margin(self):
        self.assertEqual(run("design", data("system2.json"), "--order", "2", "--runs", "4").returncode, 2)
        # no order-0 design reaches rho < 0.05 for system 1
        self.assertEqual(run("design", "system1", "--order", "0", "--runs", "4", "--margin", "0.95").returncode, 2)
        self.assertEqual(run("design", "system1", "--order", "0", "--margin", "1.5").returncode, 1)


class Sweep(unittest.TestCase):
    def sweep(self, system, *extra, env=None, name=None):
        name = name or system
        csv_path, svg_path = work(name + ".csv"), work(name + ".svg")
        r = run("sweep", data(system + ".json"), "--max-order", "3", "--runs", "4", "--seed", "3",
                "--csv", csv_path, "--svg", svg_path, *extra, env=env)
        self.assertEqual(r.returncode, 0, r.stderr)
        return csv_path, svg_path

    def test_csv_and_svg(self):
        csv_path, svg_path = self.sweep("system3")
        rows = read_csv(csv_path)
        self.assertEqual(rows[0], CSV_HEADER)
        self.assertEqual([int(r[0]) for r in rows[1:]], [0, 1, 2, 3])
        with open(csv_path, "rb") as f:
            self.assertIn(b"\r\n", f.read())
        best = [float(r[2]) for r in rows[1:]]
        self.assertGreaterEqual(best[0], 1.0)
        self.assertTrue(all(b < 1.0 for b in best[1:]))
        self.assertTrue(all(b2 <= b1 + 1e-9 for b1, b2 in zip(best, best[1:])))

        root = ET.parse(svg_path).getroot()
        self.assertEqual(root.tag, SVG_NS + "svg")
        lines = root.iter(SVG_NS + "polyline")
        series = [p.get("class") for p in lines]
        self.assertEqual(sorted(series), sorted(set(series)))
        self.assertEqual(len(series), 3)
        bands = [p for p in root.iter(SVG_NS + "polygon") if p.get("class") == "band"]
        self.assertEqual(len(bands), 1)

    def test_unstabilizable_plant_stays_above_one(self):
        csv_path, _ = self.sweep("system2")
        for r in read_csv(csv_path)[1:]:
            self.assertGreaterEqual(float(r[1]), 1.0)
            self.assertGreaterEqual(float(r[2]), 1.0)

    def test_stable_plant(self):
        csv_path, _ = self.sweep("stable_toy")
        self.assertTrue(all(float(r[3]) < 1.0 for r in read_csv(csv_path)[1:]))

    def test_worker_count_does_not_change_results(self):
        a, _ = self.sweep("system1", env={"FIRCTL_WORKERS": "1"}, name="w1")
        b, _ = self.sweep("system1", env={"FIRCTL_WORKERS": "4"}, name="w4")
        with open(a, "rb") as fa, open(b, "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

    def test_stdout_csv(self):
        r = run("sweep", "system4", "--max-order", "1", "--runs", "2")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(next(csv.reader(io.StringIO(r.stdout))), CSV_HEADER)


class Approximate(unittest.TestCase):
    def test_geometric_controller(self):
        r = run("approximate", data("geometric_controller.json"), "--order", "3")
        self.assertEqual(r.returncode, 0, r.stderr)
        doc = json.loads(r.stdout)
        self.assertEqual([g[0][0] for g in doc["gains"]], [0.0, 1.0, 0.5, 0.25])
        self.assertAlmostEqual(doc["tail_bound"], 0.25, places=12)

    def test_unstable_controller(self):
        r = run("approximate", data("unstable_controller.json"), "--order", "3")
        self.assertEqual(r.returncode, 1)
        self.assertIn("Schur", r.stderr)


class Bench(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.runs = {}
        for seed in ("1", "2"):
            out = work("bench_" + seed)
            shutil.rmtree(out, ignore_errors=True)
            cls.runs[seed] = (run("bench", "--out", out, "--seed", seed), out)

    def scored(self, out):
        rows = read_csv(os.path.join(out, "summary.csv"))
        self.assertEqual(rows[0], ["system", "check", "expected", "observed", "status"])
        return [r for r in rows[1:] if r[4] != "info"]

    def test_default_run_matches(self):
        r, out = self.runs["1"]
        self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
        rows = self.scored(out)
        self.assertTrue(rows)
        self.assertTrue(all(x[4] == "ok" for x in rows), rows)
        for sid in ("system1", "system2", "system3", "system4"):
            self.assertEqual(read_csv(os.path.join(out, "sweep_%s.csv" % sid))[0], CSV_HEADER)
            ET.parse(os.path.join(out, "sweep_%s.svg" % sid))

    def test_verdicts_do_not_depend_on_seed(self):
        a = self.scored(self.runs["1"][1])
        b = self.scored(self.runs["2"][1])
        self.assertEqual(a, b)

    def test_tampered_expectations(self):
        path = work("tampered.json")
        with open(path, "w") as f:
            json.dump({"system2": {"min_stabilizing_order": 1}}, f)
        out = work("bench_tampered")
        r = run("bench", "--out", out, "--expectations", path)
        self.assertEqual(r.returncode, 3, r.stdout + r.stderr)
        self.assertIn("system2 min_stabilizing_order", r.stdout)
        bad = [x for x in self.scored(out) if x[4] == "MISMATCH"]
        self.assertEqual([(x[0], x[1]) for x in bad], [("system2", "min_stabilizing_order")])


if __name__ == "__main__":
    os.makedirs(WORK, exist_ok=True)
    unittest.main(verbosity=2)
