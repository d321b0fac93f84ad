import csv
import json

import numpy as np

from favdown import io as fio
from favdown.oracle import enumerate_walks


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_events_csv(tmp_path):
    fio.write_events_csv(np.array([[2, 0, 1], [7, -1, 2]]), tmp_path / "e.csv")
    assert read(tmp_path / "e.csv") == [["n", "x", "r"], ["2", "0", "1"], ["7", "-1", "2"]]


def test_empty_events_csv(tmp_path):
    fio.write_events_csv(np.zeros((0, 3), dtype=int), tmp_path / "sub" / "e.csv")
    assert read(tmp_path / "sub" / "e.csv") == [["n", "x", "r"]]


def test_profile_csv_sorted(tmp_path):
    fio.write_profile_csv({3: 1, -1: 4, 0: 2}, tmp_path / "p.csv")
    assert [r[0] for r in read(tmp_path / "p.csv")[1:]] == ["-1", "0", "3"]


def test_lemma_csv_roundtrips_floats(tmp_path):
    v = 0.1 + 0.2
    fio.write_lemma_csv([("rho", 4, 4, "p", v)], tmp_path / "l.csv")
    rows = read(tmp_path / "l.csv")
    assert rows[0] == ["kernel", "h", "start", "quantity", "value"]
    assert float(rows[1][4]) == v


def test_enumeration_csv(tmp_path):
    fio.write_enumeration_csv(enumerate_walks(2), tmp_path / "n.csv")
    rows = read(tmp_path / "n.csv")
    assert ["2", "kd_size", "1", "2", "4"] in rows


def test_json_is_canonical(tmp_path):
    obj = {"b": np.int64(3), "a": [np.float64(0.5)], "c": np.arange(2)}
    fio.write_json(obj, tmp_path / "r.json")
    text = (tmp_path / "r.json").read_text()
    assert text == fio.dumps(obj)
    assert list(json.loads(text)) == ["a", "b", "c"]
