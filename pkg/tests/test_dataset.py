import json

import numpy as np
import pandas as pd
import pytest

from fluxnoise_toolkit.src.fitting import T2StarDataset, T2StarPoint
from fluxnoise_toolkit.src.processors import (
    BiasCalibration,
    load_dataset,
    read_csv_artifact,
    write_csv,
    write_dataset,
    write_json,
)
from fluxnoise_toolkit.src.processors.artifact_writer import render_csv
from fluxnoise_toolkit.src.utils import DatasetError


@pytest.fixture
def write_data(tmp_path):
    def write(text, name="t2.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


def test_reads_three_rows_with_comments(write_data):
    path = write_data(
        "# device: Q3 8-mon\n"
        "# measured 2024-03-01\n"
        "phi_bias,t2_star_us,t1_us\n"
        "0.2,3.5,28\n"
        "0.0,21.0,31\n"
        "-0.1,8.25,\n"
    )
    dataset = load_dataset(path)
    assert len(dataset) == 3
    assert dataset.device_label == "Q3 8-mon"
    assert list(dataset.phi) == [0.0, -0.1, 0.2]
    assert [p.t1_us for p in dataset.points] == [31.0, None, 28.0]
    assert all(p.weight == 1.0 for p in dataset.points)


def test_negative_time_cites_its_row(write_data):
    path = write_data("phi_bias,t2_star_us\n0.0,20\n0.1,-1\n0.2,3\n")
    with pytest.raises(DatasetError, match="row 2") as info:
        load_dataset(path)
    assert info.value.row == 2


@pytest.mark.parametrize("text,fragment", [
    ("phi_bias,t1_us\n0.0,20\n", "missing required column 't2_star_us'"),
    ("phi_bias,t2_star_us\n0.0,20\n0.1,7\n0.2,abc\n", "row 3: non-numeric"),
    ("phi_bias,t2_star_us\n0.0,20\n,7\n", "row 2: missing value"),
    ("phi_bias,t2_star_us,weight\n0.0,20,1\n0.1,7,0\n", "row 2: weight"),
    ("phi_bias,t2_star_us,t1_us\n0.0,20,-3\n", "row 1: t1_us"),
    ("phi_bias,t2_star_us\n0.5,20\n", "row 1: bias"),
    ("phi_bias,t2_star_us\n", "no data rows"),
])
def test_malformed_rows_are_reported(write_data, text, fragment):
    with pytest.raises(DatasetError, match=fragment):
        load_dataset(write_data(text))


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(tmp_path / "nope.csv")


def test_calibration_maps_instrument_bias(write_data):
    path = write_data("phi_bias,t2_star_us\n0.0,20\n0.4,9\n-0.2,12\n")
    dataset = load_dataset(path, BiasCalibration(slope=0.5, offset=0.05, unit="mA"))
    assert np.allclose(sorted(dataset.phi), [-0.05, 0.05, 0.25], rtol=1e-15, atol=1e-17)


def test_calibration_slope_must_be_nonzero():
    with pytest.raises(ValueError):
        BiasCalibration(slope=0.0)


def test_round_trip_through_csv(tmp_path):
    dataset = T2StarDataset(device_label="Q1", points=[
        T2StarPoint(phi_bias=0.0, t2_star_us=22.5, t1_us=30.0, weight=2.0),
        T2StarPoint(phi_bias=0.15, t2_star_us=4.125),
        T2StarPoint(phi_bias=-0.3, t2_star_us=1.0625, t1_us=18.0),
    ])
    path = write_dataset(dataset, tmp_path / "copy.csv")
    assert load_dataset(path) == dataset
    header = path.read_text(encoding="utf-8").splitlines()[:2]
    assert header == ["# device: Q1", "phi_bias,t2_star_us,t1_us,weight"]


def test_csv_artifact_carries_metadata(tmp_path):
    frame = pd.DataFrame({"xi_m": [1e-6, 2e-6], "variance": [3.5, float("nan")]})
    metadata = {"tool": "fluxnoise-toolkit", "seed": None, "units": {"xi_m": "m"}}
    path = write_csv(tmp_path / "sub" / "out.csv", frame, metadata)
    text = path.read_text(encoding="utf-8")
    assert text.startswith('# seed: null\n# tool: "fluxnoise-toolkit"\n# units: {"xi_m": "m"}\nxi_m,variance\n')
    assert text == render_csv(frame, metadata)

    meta, back = read_csv_artifact(path)
    assert meta == metadata
    assert list(back.columns) == ["xi_m", "variance"]
    assert back["variance"].isna().tolist() == [False, True]


def test_json_artifact_is_stamped(tmp_path):
    path = write_json(tmp_path / "out.json", {"sigma_phi_hat": 1e-5, "gamma0_hat": None},
                      {"config_hash": "abc"})
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["sigma_phi_hat"] == 1e-5
    assert document["gamma0_hat"] is None
    assert document["metadata"]["config_hash"] == "abc"
    assert "generated_at" in document["metadata"]
