import csv
import hashlib
import json

import numpy as np
import pytest
import yaml

from thermovital.cli import main
from thermovital.config import PipelineConfig
from thermovital.ingest import SyntheticSpec, read_sequence, region_positions

ON_GRID_RR = 110 * 15 / 4096  # 0.40283203125 Hz, exactly a padded bin


def nose_spec(**over):
    d = {
        "duration": 60,
        "width": 48,
        "height": 48,
        "fps": 15,
        "background": 1500,
        "noise_sigma": 0.0,
        "seed": 11,
        "regions": [{
            "box": [12, 12, 24, 24],
            "frequency": 0.4,
            "amplitude": 20,
            "contrast": 150,
            "label": "nose",
            "vital": "rr",
        }],
    }
    d.update(over)
    return d


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def nose(tmp_path):
    """gen + track for a static 0.4 Hz nose; returns (dir, sequence, track)."""
    spec = write_yaml(tmp_path / "nose.yaml", nose_spec())
    seq, track = tmp_path / "nose.thsq", tmp_path / "track.csv"
    assert main(["gen", str(spec), str(seq), "--truth", str(tmp_path / "gt.csv")]) == 0
    assert main(["track", str(seq), "--roi", "12", "12", "24", "24", "-o", str(track)]) == 0
    return tmp_path, seq, track


# --------------------------------------------------------------------------
# gen
# --------------------------------------------------------------------------


def test_gen_summary_and_readback(nose, capsys):
    d, seq, _ = nose
    s = read_sequence(seq)
    assert (len(s), s.width, s.height) == (900, 48, 48)
    assert s.metadata["true_rr_hz"] == 0.4
    assert read_rows(d / "gt.csv")[0] == {"time_s": "0.0", "hr_bpm": "", "rr_rpm": "24.0"}


def test_gen_is_deterministic(tmp_path):
    spec = write_yaml(tmp_path / "s.yaml", nose_spec(noise_sigma=5.0, duration=4))
    main(["gen", str(spec), str(tmp_path / "a.thsq")])
    main(["gen", str(spec), str(tmp_path / "b.thsq")])
    assert digest(tmp_path / "a.thsq") == digest(tmp_path / "b.thsq")


def test_gen_rejects_aliased_modulation(tmp_path, capsys):
    bad = nose_spec()
    bad["regions"][0]["frequency"] = 7.5
    rc = main(["gen", str(write_yaml(tmp_path / "s.yaml", bad)), str(tmp_path / "x.thsq")])
    assert rc == 2
    assert "Nyquist" in capsys.readouterr().err
    assert not (tmp_path / "x.thsq").exists()


def test_gen_rejects_malformed_spec(tmp_path):
    (tmp_path / "s.yaml").write_text("- just\n- a list\n")
    assert main(["gen", str(tmp_path / "s.yaml"), str(tmp_path / "x.thsq")]) == 2
    assert main(["gen", str(write_yaml(tmp_path / "t.yaml", nose_spec(colour=1))), str(tmp_path / "x.thsq")]) == 2


# --------------------------------------------------------------------------
# track
# --------------------------------------------------------------------------


def test_track_static_target(nose, capsys):
    _, _, track = nose
    rows = read_rows(track)
    assert len(rows) == 900
    assert {(r["x"], r["y"], r["w"], r["h"]) for r in rows} == {("12", "12", "24", "24")}


def test_track_moving_target(tmp_path):
    spec_d = nose_spec(duration=2, width=64, noise_sigma=3.0)
    spec_d["regions"][0]["box"] = [4, 12, 24, 24]
    spec_d["regions"][0]["motion"] = {"kind": "velocity", "vx": 1.0, "vy": 0.2}
    spec_path = write_yaml(tmp_path / "m.yaml", spec_d)
    main(["gen", str(spec_path), str(tmp_path / "m.thsq")])
    assert main(["track", str(tmp_path / "m.thsq"), "--roi", "4", "12", "24", "24", "-o", str(tmp_path / "t.csv")]) == 0
    spec = SyntheticSpec.from_dict(spec_d)
    truth = region_positions(spec.regions[0], spec.n_frames, 15)
    got = np.array([(int(r["x"]), int(r["y"])) for r in read_rows(tmp_path / "t.csv")])
    assert np.max(np.abs(got - truth)) <= 1


def test_track_roi_outside_frame(nose):
    d, seq, _ = nose
    assert main(["track", str(seq), "--roi", "40", "40", "24", "24", "-o", str(d / "x.csv")]) == 2
    assert main(["track", str(seq), "--roi", "0", "0", "4", "4", "-o", str(d / "x.csv")]) == 2


# --------------------------------------------------------------------------
# estimate
# --------------------------------------------------------------------------


def test_estimate_rr_method1(nose):
    d, seq, track = nose
    out = d / "rr1.json"
    assert main(["estimate", str(seq), str(track), "--vital", "rr", "--method", "1", "--roi-label", "nose", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["estimates"]) == 31  # 60 s, 30 s windows, 1 s hop
    for rec in doc["estimates"]:
        assert rec["rate_per_min"] == pytest.approx(24.0, abs=60 * 15 / 4096)
        assert (rec["band_lo_hz"], rec["band_hi_hz"]) == (0.17, 0.67)
    assert doc["config"]["estimator"]["filter_order"] == 4


def test_estimate_rejects_low_frame_rate(tmp_path, capsys):
    spec = write_yaml(tmp_path / "slow.yaml", nose_spec(fps=5, duration=30))
    main(["gen", str(spec), str(tmp_path / "slow.thsq")])
    main(["track", str(tmp_path / "slow.thsq"), "--roi", "12", "12", "24", "24", "-o", str(tmp_path / "t.csv")])
    rc = main(["estimate", str(tmp_path / "slow.thsq"), str(tmp_path / "t.csv"),
               "--vital", "hr", "--method", "1", "-o", str(tmp_path / "e.json")])
    assert rc == 2
    assert "5.34" in capsys.readouterr().err


def test_fps_flag_overrides_header(nose, capsys):
    d, seq, track = nose
    rc = main(["estimate", str(seq), str(track), "--vital", "hr", "--method", "1",
               "--fps", "5", "-o", str(d / "e.json")])
    assert rc == 2


def test_single_pixel_methods_agree(nose):
    d, seq, _ = nose
    one = d / "one.csv"
    with open(one, "w") as fh:
        fh.write("frame_index,x,y,w,h,confidence,low_confidence\n")
        for i in range(900):
            fh.write(f"{i},20,20,1,1,inf,0\n")
    rates = {}
    for m in ("1", "2"):
        out = d / f"m{m}.json"
        assert main(["estimate", str(seq), str(one), "--vital", "rr", "--method", m, "--hop", "5", "-o", str(out)]) == 0
        rates[m] = [r["rate_per_min"] for r in json.loads(out.read_text())["estimates"]]
    assert rates["1"] == rates["2"]


def test_estimate_track_length_mismatch(nose):
    d, seq, track = nose
    rows = track.read_text().splitlines()
    (d / "short.csv").write_text("\n".join(rows[:-1]) + "\n")
    assert main(["estimate", str(seq), str(d / "short.csv"), "--vital", "rr", "--method", "1", "-o", str(d / "e.json")]) == 3


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------


def test_perfect_pipeline_has_zero_error(tmp_path):
    spec = nose_spec()
    spec["regions"][0]["frequency"] = ON_GRID_RR
    main(["gen", str(write_yaml(tmp_path / "s.yaml", spec)), str(tmp_path / "s.thsq"), "--truth", str(tmp_path / "gt.csv")])
    main(["track", str(tmp_path / "s.thsq"), "--roi", "12", "12", "24", "24", "-o", str(tmp_path / "t.csv")])
    ests = []
    for m in ("1", "2"):
        ests.append(str(tmp_path / f"e{m}.json"))
        main(["estimate", str(tmp_path / "s.thsq"), str(tmp_path / "t.csv"), "--vital", "rr",
              "--method", m, "--roi-label", "nose", "-o", ests[-1]])
    assert main(["evaluate", *ests, "-g", str(tmp_path / "gt.csv"), "-o", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert len(report["rows"]) == 1
    assert report["rows"][0]["mape"] == {"method1": 0.0, "method2": 0.0}


def test_no_overlapping_truth(nose, capsys):
    d, seq, track = nose
    main(["estimate", str(seq), str(track), "--vital", "rr", "--method", "1", "-o", str(d / "e.json")])
    (d / "late.csv").write_text("time_s,hr_bpm,rr_rpm\n1000,120,24\n1001,120,24\n")
    assert main(["evaluate", str(d / "e.json"), "-g", str(d / "late.csv"), "-o", str(d / "r.json")]) == 3
    assert "overlap" in capsys.readouterr().err


def test_hr_only_truth_drops_rr_rows(tmp_path, capsys):
    spec = nose_spec()
    spec["regions"].append({"box": [0, 0, 10, 10], "frequency": 2.0, "amplitude": 20,
                            "contrast": 300, "label": "forehead", "vital": "hr"})
    spec["regions"][0]["box"] = [20, 20, 24, 24]
    main(["gen", str(write_yaml(tmp_path / "s.yaml", spec)), str(tmp_path / "s.thsq"), "--truth", str(tmp_path / "gt.csv")])
    gt = read_rows(tmp_path / "gt.csv")
    with open(tmp_path / "hr_only.csv", "w") as fh:
        fh.write("time_s,hr_bpm,rr_rpm\n")
        for r in gt:
            fh.write(f"{r['time_s']},{r['hr_bpm']},\n")
    main(["track", str(tmp_path / "s.thsq"), "--roi", "20", "20", "24", "24", "-o", str(tmp_path / "nose.csv")])
    main(["track", str(tmp_path / "s.thsq"), "--roi", "0", "0", "10", "10", "-o", str(tmp_path / "fh.csv")])
    main(["estimate", str(tmp_path / "s.thsq"), str(tmp_path / "nose.csv"), "--vital", "rr", "--method", "1",
          "--roi-label", "nose", "-o", str(tmp_path / "rr.json")])
    main(["estimate", str(tmp_path / "s.thsq"), str(tmp_path / "fh.csv"), "--vital", "hr", "--method", "1",
          "--roi-label", "forehead", "-o", str(tmp_path / "hr.json")])
    capsys.readouterr()
    rc = main(["evaluate", str(tmp_path / "rr.json"), str(tmp_path / "hr.json"),
               "-g", str(tmp_path / "hr_only.csv"), "-o", str(tmp_path / "r.json")])
    assert rc == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert [(r["vital"], r["roi"]) for r in report["rows"]] == [("hr", "forehead")]
    assert report["rows"][0]["mape"]["method1"] < 1.0
    assert "warning" in capsys.readouterr().err


def test_evaluate_writes_plot_data(tmp_path):
    spec = nose_spec(duration=120, noise_sigma=4.0)
    main(["gen", str(write_yaml(tmp_path / "s.yaml", spec)), str(tmp_path / "s.thsq"), "--truth", str(tmp_path / "gt.csv")])
    main(["track", str(tmp_path / "s.thsq"), "--roi", "12", "12", "24", "24", "-o", str(tmp_path / "t.csv")])
    main(["estimate", str(tmp_path / "s.thsq"), str(tmp_path / "t.csv"), "--vital", "rr", "--method", "2",
          "--roi-label", "nose", "-o", str(tmp_path / "e.json")])
    rc = main(["evaluate", str(tmp_path / "e.json"), "-g", str(tmp_path / "gt.csv"), "--seed", "5",
               "-o", str(tmp_path / "r.json"), "--plots-dir", str(tmp_path / "plots")])
    assert rc == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["config"]["segment_seed"] == 5
    assert report["rows"][0]["pairs"]["method2"] == 2  # one segment per minute
    assert read_rows(tmp_path / "plots" / "bland_altman_rr_nose_m2.csv")[0].keys() == {"mean", "diff"}
    assert (tmp_path / "plots" / "bland_altman_rr_nose_m2.svg").read_text().startswith("<svg")


# --------------------------------------------------------------------------
# config and errors
# --------------------------------------------------------------------------


def test_config_file_roundtrip_and_use(nose):
    d, seq, track = nose
    cfg = PipelineConfig()
    cfg.estimator.rr_segment_seconds = 20.0
    cfg.dump(d / "cfg.yaml")
    assert PipelineConfig.load(d / "cfg.yaml").to_dict() == cfg.to_dict()
    main(["estimate", str(seq), str(track), "--vital", "rr", "--method", "1",
          "--config", str(d / "cfg.yaml"), "-o", str(d / "e.json")])
    doc = json.loads((d / "e.json").read_text())
    assert doc["window_s"] == 20.0 and len(doc["estimates"]) == 41


def test_bad_config_is_usage_error(nose):
    d, seq, _ = nose
    (d / "bad.yaml").write_text("estimator:\n  hr_band: [3, 1]\n")
    assert main(["track", str(seq), "--roi", "12", "12", "24", "24", "--config", str(d / "bad.yaml"), "-o", str(d / "t.csv")]) == 2
    (d / "bad2.yaml").write_text("estimator:\n  colour: blue\n")
    assert main(["track", str(seq), "--roi", "12", "12", "24", "24", "--config", str(d / "bad2.yaml"), "-o", str(d / "t.csv")]) == 2


def test_corrupt_sequence_is_data_error(tmp_path):
    (tmp_path / "bad.thsq").write_bytes(b"XXXX" + bytes(40))
    assert main(["track", str(tmp_path / "bad.thsq"), "--roi", "0", "0", "8", "8", "-o", str(tmp_path / "t.csv")]) == 3


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "a", "b", "--vital", "bp", "--method", "1", "-o", "x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
