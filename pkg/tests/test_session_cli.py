import json
from fractions import Fraction
from pathlib import Path

import pytest

from cfspectra.cli import main, run_verify
from cfspectra.cocycle_engine import LABEL_DELAYED_TRANSLATE
from cfspectra.errors import ScheduleError
from cfspectra.session import (
    SessionConfig,
    bundle_hash,
    load_bundle,
    save_bundle,
    synth,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def small_direct_config():
    return SessionConfig(
        mode="direct", targets=(1, 2),
        blocks=((Fraction(1, 2), 2, 3, None), (Fraction(1, 4), 2, 3, None)),
    )


class TestConfig:
    def test_mode_constraints(self):
        with pytest.raises(ScheduleError):
            SessionConfig(mode="direct", targets=(2, 3),
                          blocks=((Fraction(1, 2), 2, None, None),))
        with pytest.raises(ScheduleError):
            SessionConfig(mode="product", targets=(1, 3),
                          blocks=((Fraction(1, 2), 2, None, None),))

    def test_shape_constraints(self):
        with pytest.raises(ScheduleError):
            SessionConfig(mode="direct", targets=(1,), shape="staircase")
        with pytest.raises(ScheduleError):
            SessionConfig(mode="product", targets=(2,), shape="arithmetic",
                          r_seq=(2, 2))

    def test_json_roundtrip(self):
        cfg = small_direct_config()
        again = SessionConfig.from_json(cfg.to_json())
        assert again == cfg

    def test_targets_normalized(self):
        cfg = SessionConfig(mode="direct", targets=(2, 1, 1),
                            blocks=((Fraction(1, 2), 1, None, None),))
        assert cfg.targets == (1, 2)


class TestSynth:
    def test_deterministic_bundles(self, tmp_path):
        cfg = small_direct_config()
        save_bundle(synth(cfg), tmp_path / "a")
        save_bundle(synth(cfg), tmp_path / "b")
        assert bundle_hash(tmp_path / "a") == bundle_hash(tmp_path / "b")
        for name in ("config.json", "algebra.json", "schedule.json", "cocycle.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_load_roundtrip(self, tmp_path):
        session = synth(small_direct_config())
        save_bundle(session, tmp_path / "b")
        again = load_bundle(tmp_path / "b")
        assert again.schedule == session.schedule
        assert again.labels == session.labels
        assert again.maps == session.maps

    def test_trivial_targets_bundle(self):
        session = synth(SessionConfig(mode="direct", targets=(1,),
                                      blocks=((Fraction(1, 2), 2, None, None),)))
        assert session.k_order == 1
        assert session.validation.ok

    def test_product_bundle_has_delayed_stages(self):
        session = synth(SessionConfig(mode="product", targets=(2, 3),
                                      blocks=((Fraction(1, 4), 6, 4, None),)))
        kinds = {l.kind for l in session.labels}
        assert LABEL_DELAYED_TRANSLATE in kinds

    def test_validation_clean_for_delta_blocks(self):
        session = synth(small_direct_config())
        assert session.validation.ok


class TestCLI:
    def synth_bundle(self, tmp_path, cfg_dict, name="b"):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps(cfg_dict))
        out = tmp_path / name
        assert main(["synth", "--config", str(cfg_path), "--out", str(out)]) == 0
        return out

    def test_synth_verify_dump_roundtrip(self, tmp_path, capsys):
        cfg = {
            "mode": "direct", "targets": [1, 2],
            "blocks": [{"delta": [1, 2], "stages": 2, "r_start": 3},
                       {"delta": [1, 4], "stages": 2, "r_start": 4}],
        }
        bundle = self.synth_bundle(tmp_path, cfg)
        assert main(["verify", "--bundle", str(bundle), "--suite", "algebra"]) == 0
        assert main(["dump", "--bundle", str(bundle), "--what", "spectra",
                     "--out", str(tmp_path / "spec.json")]) == 0
        doc = json.loads((tmp_path / "spec.json").read_text())
        assert doc["components"]
        # report roundtrips through a re-parse
        assert main(["dump", "--bundle", str(bundle), "--what", "report",
                     "--out", str(tmp_path / "rep.json")]) == 0
        rep = json.loads((tmp_path / "rep.json").read_text())
        assert rep["multiplicities"] == [1, 2]
        assert rep["consistent"]

    def test_decay_csv_row_count(self, tmp_path):
        cfg = {
            "mode": "direct", "targets": [1],
            "shape": "staircase", "r_seq": [2, 3, 4, 5],
        }
        bundle = self.synth_bundle(tmp_path, cfg)
        assert main(["dump", "--bundle", str(bundle), "--what", "decay",
                     "--format", "csv", "--out", str(tmp_path / "d.csv")]) == 0
        lines = (tmp_path / "d.csv").read_text().strip().splitlines()
        assert lines[0] == "lag,pairId,value_numerator,value_denominator"
        n_cyl = 2  # height after the first stage
        lags = {int(l.split(",")[0]) for l in lines[1:]}
        assert len(lines) - 1 == len(lags) * n_cyl * n_cyl

    def test_corrupted_subgroup_exits_2(self, tmp_path):
        cfg = {
            "mode": "direct", "targets": [1, 2],
            "blocks": [{"delta": [1, 2], "stages": 2, "r_start": 3}],
        }
        bundle = self.synth_bundle(tmp_path, cfg)
        alg_path = bundle / "algebra.json"
        doc = json.loads(alg_path.read_text())
        assert doc["d_elements"]
        doc["d_elements"] = doc["d_elements"][1:]  # drop zero: not a subgroup
        alg_path.write_text(json.dumps(doc))
        assert main(["verify", "--bundle", str(bundle), "--suite", "algebra"]) == 2

    def test_rigid_bundle_fails_mixing_with_diagnostic(self, tmp_path):
        cfg = {
            "mode": "direct", "targets": [1],
            "shape": "arithmetic", "r_seq": [2, 2, 2, 2, 2, 2],
        }
        bundle = self.synth_bundle(tmp_path, cfg)
        code, results = run_verify(bundle, ("mixing",))
        assert code == 4
        assert "no decay" in results["mixing"]["detail"]["diagnostic"]

    def test_missing_bundle_is_reported(self, tmp_path):
        code, results = run_verify(tmp_path / "nope", ("algebra",))
        assert code == 2
        assert "error" in results


class TestShippedConfigs:
    @pytest.mark.parametrize("name", ["direct_12", "product_23", "staircase_mixing"])
    def test_config_parses(self, name):
        cfg = SessionConfig.from_json((CONFIG_DIR / f"{name}.json").read_text())
        assert cfg.num_stages >= 4

    def test_verify_all_green_on_shipped_configs(self, tmp_path):
        # the full gate run lives in the acceptance suite; here just synth
        for path in sorted(CONFIG_DIR.glob("*.json")):
            cfg = SessionConfig.from_json(path.read_text())
            session = synth(cfg)
            assert session.validation.ok, path.name
