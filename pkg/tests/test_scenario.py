import json

import pytest

from neurovirt.scenario import (
    DEFAULT_MODULE_SHARES,
    ParseError,
    ValidationError,
    load_scenario,
    scenario_from_dict,
)


def minimal():
    return {"schema_version": 1, "seed": 7}


def test_minimal_scenario_gets_defaults():
    sc = scenario_from_dict(minimal())
    assert sc.seed == 7
    assert sc.fabric.total.lut == 504_000
    assert sc.link.latency_ns == 10_000
    assert set(sc.modules) == set(DEFAULT_MODULE_SHARES)
    assert sc.energy.base_mj == 25.0


def test_missing_seed_rejected():
    with pytest.raises(ValidationError) as err:
        scenario_from_dict({"schema_version": 1})
    assert err.value.field == "$.seed"


def test_unsupported_version_rejected():
    with pytest.raises(ValidationError) as err:
        scenario_from_dict({"schema_version": 99, "seed": 0})
    assert err.value.field == "$.schema_version"


def test_parse_error_carries_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "schema_version": 1,\n  "seed": oops\n}\n')
    with pytest.raises(ParseError) as err:
        load_scenario(str(path))
    assert err.value.line == 3
    assert str(path) in str(err.value)


def test_load_round_trip(tmp_path):
    data = minimal()
    data["vms"] = [{"id": "a", "share": 0.25, "cores": 2}]
    data["tasks"] = [
        {"id": "t", "steps": 10, "input_rate": 2, "fan_in": 8, "mode": "spiking"}
    ]
    data["transfers"] = [{"vm": "a", "size_bytes": 4096, "count": 3}]
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(data))
    sc = load_scenario(str(path))
    assert sc.vms[0].id == "a"
    assert sc.vms[0].cores == 2
    assert sc.tasks[0].fan_in == 8
    assert sc.transfers[0].count == 3


def test_unknown_vm_reference_rejected():
    data = minimal()
    data["transfers"] = [{"vm": "ghost", "size_bytes": 4096}]
    with pytest.raises(ValidationError) as err:
        scenario_from_dict(data)
    assert "ghost" in str(err.value)
    assert err.value.field == "$.transfers[0].vm"


def test_unknown_module_reference_rejected():
    data = minimal()
    data["vms"] = [{"id": "a", "share": 0.25}]
    data["reconfigs"] = [{"vm": "a", "module": "ghost", "mode": "partial"}]
    with pytest.raises(ValidationError) as err:
        scenario_from_dict(data)
    assert err.value.field == "$.reconfigs[0].module"


def test_duplicate_vm_ids_rejected():
    data = minimal()
    data["vms"] = [{"id": "a", "share": 0.1}, {"id": "a", "share": 0.1}]
    with pytest.raises(ValidationError):
        scenario_from_dict(data)


def test_bad_peak_table_rejected():
    data = minimal()
    data["link"] = {"peak_gibps": {"1": 3.0, "2": 1.0}}
    with pytest.raises(ValidationError) as err:
        scenario_from_dict(data)
    assert err.value.field == "$.link"


def test_task_field_validation():
    data = minimal()
    data["tasks"] = [{"id": "t", "steps": 0, "input_rate": 1, "fan_in": 1}]
    with pytest.raises(ValidationError) as err:
        scenario_from_dict(data)
    assert err.value.field == "$.tasks[0].steps"


def test_deadline_must_exceed_arrival():
    data = minimal()
    data["tasks"] = [
        {"id": "t", "steps": 1, "input_rate": 1, "fan_in": 1,
         "deadline_ns": 5, "arrival_ns": 10}
    ]
    with pytest.raises(ValidationError) as err:
        scenario_from_dict(data)
    assert err.value.field == "$.tasks[0].deadline_ns"


def test_custom_module_by_footprint():
    data = minimal()
    data["modules"] = [
        {"id": "x", "kind": "router",
         "footprint": {"lut": 50_400, "memory_bytes": 1_000, "io_pins": 4, "dsp": 8}}
    ]
    sc = scenario_from_dict(data)
    # bitstream follows the lut-share proportionality rule: 10% of 30 MiB
    assert sc.modules["x"].bitstream_bytes == round(30 * 1024 * 1024 * 0.1)
