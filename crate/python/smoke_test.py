"""Smoke test for the droidsec_py extension module."""

import json
import pathlib

import droidsec_py as ds

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def main():
    platform = ds.Platform.sample()
    assert "CAMERA" in platform.builtin_permissions()

    s = ds.State.empty()
    assert s.installed_apps() == []
    assert ds.check_validity(s) == []

    install = {
        "install": {
            "app": "notes",
            "m": {
                "components": [{"id": "notes.main", "kind": "activity"}],
                "usedPerms": ["CAMERA"],
            },
            "c": "certA",
            "lRes": [],
        }
    }
    resp, s1 = ds.step(s, json.dumps(install))
    assert resp == "ok", resp
    assert s1.installed_apps() == ["notes"]
    assert not ds.app_has_permission(s1, "notes", "CAMERA")

    resp, s2 = ds.step(s1, json.dumps({"grant": {"p": "CAMERA", "app": "notes"}}))
    assert resp == "ok", resp
    assert ds.app_has_permission(s2, "notes", "CAMERA")

    resp, s3 = ds.step(s2, json.dumps({"uninstall": {"app": "missing"}}))
    assert resp == "no_such_app" and s3 == s2

    again = ds.State.from_json(s2.to_json())
    assert again == s2 and again.digest() == s2.digest()

    text = (FIXTURES / "delegation_survives_revoke.trace.json").read_text()
    responses, last = ds.run_trace(text)
    assert responses == ["ok"] * 4, responses
    assert ds.check_validity(last) == []

    g = ds.gen_valid_state(42, 3)
    assert g == ds.gen_valid_state(42, 3)
    assert ds.check_validity(g, platform) == []

    for name, cases, failures in ds.run_props(cases=20):
        assert failures == 0, (name, cases, failures)
    assert len(ds.PROPERTY_NAMES) == 9

    try:
        ds.step(s, "{bad json")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed action accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
