from secantdyn.db import add_check, delete_run, finish_run, get_checks, get_run, init_db, list_runs, start_run


def test_db_roundtrip(tmp_path):
    dbfile = tmp_path / "verify_test.db"
    init_db(f"sqlite:///{dbfile}")
    run = start_run("default", 256)
    assert run.id is not None
    assert run.resolution == 256
    add_check(run.id, "construction", True, "d=2.4472135955", 0.1)
    add_check(run.id, "stability", True, "eigenvalues 483.55, 0.0500", 0.2)
    add_check(run.id, "containment", False, "cheb:3[1]: 4 outside", 1.5)
    done = finish_run(run.id)
    assert done.passed == 2
    assert done.failed == 1
    checks = get_checks(run.id)
    assert [c.name for c in checks] == ["construction", "stability", "containment"]
    # newest run first
    second = start_run("default", 512)
    assert [r.id for r in list_runs()] == [second.id, run.id]
    delete_run(run.id)
    assert get_run(run.id) is None
    assert get_checks(run.id) == []
    assert finish_run(run.id) is None
