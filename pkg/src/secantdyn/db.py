from typing import Optional, List
import datetime
import os
from sqlmodel import SQLModel, Field, create_engine, Session, select

DATABASE_URL = os.getenv("SECANTDYN_DB_URL", "sqlite:///secantdyn.db")

utcnow = lambda: datetime.datetime.now(datetime.timezone.utc)


class VerifyRun(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    started_at: datetime.datetime = Field(default_factory=utcnow)
    polynomial_set: str = Field(default="")
    resolution: int = Field(default=0)
    passed: int = Field(default=0)
    failed: int = Field(default=0)


class CheckRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: int = Field(foreign_key="verifyrun.id", index=True)
    name: str
    passed: bool
    detail: str = Field(default="")
    elapsed: float = Field(default=0.0)


_engine = None


def init_db(url: str = DATABASE_URL):
    global _engine
    _engine = create_engine(url, echo=False)
    SQLModel.metadata.create_all(_engine)


def get_session() -> Session:
    if _engine is None:
        init_db()
    return Session(_engine)

# CRUD helpers

def start_run(polynomial_set: str, resolution: int) -> VerifyRun:
    with get_session() as s:
        run = VerifyRun(polynomial_set=polynomial_set, resolution=resolution)
        s.add(run)
        s.commit()
        s.refresh(run)
        return run


def add_check(run_id: int, name: str, passed: bool, detail: str = "", elapsed: float = 0.0) -> CheckRecord:
    with get_session() as s:
        rec = CheckRecord(run_id=run_id, name=name, passed=passed, detail=detail, elapsed=elapsed)
        s.add(rec)
        s.commit()
        s.refresh(rec)
        return rec


def finish_run(run_id: int) -> Optional[VerifyRun]:
    """Store pass/fail totals from the run's checks."""
    with get_session() as s:
        run = s.get(VerifyRun, run_id)
        if not run:
            return None
        checks = s.exec(select(CheckRecord).where(CheckRecord.run_id == run_id)).all()
        run.passed = sum(1 for c in checks if c.passed)
        run.failed = sum(1 for c in checks if not c.passed)
        s.add(run)
        s.commit()
        s.refresh(run)
        return run


def get_run(run_id: int) -> Optional[VerifyRun]:
    with get_session() as s:
        return s.get(VerifyRun, run_id)


def list_runs(limit: int = 20) -> List[VerifyRun]:
    with get_session() as s:
        return s.exec(select(VerifyRun).order_by(VerifyRun.id.desc()).limit(limit)).all()


def get_checks(run_id: int) -> List[CheckRecord]:
    with get_session() as s:
        return s.exec(select(CheckRecord).where(CheckRecord.run_id == run_id)).all()


def delete_run(run_id: int) -> None:
    with get_session() as s:
        for rec in s.exec(select(CheckRecord).where(CheckRecord.run_id == run_id)).all():
            s.delete(rec)
        run = s.get(VerifyRun, run_id)
        if run:
            s.delete(run)
        s.commit()
