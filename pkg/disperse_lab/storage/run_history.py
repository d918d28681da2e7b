"""Run ledger using SQLite."""

import json
import logging
import sqlite3
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class RunLedgerDB:
    """SQLite ledger of subcommand runs and verification checks."""

    def __init__(self, db_path: str = "data/run_ledger.db"):
        """Initialize the run ledger.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_db()

    def _init_db(self) -> None:
        """Initialize database schema."""
        with sqlite3.connect(self.db_path) as conn:
            conn.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp TEXT NOT NULL,
                    command TEXT NOT NULL,
                    config TEXT,
                    exit_code INTEGER
                )
            """)

            conn.execute("""
                CREATE TABLE IF NOT EXISTS checks (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp TEXT NOT NULL,
                    run_id INTEGER REFERENCES runs(id),
                    name TEXT NOT NULL,
                    value REAL,
                    threshold REAL,
                    passed BOOLEAN NOT NULL,
                    detail TEXT
                )
            """)

            # Create indexes
            conn.execute("CREATE INDEX IF NOT EXISTS idx_runs_timestamp ON runs(timestamp)")
            conn.execute("CREATE INDEX IF NOT EXISTS idx_checks_timestamp ON checks(timestamp)")
            conn.execute("CREATE INDEX IF NOT EXISTS idx_checks_name ON checks(name)")

            conn.commit()

    @staticmethod
    def _now() -> str:
        return datetime.now(timezone.utc).isoformat()

    def start_run(self, command: str, config: Optional[Dict[str, Any]] = None) -> int:
        """Record the start of a subcommand run.

        Args:
            command: Subcommand name
            config: Effective run configuration

        Returns:
            Row id of the new run
        """
        payload = json.dumps(config, sort_keys=True, default=str) if config is not None else None
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.execute(
                "INSERT INTO runs (timestamp, command, config) VALUES (?, ?, ?)",
                (self._now(), command, payload),
            )
            conn.commit()
            run_id = int(cursor.lastrowid)

        logger.debug(f"Ledger run {run_id} started: {command}")
        return run_id

    def finish_run(self, run_id: int, exit_code: int) -> None:
        with sqlite3.connect(self.db_path) as conn:
            conn.execute("UPDATE runs SET exit_code = ? WHERE id = ?", (exit_code, run_id))
            conn.commit()

        logger.debug(f"Ledger run {run_id} finished with exit code {exit_code}")

    def save_check(
        self,
        run_id: Optional[int],
        name: str,
        value: Optional[float],
        threshold: Optional[float],
        passed: bool,
        detail: str = "",
    ) -> None:
        """Save one verification check.

        Args:
            run_id: Owning run (None for ad-hoc checks)
            name: Check name
            value: Measured value
            threshold: Certified threshold the value is compared against
            passed: Whether the check passed
            detail: Free-form note
        """
        with sqlite3.connect(self.db_path) as conn:
            conn.execute(
                "INSERT INTO checks (timestamp, run_id, name, value, threshold, passed, detail) "
                "VALUES (?, ?, ?, ?, ?, ?, ?)",
                (self._now(), run_id, name, value, threshold, passed, detail),
            )
            conn.commit()

        logger.debug(f"Saved check {name}: value={value} threshold={threshold} passed={passed}")

    def get_checks(self, name: Optional[str] = None, days: int = 30) -> List[Dict[str, Any]]:
        """Get recorded checks.

        Args:
            name: Restrict to one check name
            days: Number of days of history to retrieve

        Returns:
            List of check rows (most recent first)
        """
        query = """
            SELECT run_id, timestamp, name, value, threshold, passed, detail FROM checks
            WHERE datetime(timestamp) > datetime('now', ? || ' days')
        """
        params: List[Any] = [f"-{days}"]
        if name is not None:
            query += " AND name = ?"
            params.append(name)
        query += " ORDER BY id DESC"

        with sqlite3.connect(self.db_path) as conn:
            conn.row_factory = sqlite3.Row
            rows = [dict(row) for row in conn.execute(query, params).fetchall()]

        for row in rows:
            row["passed"] = bool(row["passed"])
        logger.debug(f"Retrieved {len(rows)} check records from last {days} days")
        return rows

    def get_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        """Most recent runs, newest first."""
        with sqlite3.connect(self.db_path) as conn:
            conn.row_factory = sqlite3.Row
            rows = conn.execute(
                "SELECT id, timestamp, command, config, exit_code FROM runs "
                "ORDER BY id DESC LIMIT ?",
                (limit,),
            ).fetchall()
        return [dict(row) for row in rows]
