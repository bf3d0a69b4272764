import sqlite3
from datetime import datetime


class RunDB:
    def __init__(self, path="runs.db"):
        self.conn = sqlite3.connect(path)
        self.create_table()

    def create_table(self):
        self.conn.execute("""
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            name TEXT NOT NULL,
            command TEXT NOT NULL,
            config_json TEXT NOT NULL,
            dt REAL,
            t_end REAL,
            status TEXT NOT NULL DEFAULT 'running',
            started_at TEXT NOT NULL,
            finished_at TEXT,
            out_dir TEXT
        )
        """)
        self.conn.commit()

    def insert(self, name, command, config_json, dt, t_end, out_dir):
        cur = self.conn.execute("""
            INSERT INTO runs (name, command, config_json, dt, t_end, started_at, out_dir)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        """, (name, command, config_json, dt, t_end, datetime.now().isoformat(timespec="seconds"), out_dir))
        self.conn.commit()
        return cur.lastrowid

    def update_status(self, run_id, status):
        self.conn.execute("""
            UPDATE runs SET status = ?, finished_at = ? WHERE id = ?
        """, (status, datetime.now().isoformat(timespec="seconds"), run_id))
        self.conn.commit()

    def get_all(self):
        return self.conn.execute("""
            SELECT id, name, command, dt, t_end, status, started_at, finished_at, out_dir
            FROM runs ORDER BY id
        """).fetchall()

    def get_by_name(self, name):
        return self.conn.execute("""
            SELECT id, name, command, dt, t_end, status, started_at, finished_at, out_dir
            FROM runs WHERE name = ? ORDER BY id
        """, (name,)).fetchall()

    def delete(self, run_id):
        self.conn.execute("DELETE FROM runs WHERE id = ?", (run_id,))
        self.conn.commit()

    def close(self):
        self.conn.close()
