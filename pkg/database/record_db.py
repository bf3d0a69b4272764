import math
import sqlite3


class RecordDB:
    def __init__(self, path="runs.db"):
        self.conn = sqlite3.connect(path)
        self.conn.execute("PRAGMA foreign_keys = ON")
        self.create_table()

    def create_table(self):
        self.conn.execute("""
        CREATE TABLE IF NOT EXISTS step_records (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER NOT NULL,
            step INTEGER NOT NULL,
            t REAL NOT NULL,
            key TEXT NOT NULL,
            value REAL,
            FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE
        )
        """)
        self.conn.execute("""
        CREATE TABLE IF NOT EXISTS convergence (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER NOT NULL,
            sweep TEXT NOT NULL,
            quantity TEXT NOT NULL,
            parameter REAL NOT NULL,
            value REAL,
            error REAL,
            FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE
        )
        """)
        self.conn.commit()

    def insert_series(self, run_id, rows):
        """One record per numeric column of every row; the row index is the step."""
        values = []
        for step, row in enumerate(rows):
            t = float(row.get("t", step))
            for key, value in row.items():
                if key == "t" or not isinstance(value, (int, float)):
                    continue
                value = float(value)
                values.append((run_id, step, t, key, None if math.isnan(value) else value))
        self.conn.executemany("""
            INSERT INTO step_records (run_id, step, t, key, value) VALUES (?, ?, ?, ?, ?)
        """, values)
        self.conn.commit()

    def insert_convergence(self, run_id, sweep, quantity, parameter, value, error):
        self.conn.execute("""
            INSERT INTO convergence (run_id, sweep, quantity, parameter, value, error)
            VALUES (?, ?, ?, ?, ?, ?)
        """, (run_id, sweep, quantity, parameter, value, error))
        self.conn.commit()

    def get_series(self, run_id, key):
        return self.conn.execute("""
            SELECT t, value FROM step_records WHERE run_id = ? AND key = ? ORDER BY step
        """, (run_id, key)).fetchall()

    def get_convergence(self, run_id):
        return self.conn.execute("""
            SELECT sweep, quantity, parameter, value, error
            FROM convergence WHERE run_id = ? ORDER BY sweep, quantity, parameter DESC
        """, (run_id,)).fetchall()

    def delete_run(self, run_id):
        self.conn.execute("DELETE FROM step_records WHERE run_id = ?", (run_id,))
        self.conn.execute("DELETE FROM convergence WHERE run_id = ?", (run_id,))
        self.conn.commit()

    def close(self):
        self.conn.close()
