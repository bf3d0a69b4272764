"""PDF summary of a convergence study."""

import logging
import math

from fpdf import FPDF

logger = logging.getLogger(__name__)


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.4e}"


def write_convergence_pdf(path, title, rows, orders):
    """One table per (sweep, quantity): parameter, error, local order, then the fitted slope.

    ``rows`` are convergence rows as produced by the runner, ``orders`` maps
    (sweep, quantity) to the fitted order.
    """
    pdf = FPDF()
    pdf.add_page()
    pdf.set_font("Arial", "B", 14)
    pdf.cell(0, 10, title, ln=1)

    groups = {}
    for row in rows:
        groups.setdefault((row["sweep"], row["quantity"]), []).append(row)

    for (sweep, quantity), group in groups.items():
        pdf.set_font("Arial", "B", 11)
        pdf.cell(0, 8, f"{quantity} against {sweep}", ln=1)
        pdf.set_font("Arial", "", 10)
        for header in ("parameter", "error", "local order"):
            pdf.cell(50, 7, header, border=1)
        pdf.ln()
        for row in group:
            pdf.cell(50, 7, _fmt(row["parameter"]), border=1)
            pdf.cell(50, 7, _fmt(row["error"]), border=1)
            pdf.cell(50, 7, _fmt(row.get("local_order")), border=1)
            pdf.ln()
        pdf.cell(0, 8, f"fitted order: {_fmt(orders.get((sweep, quantity)))}", ln=1)
        pdf.ln(2)

    pdf.output(path, "F")
    logger.info("convergence report written to %s", path)
    return path
