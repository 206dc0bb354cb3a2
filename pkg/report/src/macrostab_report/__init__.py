from macrostab_report.schemas import FigureKind, FigureSpec, SchemaError
from macrostab_report.figures import render

__all__ = ["FigureKind", "FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
