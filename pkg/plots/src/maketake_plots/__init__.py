"""Figure rendering for the make-take laboratory's CSV outputs."""

from .figures import FIGURES, SchemaMismatch, build_figure, render

__version__ = "0.1.0"

__all__ = ["FIGURES", "SchemaMismatch", "build_figure", "render", "__version__"]
