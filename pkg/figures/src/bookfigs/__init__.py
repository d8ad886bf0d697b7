"""Figure regeneration for latent-order-book experiment outputs."""

from .figures import FIGURE_IDS, FigureSpec, render
from .readers import SchemaError, read_csv

__version__ = "0.1.0"
