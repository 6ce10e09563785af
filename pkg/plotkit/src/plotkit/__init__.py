from .charts import ChartError, ChartSpec, render

__version__ = "0.1.0"
__all__ = ["ChartError", "ChartSpec", "render", "__version__"]
