from importlib.metadata import version

__version__ = version("polarity-lab")
del version

__all__ = ["__version__"]
