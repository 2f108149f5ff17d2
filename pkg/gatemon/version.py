__all__ = [ "__version__" ]  # pylint: disable=unused-variable

__version__ = {}
__version__["short"] = "0.1.0"
__version__["tag"] = "alpha"
__version__["full"] = f"{__version__['short']}-{__version__['tag']}"
