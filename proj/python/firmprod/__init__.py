"""Firm productivity estimation and clustering toolkit.

Thin wrapper over the compiled extension; everything public lives in
``firmprod._core``.
"""

try:
    from firmprod import _core
except ImportError:  # in-tree build: _core.so sits directly on sys.path
    import _core

globals().update(
    {name: getattr(_core, name) for name in dir(_core) if not name.startswith("_")}
)

__version__ = "0.1.0"
__all__ = [name for name in dir(_core) if not name.startswith("_")]
