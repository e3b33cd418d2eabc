"""seam: AoT-compile Wasm to native objects and link them with a WASI libOS runtime."""

__version__ = "0.1.0"
