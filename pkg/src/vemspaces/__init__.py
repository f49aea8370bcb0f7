"""Virtual element spaces with H(div)/H(curl) conformity on polytopal meshes."""

__version__ = "0.1.0"
