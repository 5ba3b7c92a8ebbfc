"""Python surface of the craft toolchain.

The heavy lifting lives in the compiled `_craft` extension; this package
re-exports it. When installed as a wheel the extension sits inside the
package; in a plain CMake build tree it is importable from the build
directory instead, so fall back to a top-level import.
"""

try:
    from craft_pipeline._craft import *  # noqa: F401,F403
    from craft_pipeline._craft import __version__  # noqa: F401
except ImportError:  # build-tree layout
    from _craft import *  # noqa: F401,F403
    from _craft import __version__  # noqa: F401
