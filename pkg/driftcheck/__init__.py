import os
module_abs_filename = os.path.abspath(__file__)
module_dir = os.path.dirname(module_abs_filename)


def _get_version():
    def metadata_version():
        from importlib import metadata
        return metadata.version("driftcheck")

    def tomli_version():
        import tomli
        with open(os.path.join(os.path.dirname(module_dir), "pyproject.toml"), "rb") as f:
            return tomli.load(f)["tool"]["poetry"]["version"]

    try:
        if os.path.isfile(os.path.join(os.path.dirname(module_dir), "pyproject.toml")):
            try:
                return tomli_version()
            except Exception:
                return "0.0.0"
        else:
            try:
                return metadata_version()
            except Exception:
                return "0.0.0"

    except Exception:
        return "0.0.0"


__version__ = _get_version()
