class ProtocolError(Exception):
    pass


class ConfigError(ValueError):
    """Invalid run configuration; the message lists every failing field."""
    pass


class ReportError(Exception):
    def __init__(self, path, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
