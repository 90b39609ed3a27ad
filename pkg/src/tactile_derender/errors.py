"""Toolkit error type with machine-readable categories.

Every raised failure carries a short stable category string (e.g.
"empty-mesh", "open-mesh", "empty-cloud", "config-invalid") so the CLI can
report errors in a scriptable form and map them to exit codes.
"""


class ToolkitError(Exception):

    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category

    def __str__(self):
        return f"{self.category}: {self.args[0]}"
