import os
import logging
import abc

REPO_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


class ConfigValidationError(IOError):
    # Carries every problem found in a config, not only the first
    def __init__(self, message, errors=None):
        super(ConfigValidationError, self).__init__(message)
        self.errors = list(errors) if errors is not None else []


def resolve_path(path, root):
    return path if os.path.isabs(path) else os.path.join(root, path)


class BaseParser(object, metaclass=abc.ABCMeta):
    """
    Reads one run config layer and checks it against a spec shipped with the repository.

    A layer is either a path (relative paths start at the working directory) or an in-memory
    object (list of lines, dict). Specs given as relative paths start at the repository root.
    Problems are collected in self.errors; with raise_errors they are logged and raised together.
    """
    def __init__(self, source, spec_file, raise_errors=True):
        self.in_memory          = not isinstance(source, str)
        self.config_file        = source if self.in_memory else resolve_path(source, os.getcwd())
        self.config_spec_file   = resolve_path(spec_file, REPO_DIR)
        self.errors             = []

        if not self.in_memory:
            self.require_file(self.config_file, "Run config")
        self.require_file(self.config_spec_file, "Config spec")

        self.config = self.read_config()
        self.validate_config()

        if self.errors and raise_errors:
            for error in self.errors:
                logging.error("Invalid config: %s" % error)
            raise ConfigValidationError("%d problem(s) in config %s" % (len(self.errors), self.describe()),
                                        self.errors)

    @staticmethod
    def require_file(path, kind):
        if not os.path.isfile(path):
            logging.error("%s not found: %s" % (kind, path))
            raise IOError("%s not found!" % kind)

    def describe(self):
        return "<in-memory>" if self.in_memory else self.config_file

    @abc.abstractmethod
    def read_config(self):
        pass

    @abc.abstractmethod
    def validate_config(self):
        pass

    def get_config(self):
        return self.config

    def get_errors(self):
        return self.errors
