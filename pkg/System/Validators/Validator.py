import abc
import logging

class Validator(object, metaclass=abc.ABCMeta):
    # Collects every problem of one kind before anything is computed

    def __init__(self):

        # Initializing validator name
        self.name = self.__class__.__name__

        # Define responses
        self.warnings   = []
        self.errors     = []

    @abc.abstractmethod
    def run_checks(self):
        pass

    def validate(self):
        # Returns True if errors were found; reports are printed either way
        self.run_checks()
        has_errors = self.has_errors()
        self.print_reports()
        return has_errors

    def report_warning(self, message):
        self.warnings.append(message)

    def report_error(self, message):
        self.errors.append(message)

    def require(self, condition, message):
        if not condition:
            self.report_error(message)
        return condition

    def has_errors(self):
        return len(self.errors) != 0

    def get_errors(self):
        return list(self.errors)

    def get_warnings(self):
        return list(self.warnings)

    def print_reports(self):
        # Printed in the order found
        for error in self.errors:
            logging.error("%s: %s" % (self.name, error))
        for warning in self.warnings:
            logging.warning("%s: %s" % (self.name, warning))
