import io
import os
import csv
import logging
from collections import OrderedDict

from System.Datastore.OutputFile import OutputFile


def format_value(value):
    # Fixed formatting keeps reruns byte identical
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.12g" % value
    if value is None:
        return ""
    return str(value)


def csv_text(columns, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


class OutputStore(object):
    # Owns the output directory of one run; every file written there is declared here first
    def __init__(self, output_dir):
        self.output_dir = os.path.abspath(output_dir)
        self.files = OrderedDict()

    def prepare(self):
        # Create the output directory and check it can be written
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            logging.error("Unable to create output directory %s: %s" % (self.output_dir, e))
            raise IOError("Output directory cannot be created!")
        if not os.access(self.output_dir, os.W_OK):
            logging.error("Output directory is not writable: %s" % self.output_dir)
            raise IOError("Output directory is not writable!")

    def declare(self, stage, file_type, filename, **kwargs):
        # Reserve a path inside the output directory; one writer per file
        if filename in self.files:
            logging.error("Output file '%s' declared twice (stage %s)" % (filename, stage))
            raise RuntimeError("Output file '%s' has been declared multiple times!" % filename)
        output_file = OutputFile("%s.%s" % (stage, file_type), file_type, os.path.join(self.output_dir, filename),
                                 stage, **kwargs)
        self.files[filename] = output_file
        return output_file

    def write_csv(self, stage, file_type, filename, columns, rows):
        output_file = self.declare(stage, file_type, filename)
        with open(output_file.get_path(), "w", newline="") as fh:
            fh.write(csv_text(columns, rows))
        logging.info("Wrote %s" % output_file.get_path())
        return output_file

    def relative_path(self, output_file):
        return os.path.relpath(output_file.get_path(), self.output_dir)

    def get_files(self):
        return list(self.files.values())

    def finalize(self):
        # Checksum every declared file; raises if one was never written
        for output_file in self.files.values():
            output_file.finalize()
        return self.get_files()
