import os
import hashlib
import logging

class OutputFileMetadataError(Exception):
    # Base class for exception related to trying to access unavailable file metadata
    pass

class IntegrityError(IOError):
    # Raised when a file no longer matches its recorded checksum
    pass

# Bytes read at a time while hashing
HASH_BLOCK = 1 << 20


def file_checksum(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(HASH_BLOCK), b""):
            digest.update(block)
    return digest.hexdigest()


class OutputFile(object):
    # Hold information on one file written by a run
    def __init__(self, file_id, file_type, path, stage=None, **kwargs):

        # File Id
        self.file_id = file_id

        # Output type e.g. 'rates', 'posterior'
        self.type = file_type

        # Absolute path of the file
        self.path = path

        # Check to make sure value is string (Path)
        assert isinstance(self.path, str), "OutputFile path must be string! Recieved '%s' of type '%s'" % (path, type(path))

        # Run stage that wrote the file
        self.stage = stage

        # Size in bytes and sha256, known once the file is finalized
        self.size = None
        self.checksum = None

        # Metadata associated with the file
        self.metadata = kwargs

    @property
    def filename(self):
        return os.path.basename(self.path)

    def get_file_id(self):
        return self.file_id

    def get_path(self):
        return self.path

    def get_type(self):
        return self.type

    def get_size(self):
        return self.size

    def get_checksum(self):
        return self.checksum

    def exists(self):
        return os.path.isfile(self.path)

    def finalize(self):
        # Record size and checksum of the written file
        if not self.exists():
            logging.error("Output file '%s' of type '%s' was never written: %s" % (self.file_id, self.type, self.path))
            raise IOError("Declared output file is missing!")
        self.size = os.path.getsize(self.path)
        self.checksum = file_checksum(self.path)
        logging.debug("Output %s: %d bytes, sha256 %s" % (self.filename, self.size, self.checksum))
        return self.checksum

    def verify(self):
        # Compare the file on disk against its recorded checksum
        if self.checksum is None:
            logging.error("Output file '%s' has no recorded checksum" % self.file_id)
            raise OutputFileMetadataError("Output file has no recorded checksum!")
        if not self.exists():
            logging.error("Output file missing: %s" % self.path)
            raise IntegrityError("Output file missing: %s" % self.path)
        actual = file_checksum(self.path)
        if actual != self.checksum:
            logging.error("Checksum mismatch for %s: recorded %s, found %s" % (self.path, self.checksum, actual))
            raise IntegrityError("Checksum mismatch for %s" % self.path)
        return True

    def has_metadata_type(self, meta_type):
        return meta_type in self.metadata

    def get_metadata(self, meta_type):
        if not meta_type in self.metadata:
            logging.error("OutputFile '%s' of type '%s' doesn't have metadata of type '%s'" % (self.file_id, self.type, meta_type))
            raise OutputFileMetadataError("OutputFile does not have metadata of type '%s'" % meta_type)
        return self.metadata[meta_type]

    def set_metadata(self, meta_type, val):
        self.metadata[meta_type] = val

    def __str__(self):
        return self.path

    def debug_string(self):
        to_return = "=============\n"
        to_return += "FileID:\t%s\n" % self.file_id
        to_return += "Type:\t%s\n" % self.type
        to_return += "Path:\t%s\n" % self.path
        to_return += "Stage:\t%s\n" % self.stage
        to_return += "size:\t%s\n" % self.size
        to_return += "sha256:\t%s\n" % self.checksum
        to_return += "=============\n"
        return to_return
