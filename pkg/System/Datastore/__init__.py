from .OutputFile import OutputFile, OutputFileMetadataError, IntegrityError, file_checksum
from .OutputStore import OutputStore, format_value, csv_text