"""Offline converter from 10 Hz interactive driving records to the
simulator's scenario JSON schema."""

from .convert import ConversionManifest, RecordError, convert_record, convert_records
from .validate import validate_output, validate_scenario_doc

__version__ = "0.1.0"

__all__ = [
    "ConversionManifest",
    "RecordError",
    "convert_record",
    "convert_records",
    "validate_output",
    "validate_scenario_doc",
    "__version__",
]
