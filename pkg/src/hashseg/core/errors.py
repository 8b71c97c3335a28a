"""
Module: errors.py
Description: Exception hierarchy shared by every hashseg module

All errors derive from HashSegError so callers (the CLI in particular) can
catch one root. Argument problems additionally derive from ValueError or
KeyError so ordinary Python handling keeps working.
"""


class HashSegError(Exception):
    """Root of all hashseg errors"""


# Ingestion
class InputFormatError(HashSegError, ValueError):
    """A file could not be parsed or has an unexpected layout"""


class IndexFormatError(InputFormatError):
    """An index archive is corrupt or uses an unsupported format version"""


# Hierarchy
class MalformedGrid(HashSegError, ValueError):
    """UCM grid has the wrong shape or values outside [0, 1]"""


class InvalidMergeList(HashSegError, ValueError):
    """Merge list references unknown nodes, decreases in strength or leaves several roots"""


class UnknownNode(HashSegError, KeyError):
    """Node id does not exist in the region tree"""


class HierarchyMismatch(HashSegError, ValueError):
    """Image and region tree disagree on the pixel domain"""


# Codes / LSH
class BoxOutOfBounds(HashSegError, ValueError):
    """Pixel box is empty or extends past the image"""


class DimensionMismatch(HashSegError, ValueError):
    """Two codes (or a code and an index) have different dimensions"""


class EmptyDataset(HashSegError, ValueError):
    """No codes to fit or search"""


class MixedDimensions(HashSegError, ValueError):
    """Codes passed to fit do not share one dimension"""


class EmptyCandidates(HashSegError):
    """No indexed item shares a bucket with the query in any table"""

    def __init__(self, tables: int):
        super().__init__(f"query fell into empty buckets in all {tables} tables")
        self.tables = tables


# Pipeline / pruning / evaluation
class EmptyHierarchy(HashSegError):
    """No hierarchy region is eligible for indexing"""


class MixedImages(HashSegError, ValueError):
    """Instances passed together belong to different images"""


class EmptyMask(HashSegError, ValueError):
    """A mask operation needs at least one set pixel"""


class NoGroundTruth(HashSegError, ValueError):
    """Evaluation called without ground-truth instances"""
