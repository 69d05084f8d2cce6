"""panoptica: a schema-driven navigational data engine.

Define a data vocabulary (classes, attributes, links), load objects under
referential-integrity control, and explore the result through a focus+context
view with bidirectional link traversal, filters, anchors, delimited imports,
reports, and automatic compilation of the logical schema to SQL DDL.
"""

from .errors import EngineError
from .ingest import ImportMapping, ImportReport, InspectResult, inspect, run_import
from .recognition import ClassMatch, Perception, classify, match_report
from .reports import ReportSpec, export_store, list_report, load_xml_export, object_report
from .store import ObjectId, ObjectRecord, Store, Violation
from .traversal import (
    Clause,
    Filter,
    Navigator,
    Predicate,
    Session,
    ViewModel,
)
from .values import Kind
from .vocabulary import (
    AttributeDef,
    ClassDef,
    Diagnostic,
    Vocabulary,
    add_attribute,
    compile_ddl,
    create_class,
    create_relationship,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeDef",
    "ClassDef",
    "ClassMatch",
    "Clause",
    "Diagnostic",
    "EngineError",
    "Filter",
    "ImportMapping",
    "ImportReport",
    "InspectResult",
    "Kind",
    "Navigator",
    "ObjectId",
    "ObjectRecord",
    "Perception",
    "Predicate",
    "ReportSpec",
    "Session",
    "Store",
    "ViewModel",
    "Violation",
    "Vocabulary",
    "add_attribute",
    "classify",
    "compile_ddl",
    "create_class",
    "create_relationship",
    "export_store",
    "inspect",
    "list_report",
    "load_xml_export",
    "match_report",
    "object_report",
    "run_import",
    "validate",
]
