from .anc import AncManager
from .coherence import CoherenceManager
from .pid import PidManager
from .reports import ReportManager
from .secondary_path import SecondaryPathManager
