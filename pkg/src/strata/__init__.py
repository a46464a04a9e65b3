"""Session-based bimodal data exploration with a four-level semantic hierarchy.

Generated narrative text and rule-synthesized charts are co-equal surfaces:
every text span carries field/value/level metadata, every chart is a
declarative spec over the same dataset, and a source-agnostic drag packet
moves between them in all four directions (text-to-text, text-to-chart,
chart-to-text, chart-to-chart).
"""

from .analysis import RelationshipFact, cluster, correlation, detect_outliers, trend
from .charts import ChartKind, ChartSpec, synthesize_chart, update_chart
from .dataset import (
    Dataset,
    FieldDescriptor,
    FieldKind,
    StatisticKind,
    compute_statistic,
    describe_l1,
    load_dataset,
)
from .interaction import (
    DropEffect,
    DropTarget,
    complement_levels,
    packet_from_chart,
    route_drop,
)
from .levels import SemanticLevel, color_for
from .llm import (
    MockProvider,
    PromptBundle,
    RemoteProvider,
    ScriptedProvider,
    build_followup_prompt,
    build_init_prompt,
    generate,
)
from .narrative import (
    GroundingReport,
    NarrativeDocument,
    Paragraph,
    Sentence,
    SentenceLeaf,
    ground_check,
    packet_from_text,
    renumber_chart_refs,
    validate_tree,
)
from .packets import DragPacket, PacketSource, ValueClaim
from .session import (
    ReplayScript,
    Session,
    SessionStore,
    create_session,
    load_session,
    replay,
    save_session,
)

__version__ = "0.1.0"
