"""The bundled worked example: Seattle housing, explored end to end.

This module packages one complete exploration as data: the dataset, the
goal, a seven-step replay script covering all four interaction directions
(text-to-text, text-to-chart, chart-to-chart, chart-to-text), and the three
canned narrative responses the script needs. The responses are built
programmatically so every numeric claim is computed from the dataset itself
and grounding always passes.

Fixture directories for :class:`strata.llm.MockProvider` are materialized by
replaying the script once through a recording provider, which keeps the
digest-to-response table correct by construction.
"""

from __future__ import annotations

import importlib.resources
import json
from pathlib import Path

from .dataset import Dataset, compute_statistic, load_dataset
from .interaction import DropTarget
from .llm import Provider, RecordingProvider, ScriptedProvider
from .packets import DragPacket, PacketSource, ValueClaim
from .session import ReplayScript, ReplayStep, Session, replay
from .levels import SemanticLevel

GOAL = "find a home for a family of four"

FIELD_DESCRIPTIONS = {
    "zip_code": "Zip Code",
    "avg_price": "Average House Price",
    "avg_bedrooms": "Average Number of Bedrooms",
    "avg_bathrooms": "Average Number of Bathrooms",
    "avg_house_size": "Average House Size",
    "avg_lot_size": "Average Lot Size",
}

FIELD_UNITS = {
    "avg_price": "USD",
    "avg_house_size": "sqft",
    "avg_lot_size": "sqft",
}

NL_DESCRIPTION = (
    "Average residential real estate figures per Seattle zip code: price, "
    "bedrooms, bathrooms, house size, and lot size."
)


def dataset_path() -> Path:
    resource = importlib.resources.files("strata").joinpath("data/seattle_housing.csv")
    with importlib.resources.as_file(resource) as path:
        return Path(path)


def seattle_dataset() -> Dataset:
    return load_dataset(
        dataset_path(),
        name="seattle-housing",
        nl_description=NL_DESCRIPTION,
        key_field="zip_code",
        units=FIELD_UNITS,
        descriptions=FIELD_DESCRIPTIONS,
    )


def _leaf(leaf_id: str, text: str, layer: int, fields=(), values=()) -> dict:
    return {
        "kind": "leaf",
        "id": leaf_id,
        "text": text,
        "layer": layer,
        "fields": list(fields),
        "values": [dict(v) for v in values],
    }


def opening_response(dataset: Dataset) -> str:
    """P1: the session opener, mixing all four levels."""
    mean_price = compute_statistic(dataset, "avg_price", "mean")
    stdev_price = compute_statistic(dataset, "avg_price", "stdev")
    tree = {
        "paragraphs": [
            {
                "id": "p1",
                "sentences": [
                    {
                        "items": [
                            _leaf(
                                "p1-intro",
                                "Looking for a family home in Seattle, this dataset gives "
                                "a compact view of what each zip code offers.",
                                4,
                            )
                        ]
                    },
                    {
                        "items": [
                            _leaf("p1-each", "Every zip code is summarized by ", 1),
                            _leaf(
                                "p1-rooms",
                                "bedrooms and bathrooms",
                                1,
                                fields=["avg_bedrooms", "avg_bathrooms"],
                            ),
                            _leaf("p1-comma", ", ", 1),
                            _leaf(
                                "p1-sizes",
                                "house and lot sizes",
                                1,
                                fields=["avg_house_size", "avg_lot_size"],
                            ),
                            _leaf("p1-and-price", ", and price.", 1, fields=["avg_price"]),
                        ]
                    },
                    {
                        "items": [
                            _leaf(
                                "p1-mean",
                                f"Across all {dataset.row_count} zip codes the mean asking "
                                f"price is about ${mean_price:,.0f}",
                                2,
                                fields=["avg_price"],
                                values=[
                                    {"field": "avg_price", "value": mean_price, "stat": "mean"}
                                ],
                            ),
                            _leaf(
                                "p1-spread",
                                f", with a wide spread of roughly ${stdev_price:,.0f} "
                                "between the cheapest and priciest areas.",
                                2,
                                fields=["avg_price"],
                                values=[
                                    {"field": "avg_price", "value": stdev_price, "stat": "stdev"}
                                ],
                            ),
                        ]
                    },
                    {
                        "items": [
                            _leaf(
                                "p1-bigger",
                                "Bigger homes generally command higher prices.",
                                3,
                                fields=["avg_house_size", "avg_price"],
                            ),
                            _leaf(
                                "p1-question",
                                " The question is which neighborhoods balance space "
                                "against budget.",
                                4,
                            ),
                        ]
                    },
                ],
            }
        ]
    }
    return json.dumps(tree, indent=2)


def sizes_response(dataset: Dataset) -> str:
    """P2: high-level (L3/L4) follow-up about house and lot sizes."""
    tree = {
        "paragraphs": [
            {
                "id": "p2",
                "sentences": [
                    {
                        "items": [
                            _leaf(
                                "p2-why",
                                "For a family of four, interior space and a yard are "
                                "usually the deciding factors: ",
                                4,
                            )
                        ]
                    },
                    {
                        "items": [
                            _leaf(
                                "p2-cluster",
                                "larger houses and lots cluster in zip codes ",
                                3,
                                fields=["avg_house_size", "avg_lot_size"],
                            ),
                            _leaf(
                                "p2-family-zips",
                                "98105, 98112, and 98117",
                                3,
                                values=[
                                    {"field": "zip_code", "value": "98105"},
                                    {"field": "zip_code", "value": "98112"},
                                    {"field": "zip_code", "value": "98117"},
                                ],
                            ),
                            _leaf("p2-while", ", while ", 3),
                            _leaf(
                                "p2-downtown-zip",
                                "98101",
                                3,
                                values=[{"field": "zip_code", "value": "98101"}],
                            ),
                            _leaf(
                                "p2-downtown",
                                " trades square footage for downtown convenience.",
                                3,
                                fields=["avg_house_size"],
                            ),
                        ]
                    },
                    {
                        "items": [
                            _leaf(
                                "p2-afford",
                                "A more affordable option",
                                3,
                                fields=["avg_price"],
                            ),
                            _leaf(
                                "p2-tradeoff",
                                " usually means accepting a smaller lot, since lot size "
                                "and price climb together.",
                                3,
                                fields=["avg_lot_size", "avg_price"],
                            ),
                        ]
                    },
                ],
            }
        ]
    }
    return json.dumps(tree, indent=2)


def premium_response(dataset: Dataset) -> str:
    """P3: high-level (L3/L4) follow-up about the 98112 mark."""
    tree = {
        "paragraphs": [
            {
                "id": "p3",
                "sentences": [
                    {
                        "items": [
                            _leaf(
                                "p3-position",
                                "Zip code 98112 sits at the top of both scales: the most "
                                "bedrooms and bathrooms on average, and the highest prices "
                                "in the dataset.",
                                3,
                                fields=["avg_bedrooms", "avg_bathrooms", "avg_price"],
                                values=[{"field": "zip_code", "value": "98112"}],
                            )
                        ]
                    },
                    {
                        "items": [
                            _leaf(
                                "p3-verdict",
                                "It reads as the high-end enclave: plenty of room for a "
                                "family, at a premium that may stretch the budget.",
                                4,
                            )
                        ]
                    },
                ],
            }
        ]
    }
    return json.dumps(tree, indent=2)


def scenario_responses(dataset: Dataset) -> list[str]:
    """The three provider responses the script consumes, in call order."""
    return [opening_response(dataset), sizes_response(dataset), premium_response(dataset)]


def scenario_script(dataset: Dataset) -> ReplayScript:
    """The seven-step worked interaction (I1-I7).

    Packets are written exactly as the engine's own packet constructors
    would emit them for the corresponding selections.
    """
    mean_bar_title = "Average House Price"
    scatter_title = "Average Number of Bedrooms by Average Number of Bathrooms"
    steps = (
        # I1: text-to-text, "house and lot sizes" to Tell Me More
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.TEXT,
                level=SemanticLevel.L1,
                fields=("avg_house_size", "avg_lot_size"),
                text="house and lot sizes",
                origin_paragraph_id="p1",
            ),
            target=DropTarget.tell_me_more(),
        ),
        # I2: text-to-chart, "A more affordable option" to Show Me More
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.TEXT,
                level=SemanticLevel.L3,
                fields=("avg_price",),
                text="A more affordable option",
                origin_paragraph_id="p2",
            ),
            target=DropTarget.show_me_more(),
        ),
        # I3: text dropped on the price chart, highlighting 98101
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.TEXT,
                level=SemanticLevel.L3,
                keys=("98101",),
                text="98101",
                origin_paragraph_id="p2",
            ),
            target=DropTarget.chart("chart-1"),
        ),
        # I4: three more zip codes onto the same chart
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.TEXT,
                level=SemanticLevel.L3,
                keys=("98105", "98112", "98117"),
                text="98105, 98112, and 98117",
                origin_paragraph_id="p2",
            ),
            target=DropTarget.chart("chart-1"),
        ),
        # I5: "bedrooms and bathrooms" to Show Me More -> scatter plot
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.TEXT,
                level=SemanticLevel.L1,
                fields=("avg_bedrooms", "avg_bathrooms"),
                text="bedrooms and bathrooms",
                origin_paragraph_id="p1",
            ),
            target=DropTarget.show_me_more(),
        ),
        # I6: chart-to-chart, the 98112 bar dropped on the scatter plot
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.CHART,
                level=SemanticLevel.L2,
                fields=("avg_price",),
                keys=("98112",),
                text=f"98112 on {mean_bar_title}",
            ),
            target=DropTarget.chart("chart-2"),
        ),
        # I7: chart-to-text, the 98112 mark to Tell Me More
        ReplayStep(
            packet=DragPacket(
                source=PacketSource.CHART,
                level=SemanticLevel.L2,
                fields=("avg_bedrooms", "avg_bathrooms"),
                keys=("98112",),
                text=f"98112 on {scatter_title}",
            ),
            target=DropTarget.tell_me_more(),
        ),
    )
    return ReplayScript(dataset=dataset, goal=GOAL, steps=steps)


def scenario_provider(dataset: Dataset | None = None) -> ScriptedProvider:
    dataset = dataset or seattle_dataset()
    return ScriptedProvider(scenario_responses(dataset))


def run_scenario(
    provider: Provider | None = None, session_id: str | None = None
) -> tuple[Session, list[dict]]:
    """Replay the worked example; the default provider is the scripted one."""
    dataset = seattle_dataset()
    script = scenario_script(dataset)
    return replay(script, provider or scenario_provider(dataset), session_id=session_id)


def build_scenario_fixtures(directory: str | Path) -> list[str]:
    """Materialize the MockProvider fixture files for the worked example.

    Replays the script through a recording provider and writes one
    ``<digest>.json`` per provider call. Returns the digests in call order.
    """
    dataset = seattle_dataset()
    recorder = RecordingProvider(scenario_provider(dataset))
    replay(scenario_script(dataset), recorder)
    recorder.write_fixtures(Path(directory))
    return [digest for digest, _ in recorder.recorded]


def write_scenario_files(directory: str | Path) -> Path:
    """Write a self-contained demo folder: replay script plus mock fixtures.

    The script references the packaged CSV by absolute path, so the folder
    can be replayed from anywhere:

        strata replay <dir>/script.json --provider mock --fixtures <dir>/fixtures
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset = seattle_dataset()
    script = scenario_script(dataset)
    script_obj = script.to_json()
    script_obj["dataset"] = {
        "path": str(dataset_path()),
        "name": dataset.name,
        "nl_description": NL_DESCRIPTION,
        "key_field": "zip_code",
        "units": FIELD_UNITS,
        "descriptions": FIELD_DESCRIPTIONS,
    }
    script_path = directory / "script.json"
    script_path.write_text(json.dumps(script_obj, indent=2) + "\n", encoding="utf-8")
    build_scenario_fixtures(directory / "fixtures")
    return script_path
