"""Published reference scores, surfaced in reports as context and never asserted.

They come from the licensed IEMOCAP / CMU-MOSEI / DAIC-WOZ corpora and are not
reproducible on the synthetic stand-ins.
"""

import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def reference_values():
    return json.loads(resources.files("emodep").joinpath("reference_values.json").read_text())


def reference_for(key):
    table = reference_values()["depression"]
    entry = table.get(key)
    return None if entry is None else {**entry, "note": "published value on licensed data; not reproduced here"}
