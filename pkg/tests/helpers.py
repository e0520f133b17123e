from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "demos" / "data"
ONTOLOGY_TEXT = (DATA / "ontology.tgd").read_text(encoding="utf-8")
