"""Pipeline orchestration: simulate -> sample -> generate -> render -> peaks -> evaluate.

Every stage is also reachable as a standalone CLI subcommand; this module
holds the shared stage implementations so the pipeline and the subcommands
produce identical artifacts for identical seeds. All randomness derives
from the single top-level seed via labeled derivation (stage name plus
variant index), so inserting a stage never reshuffles another stage's
stream.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .datagen import (
    GenConfig,
    dataset_events,
    generate_dataset,
    read_manifest,
    read_pair_events,
    sample_partial_labels,
)
from .errors import ConfigError, DataError, FlipforgeError
from .heatmap import (
    DEFAULT_NMS_RADIUS,
    DEFAULT_PEAK_THRESHOLD,
    DEFAULT_SIGMA,
    Detection,
    extract_peaks,
    load_heatmap,
    render_targets,
    save_detections,
    save_heatmap,
)
from .imagecore import (
    AnnotationSet,
    Sequence,
    load_annotations,
    load_sequence,
    save_annotations,
    save_sequence,
)
from .metrics import MatchConfig, match, score
from .seeding import derive_seed
from .simulate import SimConfig, simulate

CONFIG_FORMAT_VERSION = "flipforge-config-v1"
SUMMARY_FORMAT_VERSION = "flipforge-summary-v1"

STAGE_ORDER = ("simulate", "sample_labels", "generate", "render", "peaks", "evaluate")
_STAGE_REQUIRES = {
    "simulate": None,
    "sample_labels": "simulate",
    "generate": "simulate",
    "render": "generate",
    "peaks": "render",
    "evaluate": "peaks",
}

EVALUATE_TARGETS = ("pasted", "simulated")


class StageError(FlipforgeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _dataclass_from_mapping(cls, mapping: dict, where: str):
    """Build a config dataclass from JSON data, rejecting unknown keys."""
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected an object, got {type(mapping).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class SampleSpec:
    """Label subsampling request: exactly one mode, or a missing-rate sweep."""

    n_shot: int | None = None
    missing_rate: float | None = None
    missing_rates: list[float] | None = None

    def __post_init__(self) -> None:
        modes = [
            self.n_shot is not None,
            self.missing_rate is not None,
            self.missing_rates is not None,
        ]
        if sum(modes) != 1:
            raise ValueError(
                "pass exactly one of n_shot, missing_rate, or missing_rates"
            )
        if self.missing_rates is not None and len(self.missing_rates) == 0:
            raise ValueError("missing_rates must be non-empty")


@dataclass
class PipelineConfig:
    seed: int = 0
    out: str | None = None
    stages: tuple[str, ...] = STAGE_ORDER
    sim: SimConfig = None
    sample: SampleSpec | None = None
    gen: GenConfig = None
    render_sigma: float = DEFAULT_SIGMA
    peak_threshold: float = DEFAULT_PEAK_THRESHOLD
    nms_radius: float = DEFAULT_NMS_RADIUS
    match_cfg: MatchConfig = None
    evaluate_against: str = "pasted"
    raw: dict | None = None  # verbatim config echo for provenance

    def __post_init__(self) -> None:
        if self.sim is None:
            self.sim = SimConfig()
        if self.gen is None:
            self.gen = GenConfig()
        if self.match_cfg is None:
            self.match_cfg = MatchConfig()
        present = set()
        for name in self.stages:
            if name not in STAGE_ORDER:
                raise ConfigError(f"unknown stage {name!r}")
            needs = _STAGE_REQUIRES[name]
            if needs is not None and needs not in present:
                raise ConfigError(f"stage {name!r} requires {needs!r} earlier in the list")
            present.add(name)
        if list(self.stages) != [s for s in STAGE_ORDER if s in present]:
            raise ConfigError(f"stages must follow the order {STAGE_ORDER}")
        if self.evaluate_against not in EVALUATE_TARGETS:
            raise ConfigError(f"evaluate.against must be one of {EVALUATE_TARGETS}")
        if self.sample is not None and "sample_labels" not in self.stages:
            raise ConfigError("a sample_labels section requires the sample_labels stage")


def parse_pipeline_config(doc: dict, where: str = "config") -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    version = doc.get("format_version", CONFIG_FORMAT_VERSION)
    if version != CONFIG_FORMAT_VERSION:
        raise ConfigError(
            f"{where}: format_version {version!r} unsupported (need {CONFIG_FORMAT_VERSION!r})"
        )
    known = {
        "format_version",
        "seed",
        "out",
        "stages",
        "simulate",
        "sample_labels",
        "generate",
        "render",
        "peaks",
        "evaluate",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")

    render_sec = dict(doc.get("render", {}))
    if set(render_sec) - {"sigma"}:
        raise ConfigError(f"{where}.render: unknown keys {sorted(set(render_sec) - {'sigma'})}")
    peaks_sec = dict(doc.get("peaks", {}))
    if set(peaks_sec) - {"threshold", "nms_radius"}:
        raise ConfigError(
            f"{where}.peaks: unknown keys {sorted(set(peaks_sec) - {'threshold', 'nms_radius'})}"
        )
    eval_sec = dict(doc.get("evaluate", {}))
    if set(eval_sec) - {"spatial_tol", "temporal_tol", "against"}:
        raise ConfigError(
            f"{where}.evaluate: unknown keys "
            f"{sorted(set(eval_sec) - {'spatial_tol', 'temporal_tol', 'against'})}"
        )
    against = eval_sec.pop("against", "pasted")

    sample = None
    if "sample_labels" in doc:
        sample = _dataclass_from_mapping(SampleSpec, doc["sample_labels"], f"{where}.sample_labels")

    return PipelineConfig(
        seed=int(doc.get("seed", 0)),
        out=doc.get("out"),
        stages=tuple(doc.get("stages", STAGE_ORDER)),
        sim=_dataclass_from_mapping(SimConfig, doc.get("simulate", {}), f"{where}.simulate"),
        sample=sample,
        gen=_dataclass_from_mapping(GenConfig, doc.get("generate", {}), f"{where}.generate"),
        render_sigma=float(render_sec.get("sigma", DEFAULT_SIGMA)),
        peak_threshold=float(peaks_sec.get("threshold", DEFAULT_PEAK_THRESHOLD)),
        nms_radius=float(peaks_sec.get("nms_radius", DEFAULT_NMS_RADIUS)),
        match_cfg=_dataclass_from_mapping(MatchConfig, eval_sec, f"{where}.evaluate"),
        evaluate_against=against,
        raw=doc,
    )


def load_pipeline_config(path: Path | str) -> PipelineConfig:
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: malformed JSON: {exc}") from exc
    return parse_pipeline_config(doc, where=str(p))


def write_simulation(sim_cfg: SimConfig, out_dir: Path | str) -> tuple[Sequence, AnnotationSet]:
    """Simulate and persist frames/ plus gt.json under out_dir."""
    seq, ann = simulate(sim_cfg)
    out = Path(out_dir)
    save_sequence(seq, out / "frames")
    save_annotations(ann, out / "gt.json")
    return seq, ann


def render_dataset_heatmaps(
    dataset_dir: Path | str,
    sigma: float,
    out_dir: Path | str,
    workers: int = 1,
) -> int:
    """Render each pair's pasted events to h%06d.hmap (+ source_t sidecar)."""
    root = Path(dataset_dir)
    manifest = read_manifest(root)
    width, height = manifest["width"], manifest["height"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = manifest["pairs"]

    def _one(record: dict):
        doc = read_pair_events(root / record["path"])
        events = [(float(e["x"]), float(e["y"])) for e in doc["events"]]
        return record["index"], doc["source_t"], render_targets(events, width, height, sigma)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rendered = list(ex.map(_one, records))
    else:
        rendered = [_one(r) for r in records]

    for index, source_t, hm in rendered:
        save_heatmap(hm, out / f"h{index:06d}.hmap")
        sidecar = {"source_t": source_t}
        with open(out / f"h{index:06d}.json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return len(rendered)


def peaks_from_heatmaps(
    heatmaps_dir: Path | str,
    threshold: float = DEFAULT_PEAK_THRESHOLD,
    nms_radius: float = DEFAULT_NMS_RADIUS,
) -> list[Detection]:
    """Decode every *.hmap in a directory, stamping t from the sidecars."""
    root = Path(heatmaps_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"heatmap directory not found: {root}")
    detections: list[Detection] = []
    hmap_paths = sorted(root.glob("*.hmap"))
    if not hmap_paths:
        raise DataError(f"no .hmap files in {root}")
    for hmap_path in hmap_paths:
        sidecar = hmap_path.with_suffix(".json")
        if not sidecar.exists():
            raise DataError(f"missing sidecar {sidecar.name} for {hmap_path.name}")
        with open(sidecar, encoding="utf-8") as fh:
            meta = json.load(fh)
        if "source_t" not in meta:
            raise DataError(f"{sidecar}: missing source_t")
        hm = load_heatmap(hmap_path)
        detections.extend(
            extract_peaks(hm, threshold=threshold, nms_radius=nms_radius, t=int(meta["source_t"]))
        )
    return detections


def _run_stage(name: str, fn):
    try:
        return fn()
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(cfg: PipelineConfig, out_dir: Path | str, workers: int = 1) -> dict:
    """Execute the configured stage list; returns (and writes) the summary.

    The summary records the derived per-stage seeds and, per run variant,
    label counts and the metrics report. Output trees are byte-identical
    across reruns of the same config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages = cfg.stages
    stage_seeds: dict[str, int] = {}

    seq = ann = None
    if "simulate" in stages:
        sim_seed = derive_seed(cfg.seed, "simulate")
        stage_seeds["simulate"] = sim_seed
        sim_cfg = replace(cfg.sim, seed=sim_seed)
        _run_stage("simulate", lambda: write_simulation(sim_cfg, out / "sim"))
        # downstream stages consume the persisted artifacts (16-bit frames),
        # exactly as the standalone subcommands do
        seq = _run_stage("simulate", lambda: load_sequence(out / "sim" / "frames"))
        ann = _run_stage("simulate", lambda: load_annotations(out / "sim" / "gt.json"))

    if cfg.sample is not None and cfg.sample.missing_rates is not None:
        variants = [
            (out / f"sweep_{i:02d}", SampleSpec(missing_rate=r), i)
            for i, r in enumerate(cfg.sample.missing_rates)
        ]
    else:
        variants = [(out, cfg.sample, 0)]

    runs = []
    for vdir, sample_spec, index in variants:
        run: dict = {
            "variant": index,
            "dir": str(vdir.relative_to(out)) if vdir != out else ".",
            "stage_seeds": {},
        }
        labels = ann
        if "sample_labels" in stages and sample_spec is not None:
            s_seed = derive_seed(cfg.seed, "sample_labels", index)
            run["stage_seeds"]["sample_labels"] = s_seed
            kwargs = (
                {"n_shot": sample_spec.n_shot}
                if sample_spec.n_shot is not None
                else {"missing_rate": sample_spec.missing_rate}
            )
            run.update(kwargs)
            labels = _run_stage(
                "sample_labels",
                lambda: sample_partial_labels(ann, **kwargs, seed=s_seed),
            )
            _run_stage("sample_labels", lambda: save_annotations(labels, vdir / "labels.json"))
            run["n_labels_total"] = len(ann)
            run["n_labels_kept"] = len(labels)

        if "generate" in stages:
            g_seed = derive_seed(cfg.seed, "generate", index)
            run["stage_seeds"]["generate"] = g_seed
            gen_cfg = replace(cfg.gen, seed=g_seed)
            manifest = _run_stage(
                "generate",
                lambda: generate_dataset(seq, labels, gen_cfg, vdir / "dataset", workers=workers),
            )
            run["n_pairs"] = len(manifest["pairs"])
            run["n_pasted_events"] = sum(p["n_events"] for p in manifest["pairs"])

        if "render" in stages:
            _run_stage(
                "render",
                lambda: render_dataset_heatmaps(
                    vdir / "dataset", cfg.render_sigma, vdir / "heatmaps", workers=workers
                ),
            )

        detections = None
        if "peaks" in stages:
            detections = _run_stage(
                "peaks",
                lambda: peaks_from_heatmaps(
                    vdir / "heatmaps", cfg.peak_threshold, cfg.nms_radius
                ),
            )
            _run_stage("peaks", lambda: save_detections(detections, vdir / "detections.json"))
            run["n_detections"] = len(detections)

        if "evaluate" in stages:
            if cfg.evaluate_against == "pasted":
                gt = _run_stage("evaluate", lambda: dataset_events(vdir / "dataset"))
            else:
                gt = ann.events
            report = _run_stage(
                "evaluate", lambda: score(match(gt, detections, cfg.match_cfg))
            )
            run["metrics"] = report.as_dict()

        runs.append(run)

    summary = {
        "format_version": SUMMARY_FORMAT_VERSION,
        "seed": cfg.seed,
        "stages": list(stages),
        "stage_seeds": stage_seeds,
        "config": cfg.raw,
        "runs": runs,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
