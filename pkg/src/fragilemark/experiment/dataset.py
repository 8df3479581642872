"""Labelled revealed markers: certify every cover, manipulate, reveal, featurize.

Each (identity, spec) result is cached under a key built from content hashes
of the cover, marker and (for morphs) partner plus the engine parameters and
the grid cell id, so a changed input or grid cell never reuses a stale entry.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..engines import EmbedKey, engine_params, make_engine
from ..engines._layout import key_rng
from ..features import FEATURE_VERSION, extract_features
from ..imaging import RasterImage
from ..manipulations import ManipulationClass, ManipulationSpec, apply, derive_seed
from ..metrics import DEFAULT_PSNR_THRESHOLD, DEFAULT_SSIM_THRESHOLD, QualityReport, verify
from ..morphing import MorphAux
from .cache import DiskCache, digest, image_digest
from .corpus import Corpus, CorpusEntry

log = logging.getLogger(__name__)

PIPELINE_VERSION = 1
_PARTNER_TAG = 0x3A7


@dataclass
class Sample:
    identity: str
    spec: ManipulationSpec
    spec_index: int
    revealed: Optional[RasterImage]
    quality: Optional[QualityReport] = None
    features: Optional[np.ndarray] = None
    error: Optional[str] = None

    @property
    def label(self) -> ManipulationClass:
        return self.spec.cls

    @property
    def ok(self) -> bool:
        return self.error is None and self.features is not None


@dataclass
class Baseline:
    """Quality of the certified cover and of the marker revealed from it untouched."""

    identity: str
    certify: QualityReport
    recovery: QualityReport


@dataclass
class Dataset:
    engine: str
    samples: list[Sample] = field(default_factory=list)
    baselines: list[Baseline] = field(default_factory=list)
    failures: list[tuple[str, str, str]] = field(default_factory=list)


def morph_partners(identities: Sequence[str], key: int) -> dict[str, str]:
    """One partner per identity: its successor in a key-seeded shuffle of the corpus."""
    ids = sorted(identities)
    order = key_rng(key, _PARTNER_TAG).permutation(len(ids))
    ring = [ids[i] for i in order]
    return {ring[i]: ring[(i + 1) % len(ring)] for i in range(len(ring))}


@dataclass(frozen=True)
class _Job:
    entry: CorpusEntry
    partner: CorpusEntry
    engine: str
    delta: Optional[float]
    key: int
    specs: tuple[tuple[int, str, int], ...]  # (grid index, spec id, rng seed)
    marker: np.ndarray
    cache_root: Optional[str]
    thresholds: tuple[float, float]
    with_features: bool


def _run_job(job: _Job) -> tuple[Baseline, list[Sample], list[tuple[str, str, str]]]:
    from ..manipulations import parse_spec_id

    eng = make_engine(job.engine, job.delta)
    cache = DiskCache(job.cache_root) if job.cache_root else None
    marker = RasterImage(job.marker)
    cover = job.entry.cover()
    stego = eng.embed(job.key, cover, marker)
    ssim_t, psnr_t = job.thresholds
    base = Baseline(job.entry.identity, verify(cover, stego, ssim_t, psnr_t),
                    verify(marker, eng.reveal(job.key, stego), ssim_t, psnr_t))

    ctx = {"v": PIPELINE_VERSION, "engine": engine_params(eng), "key": job.key,
           "cover": image_digest(cover), "marker": image_digest(marker)}
    aux: Optional[MorphAux] = None
    aux_error: Optional[str] = None
    samples: list[Sample] = []
    failures = []
    for idx, spec_id, seed in job.specs:
        spec = parse_spec_id(spec_id, seed)
        item = dict(ctx, spec=spec_id, seed=seed if spec.stochastic else 0)
        try:
            if spec.cls is ManipulationClass.MORPH:
                if aux is None and aux_error is None:
                    la, lb = job.entry.landmarks(), job.partner.landmarks()
                    if la is None or lb is None:
                        aux_error = "landmarks missing for morph"
                    else:
                        aux = MorphAux(job.partner.cover(), la, lb)
                if aux_error:
                    raise FileNotFoundError(aux_error)
                assert aux is not None
                item.update(partner=image_digest(aux.partner),
                            lm=digest([aux.landmarks_a.points.tolist(), aux.landmarks_b.points.tolist()]))
            rkey = digest(item)
            revealed = cache.get_image(rkey) if cache else None
            if revealed is None:
                revealed = eng.reveal(job.key, apply(spec, stego, aux))
                if cache:
                    cache.put_image(rkey, revealed)
            feats = None
            if job.with_features:
                fkey = digest({"revealed": rkey, "features": FEATURE_VERSION})
                feats = cache.get_array(fkey) if cache else None
                if feats is None:
                    feats = extract_features(marker, revealed)
                    if cache:
                        cache.put_array(fkey, feats)
            samples.append(Sample(job.entry.identity, spec, idx, revealed,
                                  verify(marker, revealed, ssim_t, psnr_t), feats))
        except Exception as exc:  # recorded per entry; the run carries on
            msg = f"{type(exc).__name__}: {exc}"
            log.warning("%s %s failed: %s", job.entry.identity, spec_id, msg)
            samples.append(Sample(job.entry.identity, spec, idx, None, error=msg))
            failures.append((job.entry.identity, spec_id, msg))
    return base, samples, failures


def build_dataset(corpus: Corpus, engine: str, key: Union[EmbedKey, int],
                  grid: Sequence[ManipulationSpec], *, noise_seed: int = 0,
                  cache_dir: Optional[Union[str, Path]] = None, workers: int = 1,
                  delta: Optional[float] = None,
                  thresholds: tuple[float, float] = (DEFAULT_SSIM_THRESHOLD, DEFAULT_PSNR_THRESHOLD),
                  with_features: bool = True, keep_images: bool = False) -> Dataset:
    """One sample per (identity, grid cell) plus one baseline per identity.

    Output does not depend on ``workers``: every stage is a pure function of
    its inputs and stochastic cells draw from per-(identity, cell) seeds.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    seed = key.seed if isinstance(key, EmbedKey) else EmbedKey(int(key)).seed
    marker = corpus.marker()
    partners = morph_partners(corpus.identities, seed)
    by_id = {e.identity: e for e in corpus.entries}
    jobs = []
    for e in corpus.entries:
        specs = tuple((i, s.id, derive_seed(noise_seed, e.identity, i)) for i, s in enumerate(grid))
        jobs.append(_Job(e, by_id[partners[e.identity]], str(engine), delta, seed, specs,
                         np.asarray(marker.pixels), str(cache_dir) if cache_dir else None,
                         (float(thresholds[0]), float(thresholds[1])), with_features))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]

    ds = Dataset(str(engine))
    for base, samples, failures in results:
        ds.baselines.append(base)
        if not keep_images:
            for s in samples:
                s.revealed = None
        ds.samples.extend(samples)
        ds.failures.extend(failures)
    return ds
