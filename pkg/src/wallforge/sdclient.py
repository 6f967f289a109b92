"""Stable-Diffusion-Web-UI REST client (img2img + ControlNet conditioning).

Talks to {base_url}/sdapi/v1/img2img with the ControlNet unit passed under
alwayson_scripts, images base64 PNG both ways. Request bodies are serialized
canonically (sorted keys, compact separators) so they can be golden-tested
byte for byte; a transcript-replaying transport makes the module fully
testable offline.

Transcript fixture format (JSON): a list of
    {"method": "POST"|"GET", "url": "...", "request": <body or null>,
     "status": <int>, "response": <body>}
entries matched by (method, url, canonical request body).
"""

from __future__ import annotations

import base64
import itertools
import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Dict, List, Optional, Protocol, Sequence, Tuple, Union

from .errors import ApiError, DecodeFailure, GridTooLarge, MalformedResponse, Unreachable
from .raster import SemanticRaster, encode_png, rgb_from_png
from .vectorize import classify_pixels

RANDOM_SEED = -1          # Web-UI convention for "pick a seed server-side"
MAX_BATCH = 16
MAX_STEPS = 150
MAX_GRID_POINTS = 64

SWEEPABLE_FIELDS = ("sampler", "steps", "cfg_scale", "control_weight",
                    "lora_weight", "lora_name")


@dataclass(frozen=True)
class ApiEndpoint:
    base_url: str
    timeout: float = 60.0
    max_parallel: int = 2

    def __post_init__(self):
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")

    def url(self, path: str) -> str:
        return self.base_url.rstrip("/") + path


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    condition_image: SemanticRaster
    negative_prompt: str = ""
    lora_name: str = ""
    lora_weight: float = 0.8
    sampler: str = "Euler a"
    steps: int = 30
    cfg_scale: float = 7.0
    seed: Union[int, str] = "random"     # int, or "random"
    batch: int = 4
    control_weight: float = 1.0
    denoising_strength: float = 0.75

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not (1 <= self.batch <= MAX_BATCH):
            raise ValueError(f"batch must be in [1, {MAX_BATCH}]")
        if not (1 <= self.steps <= MAX_STEPS):
            raise ValueError(f"steps must be in [1, {MAX_STEPS}]")
        if not (0.0 <= self.lora_weight <= 1.5):
            raise ValueError("lora_weight must be in [0, 1.5]")
        if not (0.0 <= self.control_weight <= 2.0):
            raise ValueError("control_weight must be in [0, 2]")


@dataclass
class Candidate:
    id: int
    raster: SemanticRaster
    seed: int


@dataclass
class CandidateSet:
    request_echo: GenerationRequest
    candidates: List[Candidate]
    created_at: str = ""

    def __eq__(self, other) -> bool:
        # created_at is wall-clock provenance, excluded from equality
        return (isinstance(other, CandidateSet)
                and self.request_echo == other.request_echo
                and self.candidates == other.candidates)


@dataclass
class ServerInfo:
    samplers: List[str]
    loras: List[str]


@dataclass
class SweepResult:
    params: Dict[str, object]
    status: str                       # "ok" | "error"
    candidate_set: Optional[CandidateSet] = None
    error: Optional[str] = None


class Transport(Protocol):
    def get(self, url: str, timeout: float) -> Tuple[int, bytes]: ...
    def post(self, url: str, body: bytes, timeout: float) -> Tuple[int, bytes]: ...


class HttpTransport:
    """Real HTTP transport; connection problems surface as Unreachable."""

    def get(self, url: str, timeout: float) -> Tuple[int, bytes]:
        import httpx
        try:
            resp = httpx.get(url, timeout=timeout)
        except httpx.HTTPError as exc:
            raise Unreachable(f"GET {url}: {exc}")
        return resp.status_code, resp.content

    def post(self, url: str, body: bytes, timeout: float) -> Tuple[int, bytes]:
        import httpx
        try:
            resp = httpx.post(url, content=body,
                              headers={"Content-Type": "application/json"},
                              timeout=timeout)
        except httpx.HTTPError as exc:
            raise Unreachable(f"POST {url}: {exc}")
        return resp.status_code, resp.content


class TranscriptTransport:
    """Offline transport replaying a recorded (request, response) transcript."""

    def __init__(self, entries: Sequence[dict]):
        self.entries = list(entries)

    @staticmethod
    def load(path) -> "TranscriptTransport":
        with open(path) as f:
            return TranscriptTransport(json.load(f))

    def _match(self, method: str, url: str, body: Optional[bytes]) -> Tuple[int, bytes]:
        for entry in self.entries:
            if entry["method"] != method or entry["url"] != url:
                continue
            expected = entry.get("request")
            if expected is None and body is None:
                pass
            elif expected is not None and body is not None:
                if canonical_json(expected).encode() != body:
                    continue
            else:
                continue
            return int(entry["status"]), canonical_json(entry["response"]).encode()
        raise Unreachable(f"no transcript entry for {method} {url}")

    def get(self, url: str, timeout: float) -> Tuple[int, bytes]:
        return self._match("GET", url, None)

    def post(self, url: str, body: bytes, timeout: float) -> Tuple[int, bytes]:
        return self._match("POST", url, body)


def canonical_json(obj) -> str:
    """Stable serialization used for request bodies and transcript matching."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_img2img_payload(req: GenerationRequest) -> dict:
    """The documented request schema for /sdapi/v1/img2img."""
    condition_b64 = base64.b64encode(encode_png(req.condition_image)).decode("ascii")
    prompt = req.prompt
    if req.lora_name:
        prompt = f"{prompt} <lora:{req.lora_name}:{req.lora_weight}>"
    return {
        "init_images": [condition_b64],
        "prompt": prompt,
        "negative_prompt": req.negative_prompt,
        "seed": RANDOM_SEED if req.seed == "random" else int(req.seed),
        "sampler_name": req.sampler,
        "steps": req.steps,
        "cfg_scale": req.cfg_scale,
        "denoising_strength": req.denoising_strength,
        "batch_size": req.batch,
        "n_iter": 1,
        "width": req.condition_image.width,
        "height": req.condition_image.height,
        "send_images": True,
        "save_images": False,
        "alwayson_scripts": {
            "controlnet": {
                "args": [
                    {
                        "input_image": condition_b64,
                        "module": "none",
                        "model": "control_scribble",
                        "weight": req.control_weight,
                        "resize_mode": "Just Resize",
                        "guidance_start": 0.0,
                        "guidance_end": 1.0,
                    }
                ]
            }
        },
    }


class DiffusionClient:
    """Thread-safe client; in-flight requests bounded by endpoint.max_parallel."""

    def __init__(self, endpoint: ApiEndpoint, transport: Optional[Transport] = None):
        self.endpoint = endpoint
        self.transport = transport or HttpTransport()
        self._gate = threading.Semaphore(endpoint.max_parallel)

    # -- capability probe --

    def health_check(self) -> ServerInfo:
        samplers = self._get_names("/sdapi/v1/samplers")
        loras = self._get_names("/sdapi/v1/loras")
        return ServerInfo(samplers=samplers, loras=loras)

    def _get_names(self, path: str) -> List[str]:
        with self._gate:
            status, body = self.transport.get(self.endpoint.url(path),
                                              self.endpoint.timeout)
        if status != 200:
            raise ApiError(status, body.decode("utf-8", "replace"))
        try:
            items = json.loads(body)
            return [item["name"] for item in items]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise MalformedResponse(f"GET {path}: {exc}")

    # -- generation --

    def generate_candidates(self, req: GenerationRequest) -> CandidateSet:
        payload = build_img2img_payload(req)
        body = canonical_json(payload).encode()
        with self._gate:
            status, resp_body = self.transport.post(
                self.endpoint.url("/sdapi/v1/img2img"), body, self.endpoint.timeout)
        if status != 200:
            raise ApiError(status, resp_body.decode("utf-8", "replace"))
        try:
            doc = json.loads(resp_body)
            images = doc["images"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise MalformedResponse(f"img2img response: {exc}")
        if not isinstance(images, list):
            raise MalformedResponse("img2img response: images is not a list")
        if len(images) == req.batch + 1:
            images = images[1:]            # leading grid image
        if len(images) != req.batch:
            raise MalformedResponse(
                f"expected {req.batch} images, got {len(images)}")
        seeds = self._extract_seeds(doc, req)
        candidates = []
        for i, b64 in enumerate(images):
            try:
                rgb = rgb_from_png(base64.b64decode(b64))
            except Exception as exc:
                raise DecodeFailure(i, f"candidate {i}: {exc}")
            raster = classify_pixels(rgb, scale=req.condition_image.scale)
            candidates.append(Candidate(id=i, raster=raster, seed=seeds[i]))
        return CandidateSet(
            request_echo=req, candidates=candidates,
            created_at=datetime.now(timezone.utc).isoformat())

    @staticmethod
    def _extract_seeds(doc: dict, req: GenerationRequest) -> List[int]:
        info = doc.get("info")
        if isinstance(info, str):
            try:
                info = json.loads(info)
            except json.JSONDecodeError:
                info = None
        if isinstance(info, dict):
            all_seeds = info.get("all_seeds")
            if isinstance(all_seeds, list) and len(all_seeds) >= req.batch:
                return [int(s) for s in all_seeds[:req.batch]]
            if "seed" in info:
                return [int(info["seed"]) + i for i in range(req.batch)]
        base = RANDOM_SEED if req.seed == "random" else int(req.seed)
        return [base + i if base != RANDOM_SEED else RANDOM_SEED
                for i in range(req.batch)]

    # -- parameter sweeps --

    def sweep_parameters(self, base_req: GenerationRequest,
                         grid: Dict[str, Sequence[object]]) -> List[SweepResult]:
        """One CandidateSet per grid point, lexicographic over sorted field
        names; per-point failures are reported, not raised."""
        for name in grid:
            if name not in SWEEPABLE_FIELDS:
                raise ValueError(f"field {name!r} is not sweepable")
        names = sorted(grid)
        combos = list(itertools.product(*(grid[n] for n in names))) if names else [()]
        if len(combos) > MAX_GRID_POINTS:
            raise GridTooLarge(f"{len(combos)} grid points exceeds {MAX_GRID_POINTS}")
        results: List[SweepResult] = []
        for combo in combos:
            params = dict(zip(names, combo))
            req = replace(base_req, **params)
            try:
                results.append(SweepResult(params=params, status="ok",
                                           candidate_set=self.generate_candidates(req)))
            except (Unreachable, ApiError, MalformedResponse, DecodeFailure) as exc:
                results.append(SweepResult(params=params, status="error", error=str(exc)))
        return results
