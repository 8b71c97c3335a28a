"""
Module: schemas.py
Description: Pydantic schemas of the JSON manifests written and read by the CLI

External Dependencies:
- pydantic: https://docs.pydantic.dev/

Sample Input:
>>> PredictionRecord.model_validate({"image_id": "scene_000", "class": "circle", "score": 0.9,
...                                  "node_id": 3, "bbox": [10, 12, 20, 20], "mask": "scene_000_0.pgm"})

Expected Output:
>>> PredictionRecord(image_id='scene_000', class_label='circle', score=0.9, node_id=3, bbox=[10, 12, 20, 20], ...)

Example Usage:
>>> PredictionManifest(instances=[record]).model_dump(by_alias=True)
"""

# hashseg/schemas.py

from pydantic import BaseModel, ConfigDict, Field

from .config import MANIFEST_FORMAT_VERSION


class PredictionRecord(BaseModel):
    """One instance mask written by `segment`"""
    model_config = ConfigDict(populate_by_name=True)

    image_id: str
    class_label: str = Field(..., alias='class', description="Detector class of the instance")
    score: float = Field(..., ge=0.0, le=1.0)
    node_id: int = Field(..., ge=0, description="Hierarchy region the mask came from")
    bbox: list[int] = Field(..., min_length=4, max_length=4, description="Tight box [x, y, w, h] of the mask")
    mask: str = Field(..., description="Mask PGM path relative to the manifest")


class ImageSummary(BaseModel):
    """Per-image counts of a segment run"""
    image_id: str
    detections: int
    instances: int
    regions_indexed: int
    fallbacks: int = Field(0, description="Boxes resolved by an exhaustive scan")


class PredictionManifest(BaseModel):
    """Manifest listing every mask of a segment run"""
    format_version: int = MANIFEST_FORMAT_VERSION
    params: dict[str, float | int | bool] = Field(default_factory=dict)
    images: list[ImageSummary] = Field(default_factory=list)
    instances: list[PredictionRecord] = Field(default_factory=list)


class GroundTruthImage(BaseModel):
    """Instance-label PGM of one image and the class of each label value"""
    image_id: str
    labels: str = Field(..., description="Label PGM path relative to the manifest")
    instances: dict[int, str] = Field(..., description="Label value -> class name; other values are ignored")


class GroundTruthManifest(BaseModel):
    format_version: int = MANIFEST_FORMAT_VERSION
    images: list[GroundTruthImage]


class SceneRecord(BaseModel):
    """Files of one synthetic scene, relative to the fixture directory"""
    image_id: str
    image: str
    hierarchy: str
    shapes: int


class SynthManifest(BaseModel):
    format_version: int = MANIFEST_FORMAT_VERSION
    seed: int
    width: int
    height: int
    jitter: int
    scenes: list[SceneRecord]
    detections: str
    ground_truth: str
