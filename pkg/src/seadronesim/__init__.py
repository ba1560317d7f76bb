"""Synthetic aerial maritime imagery: path-traced scenes of floating objects
with pixel-exact ground-truth masks, COCO annotations, and detection metrics."""

__version__ = "0.1.0"

from .annotate import (BBox, FrameRecord, build_coco, mask_to_bbox, mask_to_rle,
                       rle_decode, validate_coco, write_meta_sidecar)
from .campaign import (CampaignSpec, DatasetManifest, MixSpec, RenderJob,
                       plan_campaign, resize_with_annotations, run_campaign,
                       split_dataset)
from .cocoeval import (ApReport, Detection, average_precision, evaluate, iou,
                       load_detections, match_detections)
from .errors import (CocoValidationError, ConfigError, MeshError, RenderError,
                     SceneError, SeaDroneSimError)
from .geometry import TriangleMesh, builtin_mesh, load_mesh, save_obj
from .render import (FrameMeta, RenderOutput, RenderSettings, id_pass,
                     render_frame, tone_map, transmittance)
from .scene import (CameraRig, MeshInstance, Scene, SceneSpec, WaterMedium,
                    assemble_scene, place_camera, water_preset)
