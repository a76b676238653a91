import json
import logging
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

logger = logging.getLogger(__name__)


def numpy_array_encoder(obj):
    """Custom JSON encoder for NumPy arrays and scalars."""
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": True, "data": obj.tolist(), "shape": obj.shape, "dtype": str(obj.dtype)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"Object of type '{type(obj).__name__}' is not JSON serializable")


def numpy_array_decoder(dct):
    """Custom JSON decoder for NumPy arrays."""
    if dct.get("__ndarray__"):
        return np.array(dct["data"], dtype=dct.get("dtype")).reshape(dct["shape"])
    return dct


def dumps(obj):
    """Canonical JSON text (sorted keys), newline terminated."""
    return json.dumps(obj, default=numpy_array_encoder, sort_keys=True, indent=1) + "\n"


def save_object(obj, filename):
    """Saves a Python object, including NumPy arrays, to a JSON file."""
    try:
        Path(filename).write_text(dumps(obj), encoding="utf-8")
    except (OSError, TypeError, ValueError) as ex:
        raise CheckpointError(f"Error during JSON serialization of {filename}: {ex}") from None
    return filename


def load_object(filename):
    """Loads a Python object, including NumPy arrays, from a JSON file."""
    try:
        with open(filename, "r", encoding="utf-8") as f:
            return json.load(f, object_hook=numpy_array_decoder)
    except (OSError, json.JSONDecodeError) as ex:
        raise CheckpointError(f"Error during JSON deserialization of {filename}: {ex}") from None
