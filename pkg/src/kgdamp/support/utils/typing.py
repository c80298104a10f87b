"""Custom types for pydantic models.

i.e. allow serialization of numpy arrays.
https://github.com/pydantic/pydantic/issues/7017
"""

import numpy as np
from pydantic import BeforeValidator, PlainSerializer
from typing_extensions import Annotated


def nd_array_before_validator(x):
    # lists coming from JSON become float arrays
    if isinstance(x, np.ndarray):
        return x
    return np.asarray(x, dtype=float)


def nd_array_serializer(x):
    return np.asarray(x).tolist()


NdArray = Annotated[
    np.ndarray,
    BeforeValidator(nd_array_before_validator),
    PlainSerializer(nd_array_serializer, return_type=list),
]
