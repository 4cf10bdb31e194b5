from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer, model_validator

# Complex scalars travel as [re, im] pairs in every file format.
ComplexPair = tuple[float, float]


def pair_of(z: complex) -> ComplexPair:
    z = complex(z)
    return (float(z.real), float(z.imag))


def complex_of(pair: ComplexPair | list[float] | complex) -> complex:
    if isinstance(pair, (complex, float, int)):
        return complex(pair)
    re, im = pair
    return complex(float(re), float(im))


class MatrixDocument(BaseModel):
    """Interchange form of a dense complex matrix: row-major [re, im] entries."""

    rows: int = Field(ge=0, description="Number of rows")
    cols: int = Field(ge=0, description="Number of columns")
    entries: list[ComplexPair] = Field(description="Row-major entries as [re, im] pairs")

    @model_validator(mode="after")
    def check_entry_count(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"Expected {self.rows * self.cols} entries for a {self.rows}x{self.cols} matrix, "
                f"got {len(self.entries)}"
            )
        return self

    def to_array(self) -> np.ndarray:
        flat = np.array([complex(re, im) for re, im in self.entries], dtype=np.complex128)
        return flat.reshape(self.rows, self.cols)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "MatrixDocument":
        array = np.asarray(array, dtype=np.complex128)
        return cls(
            rows=array.shape[0],
            cols=array.shape[1],
            entries=[pair_of(z) for z in array.reshape(-1)],
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise ValueError("Matrix entries must be finite (no NaN/Inf)")
    array.flags.writeable = False
    return array


def parse_complex_matrix(value: Any) -> np.ndarray:
    if isinstance(value, MatrixDocument):
        return _frozen(value.to_array())
    if isinstance(value, dict):
        return _frozen(MatrixDocument(**value).to_array())
    array = np.array(value, copy=True)
    # nested lists with [re, im] leaves
    if array.ndim == 3 and array.shape[-1] == 2 and not np.iscomplexobj(array):
        array = array[..., 0] + 1j * array[..., 1]
    array = array.astype(np.complex128)
    if array.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got shape {array.shape}")
    return _frozen(array)


def parse_complex_vector(value: Any) -> np.ndarray:
    if isinstance(value, np.ndarray):
        array = np.array(value, dtype=np.complex128, copy=True)
    elif len(value) == 0:
        array = np.zeros(0, dtype=np.complex128)
    else:
        array = np.array([complex_of(z) for z in value], dtype=np.complex128)
    if array.ndim != 1:
        raise ValueError(f"Expected a 1-D vector, got shape {array.shape}")
    return _frozen(array)


def dump_complex_matrix(array: np.ndarray) -> dict:
    return MatrixDocument.from_array(array).model_dump()


def dump_complex_vector(array: np.ndarray) -> list:
    return [list(pair_of(z)) for z in array]


ComplexMatrix = Annotated[
    np.ndarray,
    BeforeValidator(parse_complex_matrix),
    PlainSerializer(dump_complex_matrix, return_type=dict),
]
ComplexVector = Annotated[
    np.ndarray,
    BeforeValidator(parse_complex_vector),
    PlainSerializer(dump_complex_vector, return_type=list),
]
