"""Binary (P5) 8-bit PGM frames, read and written through Pillow."""
import io

import numpy as np
import PIL.Image

from ..exceptions import FormatError, InvalidArgumentError


def encode_pgm(pixels):
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise InvalidArgumentError(f'PGM needs a 2-D uint8 image, got {pixels.dtype} {pixels.shape}')
    buffer = io.BytesIO()
    # Pillow's PPM writer emits P5 for mode L
    PIL.Image.fromarray(np.ascontiguousarray(pixels)).save(buffer, format='PPM')
    return buffer.getvalue()


def write_pgm(path, pixels):
    """Write one frame; returns the file bytes."""
    data = encode_pgm(pixels)
    with open(path, 'wb') as handle:
        handle.write(data)
    return data


def decode_pgm(data, path=None, shape=None):
    """
    Decode an 8-bit grayscale PGM.
    Parameters
    ----------
    data : bytes
    path : str or Path, optional
        Reported in errors.
    shape : tuple, optional
        Expected (height, width).
    Returns
    -------
    numpy.ndarray
        (height, width) uint8.
    """
    try:
        with PIL.Image.open(io.BytesIO(data), formats=['PPM']) as image:
            image.load()
            if image.mode != 'L':
                raise FormatError(f'expected an 8-bit grayscale PGM, got mode {image.mode}', path=path)
            pixels = np.array(image, dtype=np.uint8)
    except FormatError:
        raise
    except (OSError, ValueError, SyntaxError) as exc:
        raise FormatError(f'unreadable PGM ({exc})', path=path) from exc
    if shape is not None and pixels.shape != tuple(shape):
        raise FormatError(f'frame is {pixels.shape[1]}x{pixels.shape[0]}, expected {shape[1]}x{shape[0]}',
                          path=path)
    return pixels


def read_pgm(path, shape=None):
    """Frame pixels and the raw file bytes."""
    try:
        with open(path, 'rb') as handle:
            data = handle.read()
    except FileNotFoundError as exc:
        raise FormatError('missing frame file', path=path) from exc
    return decode_pgm(data, path=path, shape=shape), data
