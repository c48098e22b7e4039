"""
Модули для работы с входными данными.
"""

from .loader import load_diffusion, load_form, load_json, load_rho, load_sequence, load_vectors, save_json
from .spec_parser import form_to_spec, parse_diffusion, parse_form, parse_sequence

__all__ = [
    "load_diffusion",
    "load_form",
    "load_json",
    "load_rho",
    "load_sequence",
    "load_vectors",
    "save_json",
    "form_to_spec",
    "parse_diffusion",
    "parse_form",
    "parse_sequence",
]
