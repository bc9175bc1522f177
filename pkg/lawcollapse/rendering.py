"""Human-readable command output rendered from Jinja2 templates."""

import math
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from lawcollapse.models import DiscreteLaw, UniformSample

templates_path = Path(__file__).parent / "templates"


def format_number(value: Any) -> str:
    """Compact, deterministic text for numbers, samples and laws."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return f"{round(value, 12) + 0.0:.12g}"
    if isinstance(value, UniformSample):
        return "(" + ", ".join(format_number(v) for v in value.values) + ")"
    if isinstance(value, DiscreteLaw):
        atoms = ", ".join(f"{format_number(v)}:{format_number(p)}" for v, p in value.atoms)
        return "{" + atoms + "}"
    if isinstance(value, list | tuple | frozenset | set):
        items = sorted(value) if isinstance(value, frozenset | set) else value
        return "{" + ", ".join(format_number(v) for v in items) + "}"
    return str(value)


environment = Environment(
    loader=FileSystemLoader(templates_path),
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
    undefined=StrictUndefined,
)
environment.filters["num"] = format_number


def render(template_name: str, **context: Any) -> str:
    return environment.get_template(template_name).render(**context)
