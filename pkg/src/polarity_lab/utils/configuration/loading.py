from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from pydantic.v1 import ValidationError

from polarity_lab.core.exceptions import ConfigValidationError, OutputError, ParseError
from polarity_lab.utils.configuration.run_config import RunConfig


def _load_document(text: str) -> Dict[str, Any]:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ParseError(problem, mark.line + 1, mark.column + 1) from exc
        raise ParseError(problem) from exc
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ParseError(
            f"expected an object at the top level, got {type(document).__name__}"
        )
    return document


def validation_violations(exc: ValidationError) -> ConfigValidationError:
    """Converts a pydantic validation error into one listing every violation.

    Args:
        exc (ValidationError): The error raised by a configuration model.

    Returns:
        ConfigValidationError: The violations keyed by dotted field path.
    """
    return ConfigValidationError(
        (".".join(str(part) for part in error["loc"]), error["msg"])
        for error in exc.errors()
    )


def parse_config(
    text: str, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Parses and validates a JSON (or YAML) configuration document.

    An empty document or object yields the default configuration. Top-level
    overrides, such as a seed given on the command line, replace the values in
    the document before validation.

    Args:
        text (str): The document.
        overrides (Optional[Mapping[str, Any]]): Top-level values to force.

    Returns:
        RunConfig: The validated configuration with defaults filled in.

    Raises:
        ParseError: If the document is not well formed.
        ConfigValidationError: Listing every violated invariant.
    """
    document = _load_document(text)
    document.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.parse_obj(document)
    except ValidationError as exc:
        raise validation_violations(exc) from exc


def read_config(
    config_path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Reads and validates a configuration file.

    Args:
        config_path (Union[str, Path]): The path to the configuration file.
        overrides (Optional[Mapping[str, Any]]): Top-level values to force.

    Returns:
        RunConfig: The validated configuration.
    """
    try:
        with open(config_path, "r") as config_file:
            text = config_file.read()
    except OSError as exc:
        raise OutputError(config_path, f"cannot read configuration: {exc}") from exc
    return parse_config(text, overrides)
