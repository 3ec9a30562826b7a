import copy
from pathlib import Path

import oyaml as yaml

DEFAULT_CONFIG_PATH = Path(__file__).parent / 'scope_sync_config.yaml'


def load_yaml_file(file):
    """
    Read yaml file into a Dictionary.
    Parameters
    ----------
    file : yaml file to load
    Returns
    -------
    dict
    """

    with open(file, 'r') as stream:
        try:
            return yaml.safe_load(stream) or {}
        except yaml.YAMLError as exc:
            print(exc)
            raise


def merge_sections(base, override):
    """Recursively overlay ``override`` on a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_sections(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(file=None):
    """
    Packaged defaults, optionally overlaid with a user yaml file.
    Parameters
    ----------
    file : str or Path, optional
    Returns
    -------
    dict
    """
    if file is None:
        return copy.deepcopy(config)
    return merge_sections(config, load_yaml_file(file))


config = load_yaml_file(DEFAULT_CONFIG_PATH)
