from .settings import RunConfig, Settings, get_settings, load_config, load_env_file, parse_config

__all__ = ["RunConfig", "Settings", "get_settings", "load_config", "load_env_file", "parse_config"]
