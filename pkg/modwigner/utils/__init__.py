from .config_parser import parse_config, parse_state_spec
from .export_utils import export_wigner, plot_cylinders, read_wigner_csv, write_json, write_table

__all__ = [
    "parse_config",
    "parse_state_spec",
    "export_wigner",
    "plot_cylinders",
    "read_wigner_csv",
    "write_json",
    "write_table",
]
