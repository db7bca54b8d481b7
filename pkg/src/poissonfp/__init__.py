"""Fixed-outline floorplanning with a Poisson potential-energy density penalty."""
from .kernels import BACKEND
from .model import Floorplan, ModuleSpec, Netlist, Outline, Rect, RectArrays, Terminal

__all__ = ["BACKEND", "Floorplan", "ModuleSpec", "Netlist", "Outline", "Rect", "RectArrays", "Terminal"]
__version__ = "0.1.0"
