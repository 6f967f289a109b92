"""Shear-wall layout studio.

Pipeline: DXF floor plans -> semantic rasters -> LoRA training sets ->
diffusion-generated candidates -> vectorized wall graphs -> seismic and
geometric metrics -> review/edit -> solver export.
"""

__version__ = "0.1.0"
