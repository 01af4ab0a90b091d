"""
canvas_psd: thread counting and weave fingerprints from canvas radiographs

Two ways to count the threads of a painting's canvas:

    swatch DFT peaks  -> per-swatch density/angle maps -> histogram statistics
    averaged PSD      -> peak lattice -> spectral triangle -> m, n, f_v, f_h

plus a four-feature fingerprint of the averaged PSD for comparing canvases.

Core constraints:
- Every output is in threads/cm; the pixel resolution is mandatory input
- Deterministic: the same image and config give byte-identical reports
- Synthetic weaves with known ground truth are the test oracle
"""

__version__ = "0.1.0"
