##
## A simulator for RIS-assisted optical wireless links
##
## A reconfigurable intelligent surface (RIS) is a flat array of small
## reflecting pixels whose phases can be programmed, so that the beam
## from a transmitter bounces off the surface and adds up coherently at
## a receiver that has no direct line of sight.  In the optical band
## each pixel is many wavelengths across and acts like a tiny aperture
## with its own diffraction pattern, and the beam wanders with pointing
## jitter and atmospheric turbulence.  The receiver learns the cascaded
## channel from pilot symbols, feeds back a quantized copy over a slow
## uplink, and the surface adapts its phases to the estimate.
##
## This package models that chain end to end, from pixel optics to
## feedback overhead, and runs seeded Monte Carlo sweeps over it.
##
## The components of this package include:
## scenario       -- the scenario configuration (YAML) and its defaults.
## geometry       -- transmitter, pixel and receiver positions.
## pixel_optics   -- ideal and jitter-averaged pixel diffraction gains.
## turbulence     -- log-normal and Gamma-Gamma irradiance fading.
## channel        -- field gains, cascaded channel, noise and SNR.
## estimation     -- pilot matrices and least-squares estimation.
## feedback       -- quantizers, feedback payloads and frame budgets.
## phase_control  -- phase alignment and quantized gradient adaptation.
## montecarlo     -- experiment sweeps, replay and baselines.
## cli            -- the risowc command line tool.
## rerror         -- exception classes.
## rwarn          -- warning classes.
##
from .scenario import *
from .rerror import *
from .rwarn import *
