"""Recurrent-network anti-jamming simulation toolkit.

Modules: :mod:`spectrum` (channels, fading, slot engine), :mod:`jammers`,
:mod:`sensing`, :mod:`neural` (numpy GRU + BPTT), :mod:`sc1` and
:mod:`sc2` (the two scenarios), :mod:`dql` (baseline), :mod:`analytics`
(ergodic-rate integrals) and :mod:`cli`.
"""

__version__ = "0.1.0"
