"""
epinet: strategic SIS epidemics toolkit
=======================================

Mean-field and agent-based analysis of agents that choose how many links to
form while an SIS infection spreads over those links.

Modules:
--------
1. model_params, utility: model rates, population mixes and utility families
2. meanfield: stationary levels, thresholds and fixed-strategy dynamics
3. equilibrium: best responses, conjectural equilibria and their dynamics
4. protection: optimal immunization for fixed and strategic agents
5. efficiency: social optimum, price of anarchy and its bound
6. abm: event-driven agent-based simulation with seeded replicates
7. runner, epinet_cli: scenario files, sweeps, presets and CSV export
"""

__version__ = "1.0.0"
