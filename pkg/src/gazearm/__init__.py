"""Desk-scale gaze teleoperation for a 4-DoF arm.

Subsystems: gaze conditioning and dwell selection (`gaze`), the 9-block
gaze classifier with smooth-pursuit calibration (`blocks`), arm geometry
and vertical-motion kinematics (`arm`), display-to-workspace calibration
(`mapping`), delay-split motion planning (`planner`), the HRI state
machine and task protocols (`hri`), the simulated servo backend (`sim`),
experiment harnesses (`harness`), and the websocket gateway (`gateway`).
"""

__version__ = "0.1.0"
