"""Pick-and-drop flow on the simulated arm.

Dwell selections drive the state machine: selecting a source region runs
the scripted pick (travel height, lower, close gripper, lift); the drop
region then appears and the symmetric drop sequence returns the flow to
await-pick.  The session log shows the strict pick/drop alternation.
"""
from gazearm.gaze import SelectionEvent
from gazearm.harness import PickDropRuntime, build_scene
from gazearm.hri import UiController, UiState

scene = build_scene()
ui = UiController(UiState.initial(scene.display))
spots = {"source-a": (-5.0, 8.0), "source-b": (5.0, 8.0), "drop": (0.0, 14.0)}
runner = PickDropRuntime(scene=scene, controller=ui, spots=spots)

ui.handle(SelectionEvent("pick-drop", 1.0, 500.0))
print("screen:", ui.state.screen, "phase:", ui.state.phase)

for source in ("source-a", "source-b"):
    t = scene.clock.now_ms()
    actions = ui.handle(SelectionEvent(source, t + 1.0, 500.0))
    print(f"\nselected {source}: actions {actions}")
    runner.run_pick(source)
    tip = scene.sim.tip
    print(f"  picked at tip ({tip.x_cm:.2f}, {tip.y_cm:.2f}, {tip.z_cm:.2f}) cm, "
          f"gripper closed: {scene.sim.joint_state.gripper_closed}")
    t = scene.clock.now_ms()
    ui.handle(SelectionEvent("drop", t + 1.0, 500.0))
    runner.run_drop()
    tip = scene.sim.tip
    print(f"  dropped at tip ({tip.x_cm:.2f}, {tip.y_cm:.2f}, {tip.z_cm:.2f}) cm, "
          f"gripper closed: {scene.sim.joint_state.gripper_closed}")

print("\nsession log:")
for e in ui.log:
    print(f"  {e.t_ms:9.0f} ms  {e.kind:8s} {e.payload}")

order = [e.kind for e in ui.log if e.kind in ("pick", "drop")]
print("\npick/drop order:", order)
assert order == ["pick", "drop", "pick", "drop"]
